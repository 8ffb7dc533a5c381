"""Jost solutions and the scattering matrices S(k), T(k) and S_line(k).

All three matrices have diagonal 2x2 blocks, so each is computed as two
independent 2x2 Zakharov-Shabat transports (index pairs (0,2) and (1,3)).
The transports use a fourth-order Magnus step built from three consecutive
samples (Simpson nodes), with closed-form exponentials of traceless 2x2
matrices.  Integration always runs from the normalisation end inwards.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .akns import BoundaryData, HalfLinePotential, RedundantLinePotential
from .algebra import join_components, offdiag_block_residual

PUNCTURE = 1e-3
DET_TOL = 1e-8
ZERO_TOL = 1e-4


class DiscreteSpectrumError(ArithmeticError):
    """a(k) or d(k) came close to vanishing on the grid."""


class IntegrationError(ArithmeticError):
    pass


# -- spectral grid -----------------------------------------------------------

def quadrant(k):
    """Quadrant label 1..4 for off-axis points, 0 for points on R or iR."""
    k = np.asarray(k, dtype=complex)
    q = np.zeros(k.shape, dtype=int)
    re, im = k.real, k.imag
    q[(re > 0) & (im > 0)] = 1
    q[(re < 0) & (im > 0)] = 2
    q[(re < 0) & (im < 0)] = 3
    q[(re > 0) & (im < 0)] = 4
    return q


@dataclass(frozen=True)
class SpectralGrid:
    """Sample points closed under k -> -k and k -> k*."""

    k: np.ndarray
    neg: np.ndarray = field(repr=False)   # index of -k
    conj: np.ndarray = field(repr=False)  # index of k*

    @classmethod
    def build(cls, kmax=4.0, n=40, puncture=PUNCTURE, imag=True, fan=(np.pi / 4,), spacing="linear"):
        """Radii in (puncture, kmax] on R, optionally iR, and rays at the given angles in (0, pi/2)."""
        if spacing == "linear":
            v = np.linspace(kmax / n, kmax, n)
        else:
            v = np.geomspace(max(puncture, kmax / n**2), kmax, n)
        v = v[v > puncture]
        dirs = [1.0 + 0j]
        if imag:
            dirs.append(1j)
        dirs += [np.exp(1j * a) for a in fan]
        base = np.concatenate([d * v for d in dirs])
        # closure: k, -k, k*, -k*
        pts = np.concatenate([base, -base, np.conj(base), -np.conj(base)])
        k = _unique_exact(pts)
        lookup = {complex(z): i for i, z in enumerate(k)}
        neg = np.array([lookup[complex(-z)] for z in k])
        conj = np.array([lookup[complex(np.conj(z))] for z in k])
        return cls(k, neg, conj)

    @classmethod
    def real_axis(cls, kmax=4.0, n=40, puncture=PUNCTURE):
        return cls.build(kmax, n, puncture, imag=False, fan=())

    @property
    def quadrants(self):
        return quadrant(self.k)

    def index(self, mask):
        return np.flatnonzero(mask)


def _unique_exact(z):
    seen = {}
    for v in z:
        seen.setdefault(complex(v), None)
    return np.array(list(seen), dtype=complex)


# -- Magnus transport --------------------------------------------------------

def _expm_traceless(om):
    """exp of traceless 2x2 matrices (batched): cosh(s) 1 + sinh(s)/s om, s^2 = -det om."""
    a, b, c = om[..., 0, 0], om[..., 0, 1], om[..., 1, 0]
    s2 = a * a + b * c
    s = np.sqrt(s2)
    small = np.abs(s) < 1e-3
    s_safe = np.where(small, 1.0, s)
    sh = np.where(small, 1 + s2 / 6 + s2 * s2 / 120, np.sinh(s_safe) / s_safe)
    ch = np.cosh(s)
    out = np.empty_like(om)
    out[..., 0, 0] = ch + sh * a
    out[..., 1, 1] = ch - sh * a
    out[..., 0, 1] = sh * b
    out[..., 1, 0] = sh * c
    return out


def _comm(x, y):
    return x @ y - y @ x


def _transport(omega, gen, n, H, start_value=None):
    """Integrate mu' + i omega [sigma3, mu] = G(s) mu across samples n-1 -> 0.

    ``gen(i)`` returns the potential part G at sample i, shape (nk, 2, 2)
    or (2, 2).  ``H`` is the signed Magnus step (two sample spacings).
    Returns mu at sample 0, starting from the identity at sample n-1.
    """
    omega = np.asarray(omega, dtype=complex)
    nk = omega.shape[0]
    mu = np.broadcast_to(np.eye(2, dtype=complex), (nk, 2, 2)).copy() if start_value is None else start_value.copy()
    free = np.zeros((nk, 2, 2), dtype=complex)
    free[:, 0, 0] = -1j * omega
    free[:, 1, 1] = 1j * omega
    right = np.exp(1j * omega * H)  # e^{i omega H sigma3}, diagonal
    g_hi = gen(n - 1)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n - 1, 1, -2):
            g_mid, g_lo = gen(i - 1), gen(i - 2)
            b0 = H * free + (H / 6) * (g_hi + 4 * g_mid + g_lo)
            b1 = (H / 12) * (g_lo - g_hi)
            if b1.ndim == 2:
                b1 = np.broadcast_to(b1, b0.shape)
            E = _expm_traceless(b0 - _comm(b0, b1))
            mu = E @ mu
            mu[:, :, 0] *= right[:, None]
            mu[:, :, 1] /= right[:, None]
            g_hi = g_lo
    return mu


def _x_columns_ok(k):
    # first column (tilde a, tilde b) lives in Im k <= 0, second in Im k >= 0
    im = np.asarray(k).imag
    return im <= 0, im >= 0


def _t_columns_ok(k):
    # (tilde A, tilde B) analytic in D2 u D4, (A, B) in D1 u D3 (closures)
    k = np.asarray(k, dtype=complex)
    s = k.real * k.imag  # >= 0 on closure of D1 u D3
    return s <= 0, s >= 0


def _x_generator(q, r):
    def gen(i):
        g = np.zeros((2, 2), dtype=complex)
        g[0, 1] = q[i]
        g[1, 0] = r[i]
        return g
    return gen


def integrate_x(p: HalfLinePotential, k, stride=1):
    """mu_3(0, k) for the half-line potential; returns (nk, 4, 4).

    ``stride`` subsamples the grid (used for the Richardson estimate).
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    h = p.h * stride
    comps = []
    for q, r in ((p.q1, p.r1), (p.q2, p.r2)):
        q, r = q[::stride], r[::stride]
        if (q.size - 1) % 2:
            raise IntegrationError("grid cannot be split into Simpson pairs at this stride")
        comps.append(_transport(k, _x_generator(q, r), q.size, -2 * h))
    mu = np.stack(comps, axis=1)
    S = join_components(mu)
    return _check_finite(_mask_columns_4(S, k, _x_columns_ok))


def _mask_columns_4(S, k, column_ok):
    S = S.copy()
    ok0, ok1 = column_ok(k)
    S[np.ix_(~ok0, range(4), range(2))] = np.nan
    S[np.ix_(~ok1, range(4), range(2, 4))] = np.nan
    return S


def _check_finite(S):
    # only on-domain entries must be finite; NaN marks masked columns
    bad = np.isinf(S)
    if np.any(bad):
        raise IntegrationError("non-finite Jost solution values inside the analyticity domain")
    return S


def _t_generator(bd: BoundaryData, k, c):
    q, qx = bd.G0[:, c], bd.G1[:, c]
    r, rx = bd.H0[:, c], bd.H1[:, c]
    k = np.asarray(k, dtype=complex)

    def gen(i):
        g = np.empty((k.size, 2, 2), dtype=complex)
        qr = q[i] * r[i]
        g[:, 0, 0] = -1j * qr
        g[:, 1, 1] = 1j * qr
        g[:, 0, 1] = 2 * k * q[i] + 1j * qx[i]
        g[:, 1, 0] = 2 * k * r[i] - 1j * rx[i]
        return g
    return gen


def integrate_t(bd: BoundaryData, k, stride=1):
    """mu_1(0, k) from the boundary data, normalised to 1 at t = T."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    n = (bd.G0.shape[0] - 1) // stride + 1
    if (n - 1) % 2:
        raise IntegrationError("time grid cannot be split into Simpson pairs at this stride")
    sub = BoundaryData(bd.T, bd.G0[::stride], bd.G1[::stride], bd.H0[::stride], bd.H1[::stride])
    comps = [_transport(2 * k * k, _t_generator(sub, k, c), n, -2 * sub.dt) for c in (0, 1)]
    T = join_components(np.stack(comps, axis=1))
    return _check_finite(_mask_columns_4(T, k, _t_columns_ok))


def compute_S_line(rp: RedundantLinePotential, k, stride=1):
    """S_line(k) = lim_{x -> -L} e^{ikx Sigma3} Psi_+(x, k) e^{-ikx Sigma3}."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    L = rp.L
    comps = []
    for c in (0, 1):
        # closed grid -L..L; x = L is the periodic image of x = -L
        q = np.append(rp.Q[:, c], rp.Q[0, c])[::stride]
        r = np.append(rp.R[:, c], rp.R[0, c])[::stride]
        if (q.size - 1) % 2:
            raise IntegrationError("grid cannot be split into Simpson pairs at this stride")
        h = 2 * L / (q.size - 1)
        mu = _transport(k, _x_generator(q, r), q.size, -2 * h)
        # conjugate by e^{-ikL sigma3} ... e^{ikL sigma3}
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(-1j * k * L)
            mu[:, 0, 1] *= e * e
            mu[:, 1, 0] /= e * e
        comps.append(mu)
    S = join_components(np.stack(comps, axis=1))
    return _check_finite(_mask_columns_4(S, k, _x_columns_ok))


# -- containers --------------------------------------------------------------

def diag_entries(block):
    """(..., 2, 2) diagonal block -> (..., 2)."""
    return np.stack([block[..., 0, 0], block[..., 1, 1]], axis=-1)


@dataclass(frozen=True)
class ScatteringMatrix:
    """A sampled 4x4 scattering matrix with diagonal 2x2 blocks.

    Blocks are named after S(k) = [[tilde a, b], [tilde b, a]]; the same
    layout serves T(k) = [[tilde A, B], [tilde B, A]] and S_line(k).
    """

    k: np.ndarray
    M: np.ndarray
    kind: str = "S"
    error: float = float("nan")

    @property
    def at(self):
        return diag_entries(self.M[:, :2, :2])

    @property
    def b(self):
        return diag_entries(self.M[:, :2, 2:])

    @property
    def bt(self):
        return diag_entries(self.M[:, 2:, :2])

    @property
    def a(self):
        return diag_entries(self.M[:, 2:, 2:])

    def det(self):
        with np.errstate(invalid="ignore"):
            return np.linalg.det(self.M)

    def det_residual(self, mask=None):
        d = self.det()
        if mask is not None:
            d = d[mask]
        d = d[np.isfinite(d)]
        return float(np.max(np.abs(d - 1), initial=0.0))

    def structure_residual(self):
        M = np.where(np.isfinite(self.M), self.M, 0)
        return offdiag_block_residual(M)

    def to_json(self):
        recs = []
        for z, m in zip(self.k, self.M):
            recs.append({"k": [float(z.real), float(z.imag)],
                         "S": [[[float(v.real), float(v.imag)] if np.isfinite(v) else None for v in row]
                               for row in m]})
        return json.dumps({"kind": self.kind, "records": recs})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        k = np.array([complex(*r["k"]) for r in d["records"]])
        M = np.array([[[complex(*v) if v is not None else np.nan for v in row] for row in r["S"]]
                      for r in d["records"]], dtype=complex)
        return cls(k, M, d.get("kind", "S"))


def compute_S(p: HalfLinePotential, k, estimate_error=True):
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    S = integrate_x(p, k)
    err = float("nan")
    if estimate_error and (p.q1.size - 1) % 4 == 0:
        err = _richardson(S, integrate_x(p, k, stride=2))
    return ScatteringMatrix(k, S, "S", err)


def compute_T(bd: BoundaryData, k, estimate_error=True):
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    T = integrate_t(bd, k)
    err = float("nan")
    if estimate_error and (bd.G0.shape[0] - 1) % 4 == 0:
        err = _richardson(T, integrate_t(bd, k, stride=2))
    return ScatteringMatrix(k, T, "T", err)


def compute_line(rp: RedundantLinePotential, k, estimate_error=True):
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    S = compute_S_line(rp, k)
    err = float("nan")
    if estimate_error and rp.N % 4 == 0:
        err = _richardson(S, compute_S_line(rp, k, stride=2))
    return ScatteringMatrix(k, S, "S_line", err)


def _richardson(fine, coarse):
    d = np.abs(fine - coarse)
    d = d[np.isfinite(d)]
    return float(np.max(d, initial=0.0) / 15.0)


def check_no_zeros(S: ScatteringMatrix, tol=ZERO_TOL):
    """Abort if det a(k) or det tilde a(k) nearly vanishes (solitonless assumption)."""
    for name, v in (("a", S.a), ("tilde a", S.at)):
        d = np.prod(v, axis=-1)
        d = np.abs(d[np.isfinite(d)])
        if d.size and d.min() < tol:
            raise DiscreteSpectrumError(f"min |det {name}(k)| = {d.min():.2e} < {tol:.0e}: discrete spectrum suspected")
