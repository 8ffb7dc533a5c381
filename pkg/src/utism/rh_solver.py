"""Numerical Riemann-Hilbert problems and potential reconstruction.

Convention: a contour is a union of oriented straight panels; ``M_+`` is the
boundary value from the left of the orientation, ``M_-`` from the right, and
the jump reads ``M_- = M_+ J``.  Writing ``M = 1 + C[u]`` with the Cauchy
transform ``C`` and the density ``u = M_+ - M_-`` gives the Nystrom system

    M_+ = 1 + C_+[M_+ (1 - J)].

The Cauchy transform of the density is integrated panel by panel: each
panel carries p Gauss-Legendre nodes, the density is expanded in Legendre
polynomials, and the Cauchy integrals of the Legendre polynomials are exact
(three-term recurrence) for targets on or near the panel.  Distant targets
use an upsampled Gauss rule.

All jumps here have diagonal 2x2 blocks, so every 4x4 problem is solved as
two independent 2x2 problems (see ``algebra.split_components``).
"""

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy import linalg as sla

from .algebra import I3, SIGMA3, join_components, split_components

K_MAX = 30.0
CLOSURE = 2.0
OUTER_KMAX = 9.0
# relative node density per segment: most nodes go to the axis rays inside
# the closing radius, where the half-line jumps are O(1/k) and oscillate
DENSITY = {"R+": 4.0, "R-": 4.0, "iR+": 1.5, "iR-": 1.5, "C1": 1.0, "C4": 1.0,
           "R+out": 3.0, "R-out": 3.0}
NEAR = 1.6     # Bernstein radius below which the exact moments are used
UPSAMPLE = 3


class RHSolveError(ArithmeticError):
    pass


# -- contours ----------------------------------------------------------------

# Segment labels.  The four axis rays carry the half-line jumps; "R+out" and
# "R-out" are the real axis beyond the closing radius; "C1" and "C4" are the
# closing chords in D1 and D4.
AXIS_LABELS = ("R+", "iR+", "R-", "iR-")
REAL_LABELS = ("R+", "R-", "R+out", "R-out", "R")


@dataclass(frozen=True)
class Contour:
    """Oriented straight panels with p Gauss-Legendre nodes each."""

    a: np.ndarray        # panel start points
    b: np.ndarray        # panel end points
    label: np.ndarray    # segment label per panel
    p: int = 10
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def tau(self):
        return npleg.leggauss(self.p)[0]

    @property
    def nodes(self):
        c, h = 0.5 * (self.a + self.b), 0.5 * (self.b - self.a)
        return (c[:, None] + h[:, None] * self.tau[None, :]).ravel()

    @property
    def weights(self):
        """Complex line elements ds at the nodes."""
        h = 0.5 * (self.b - self.a)
        return (h[:, None] * npleg.leggauss(self.p)[1][None, :]).ravel()

    @property
    def node_label(self):
        return np.repeat(self.label, self.p)

    @property
    def size(self):
        return self.a.size * self.p

    def cauchy(self):
        """Principal-value Cauchy matrix at the nodes (cached)."""
        if "pv" not in self._cache:
            self._cache["pv"] = cauchy_matrix(self, self.nodes, on_contour=True)
        return self._cache["pv"]

    def to_json(self):
        return json.dumps({"p": self.p, "a": [[z.real, z.imag] for z in self.a],
                           "b": [[z.real, z.imag] for z in self.b], "label": self.label.tolist()})


def _segment(start, end, n_panels, label, radial=None):
    """Panels on [start, end]; with ``radial`` the breakpoints equidistribute
    the density radial(|k|) along the segment."""
    if radial is None:
        br = np.linspace(0.0, 1.0, n_panels + 1)
    else:
        u = np.linspace(0.0, 1.0, 2001)
        f = radial(np.abs(start + (end - start) * u))
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]))])
        br = np.interp(np.linspace(0.0, cum[-1], n_panels + 1), cum, u)
    z = start + (end - start) * br
    return z[:-1], z[1:], np.full(n_panels, label, dtype=object)


def _mass(start, end, radial):
    if radial is None:
        return abs(end - start)
    u = np.linspace(0.0, 1.0, 2001)
    return abs(end - start) * float(np.mean(radial(np.abs(start + (end - start) * u))))


def _grade(a, b, lab, corners, levels):
    """Split panels touching a corner dyadically toward it."""
    out_a, out_b, out_l = [], [], []
    for za, zb, lb in zip(a, b, lab):
        at_a = any(abs(za - c) < 1e-12 for c in corners)
        at_b = any(abs(zb - c) < 1e-12 for c in corners)
        br = [0.0, 1.0]
        for _ in range(levels if at_a or at_b else 0):
            if at_a:
                br.insert(1, br[1] / 2)
            if at_b:
                br.insert(-1, (1 + br[-2]) / 2)
        z = za + (zb - za) * np.array(br)
        out_a.extend(z[:-1]); out_b.extend(z[1:]); out_l.extend([lb] * (len(br) - 1))
    return np.array(out_a), np.array(out_b), np.array(out_l, dtype=object)


def _assemble(segments, nodes, p, density=None, radial=None, corners=(), levels=0):
    """Distribute about ``nodes`` nodes over the segments in proportion to
    the (optionally radially weighted) length times the per-label
    ``density`` weight (default 1), then grade toward ``corners``."""
    density = density or {}
    mass = np.array([_mass(s, e, radial) * density.get(lab, 1.0) for s, e, lab in segments])
    n_extra = levels * sum(sum(abs(z - c) < 1e-12 for z in (s, e)) for s, e, _ in segments
                           for c in corners)
    n_panels = max(len(segments), int(round(nodes / p)) - n_extra)
    counts = np.maximum(1, np.round(mass / mass.sum() * n_panels).astype(int))
    parts = [_segment(s, e, n, lab, radial) for (s, e, lab), n in zip(segments, counts)]
    a, b, lab = (np.concatenate(x) for x in zip(*parts))
    if levels:
        a, b, lab = _grade(a, b, lab, corners, levels)
    return Contour(a.astype(complex), b.astype(complex), lab, p)


def line_contour(kmax=12.0, nodes=1000, p=10):
    """The real line [-kmax, kmax], oriented left to right (+ side is Im k > 0)."""
    return _assemble([(-kmax, 0.0, "R"), (0.0, kmax, "R")], nodes, p)


def cross_contour(kmax=K_MAX, nodes=1000, p=10, closure=None, density=None, radial=None,
                  corner_levels=0):
    """R u iR with the orientations of the half-line problem.

    R+ and R- run outward from 0, iR+ and iR- run toward 0, so the left (+)
    side of every ray lies in D1 or D3.  With ``closure = K`` the axis rays
    stop at radius K, the chords K -> iK (in D1) and -iK -> K (in D4) are
    added, and the real axis continues to kmax.  Outside the chords the
    unknown is the deformed function, which jumps only across the real axis.
    """
    if closure is None:
        segs = [(0, kmax, "R+"), (1j * kmax, 0, "iR+"), (0, -kmax, "R-"), (-1j * kmax, 0, "iR-")]
    else:
        K = float(closure)
        if not 0 < K < kmax:
            raise ValueError("closure radius must lie in (0, kmax)")
        segs = [(0, K, "R+"), (1j * K, 0, "iR+"), (0, -K, "R-"), (-1j * K, 0, "iR-"),
                (K, 1j * K, "C1"), (-1j * K, K, "C4"), (K, kmax, "R+out"), (-K, -kmax, "R-out")]
    corners = (0.0,) if closure is None else (0.0, K, 1j * K, -1j * K)
    return _assemble(segs, nodes, p, density, radial, corners, corner_levels)


def halfline_contour(nodes=1000, p=10, closure=CLOSURE, kmax=OUTER_KMAX, corner_levels=2, decay=1.0):
    """Closed cross contour with the node layout used for the half-line problem.

    Beyond the closing radius the jump is the line jump, which decays like
    e^{-pi |k|}; panels thin out there on the length scale ``decay``.
    """
    K = closure

    def radial(r):
        return np.where(r <= K, 1.0, np.maximum(0.08, np.exp(-(r - K) / decay)))
    return cross_contour(kmax, nodes, p, closure, DENSITY, radial, corner_levels)


def real_line_part(contour: Contour):
    """Left-to-right line contour made of the real panels of ``contour`` (same nodes)."""
    real = np.isin(contour.label, REAL_LABELS)
    a, b = contour.a[real], contour.b[real]
    lo = np.where(a.real < b.real, a, b).real
    hi = np.where(a.real < b.real, b, a).real
    order = np.argsort(lo)
    return Contour(lo[order].astype(complex), hi[order].astype(complex),
                   np.full(order.size, "R", dtype=object), contour.p)


# -- Cauchy matrices -----------------------------------------------------------

def _bernstein(zeta):
    s = np.sqrt(zeta * zeta - 1 + 0j)
    return np.maximum(np.abs(zeta + s), np.abs(zeta - s))


def _legendre_cauchy(zeta, nmax, pv):
    """q_n(zeta) = int_{-1}^{1} P_n(t)/(t - zeta) dt for n < nmax.

    With ``pv`` the target is on (-1, 1) and the principal value is taken.
    """
    zeta = np.asarray(zeta, dtype=complex)
    q = np.empty(zeta.shape + (nmax,), dtype=complex)
    if pv:
        q[..., 0] = np.log((1 - zeta.real) / (1 + zeta.real))
    else:
        q[..., 0] = np.log((zeta - 1) / (zeta + 1))
    if nmax > 1:
        q[..., 1] = zeta * q[..., 0] + 2
    for n in range(1, nmax - 1):
        q[..., n + 1] = ((2 * n + 1) * zeta * q[..., n] - n * q[..., n - 1]) / (n + 1)
    return q


def cauchy_matrix(contour: Contour, targets, on_contour=False):
    """Matrix C with (1/2 pi i) int u(s)/(s - z_i) ds ~ sum_j C[i, j] u_j.

    With ``on_contour`` the targets must be the contour nodes (in order) and
    the principal value is returned for the panel containing each target.
    """
    targets = np.asarray(targets, dtype=complex)
    p = contour.p
    tau, w = npleg.leggauss(p)
    # values -> Legendre coefficients: c_n = (2n+1)/2 sum_j w_j P_n(t_j) u_j
    V = npleg.legvander(tau, p - 1)                      # (p, p): P_n(t_j)
    to_coef = (V * w[:, None]).T * ((2 * np.arange(p) + 1) / 2)[:, None]  # (n, j)
    tau_up, w_up = npleg.leggauss(UPSAMPLE * p)
    interp = npleg.legvander(tau_up, p - 1) @ to_coef     # (m, j)

    n_t = targets.size
    C = np.zeros((n_t, contour.size), dtype=complex)
    own_panel = np.full(n_t, -1)
    if on_contour:
        own_panel = np.repeat(np.arange(contour.a.size), p)
    for m, (a, b) in enumerate(zip(contour.a, contour.b)):
        c, h = 0.5 * (a + b), 0.5 * (b - a)
        zeta = (targets - c) / h
        cols = slice(m * p, (m + 1) * p)
        own = own_panel == m
        near = (_bernstein(zeta) < NEAR) & ~own
        far = ~(own | near)
        if np.any(far):
            C[far, cols] = (w_up[None, :] / (tau_up[None, :] - zeta[far, None])) @ interp
        if np.any(near):
            C[near, cols] = _legendre_cauchy(zeta[near], p, pv=False) @ to_coef
        if np.any(own):
            C[own, cols] = _legendre_cauchy(zeta[own], p, pv=True) @ to_coef
    return C / (2j * np.pi)


# -- jumps ---------------------------------------------------------------------

def phase(x, t, k):
    """theta(x, t, k) = k x + 2 k^2 t, the exponent carried by the jumps."""
    k = np.asarray(k, dtype=complex)
    return k * x + 2 * k * k * t


@dataclass(frozen=True)
class JumpField:
    """Per-node 4x4 jump matrices for one (x, t)."""

    J: np.ndarray    # (n, 4, 4)
    tag: np.ndarray  # per node, e.g. "J1", "J4", "J2inv", "Jline"
    x: float = 0.0
    t: float = 0.0


def _diag4(d):
    """(n, 2) diagonal entries -> (n, 2, 2) diagonal matrices."""
    out = np.zeros(d.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = d[..., 0]
    out[..., 1, 1] = d[..., 1]
    return out


def _block(tl, tr, bl, br):
    n = tl.shape[0]
    J = np.zeros((n, 4, 4), dtype=complex)
    J[:, :2, :2], J[:, :2, 2:], J[:, 2:, :2], J[:, 2:, 2:] = (_diag4(v) for v in (tl, tr, bl, br))
    return J


def jump_line(rho, rhot, k, x, t):
    """e^{-i theta Sigma3} J_line(k) e^{i theta Sigma3} with
    J_line = [[1, -rho], [rho~, 1 - rho rho~]] (rho, rho~ given as (n, 2) diagonals)."""
    e = np.exp(2j * phase(x, t, k))[:, None]
    one = np.ones_like(rho)
    return _block(one, -rho / e, rhot * e, one - rho * rhot)


def build_J_line(rho, rhot, contour: Contour, x, t):
    J = jump_line(rho, rhot, contour.nodes, x, t)
    return JumpField(J, np.full(contour.size, "Jline"), x, t)


def J1(Gamma, k, x, t):
    e = np.exp(2j * phase(x, t, k))[:, None]
    one, zero = np.ones_like(Gamma), np.zeros_like(Gamma)
    return _block(one, zero, Gamma * e, one)


def J3(Gammat, k, x, t):
    e = np.exp(2j * phase(x, t, k))[:, None]
    one, zero = np.ones_like(Gammat), np.zeros_like(Gammat)
    return _block(one, -Gammat / e, zero, one)


def J4(gamma, gammat, k, x, t):
    e = np.exp(2j * phase(x, t, k))[:, None]
    one = np.ones_like(gamma)
    return _block(one, -gamma / e, gammat * e, one - gamma * gammat)


def J4_inv(gamma, gammat, k, x, t):
    # J4 is unimodular with commuting diagonal blocks
    e = np.exp(2j * phase(x, t, k))[:, None]
    one = np.ones_like(gamma)
    return _block(one - gamma * gammat, gamma / e, -gammat * e, one)


def J2(ing, k, x, t):
    """J3 J4^{-1} J1 evaluated from the ingredients at k."""
    return (J3(ing["Gammat"], k, x, t) @ J4_inv(ing["gamma"], ing["gammat"], k, x, t)
            @ J1(ing["Gamma"], k, x, t))


def J2_inv_explicit(ing, k, x, t):
    """Closed form of J2^{-1} used in the deformation argument."""
    e = np.exp(2j * phase(x, t, k))[:, None]
    g = ing["gamma"] - ing["Gammat"]
    gt = ing["gammat"] - ing["Gamma"]
    one = np.ones_like(g)
    return _block(one, -g / e, gt * e, one - gt * g)


def J3_inv(Gammat, k, x, t):
    e = np.exp(2j * phase(x, t, k))[:, None]
    one, zero = np.ones_like(Gammat), np.zeros_like(Gammat)
    return _block(one, Gammat / e, zero, one)


def sample_ingredients(ingredients, contour: Contour):
    """Evaluate ``ingredients(k) -> dict`` once at the contour nodes."""
    out = ingredients(contour.nodes)
    return {n: np.asarray(out[n]) for n in ("gamma", "gammat", "Gamma", "Gammat")}


# segment label -> (tag, builder).  The closing chords carry J1 and J3^{-1};
# beyond the chords the deformed function jumps by J2^{-1} across R
# (written as J2 on R-out, whose + side is the lower half plane).
_BUILDERS = {
    "R+": ("J4", lambda g, k, x, t: J4(g["gamma"], g["gammat"], k, x, t)),
    "iR+": ("J1", lambda g, k, x, t: J1(g["Gamma"], k, x, t)),
    "R-": ("J2", lambda g, k, x, t: J2(g, k, x, t)),
    "iR-": ("J3", lambda g, k, x, t: J3(g["Gammat"], k, x, t)),
    "C1": ("J1", lambda g, k, x, t: J1(g["Gamma"], k, x, t)),
    "C4": ("J3inv", lambda g, k, x, t: J3_inv(g["Gammat"], k, x, t)),
    "R+out": ("J2inv", lambda g, k, x, t: J2_inv_explicit(g, k, x, t)),
    "R-out": ("J2", lambda g, k, x, t: J2(g, k, x, t)),
}


def build_J_quadrants(ing, contour: Contour, x, t):
    """Jumps of the half-line problem: J_l on the ray arg k = l pi / 2.

    ``ing`` maps gamma, gammat, Gamma, Gammat to (n, 2) arrays sampled at
    the contour nodes (see :func:`sample_ingredients`), or is a callable
    returning such a mapping for given k.
    """
    if callable(ing):
        ing = sample_ingredients(ing, contour)
    k = contour.nodes
    labels = contour.node_label
    J = np.empty((k.size, 4, 4), dtype=complex)
    tag = np.empty(k.size, dtype=object)
    for lab in np.unique(labels):
        if lab not in _BUILDERS:
            raise ValueError(f"no half-line jump for segment {lab!r}")
        sel = labels == lab
        name, build = _BUILDERS[lab]
        J[sel] = build({n: v[sel] for n, v in ing.items()}, k[sel], x, t)
        tag[sel] = name
    if not np.all(np.isfinite(J)):
        raise RHSolveError("non-finite jump values")
    return JumpField(J, tag, x, t)


# -- solver ----------------------------------------------------------------------

@dataclass
class RHSolution:
    contour: Contour
    Mp: np.ndarray       # (n, 4, 4) boundary values from the left (+)
    Mm: np.ndarray       # from the right (-)
    M1: np.ndarray       # (4, 4) coefficient of 1/k at infinity
    residual: float      # max over nodes of |M_- - M_+ J| (M_- from the Cauchy transform)
    density: np.ndarray = field(repr=False, default=None)
    x: float = 0.0
    t: float = 0.0

    def evaluate(self, z):
        """M at points off the contour."""
        C = cauchy_matrix(self.contour, z)
        return np.eye(4) + np.einsum("ij,jab->iab", C, self.density)

    def summary(self):
        return {"x": self.x, "t": self.t, "nodes": int(self.contour.size), "residual": self.residual,
                "M1": [[[float(v.real), float(v.imag)] for v in row] for row in self.M1]}


RCOND_MIN = 1e-13


def _system(Cp, D):
    """Matrix of w -> w - C_+[w D] acting on row vectors, unknown index (i, b)."""
    n = Cp.shape[0]
    A = -np.einsum("ij,jab->ibja", Cp, D).reshape(2 * n, 2 * n)
    A[np.diag_indices(2 * n)] += 1.0
    return A


def _solve_component(Cp, D):
    """Solve w = 1 + C_+[w D] for the 2x2 unknown w at every node."""
    n = Cp.shape[0]
    A = _system(Cp, D)
    # right-hand side per row r of the identity: delta_{rb} at every node
    B = np.tile(np.eye(2, dtype=complex), (n, 1))            # [(i, b), r]
    anorm = np.linalg.norm(A, 1)
    try:
        lu, piv = sla.lu_factor(A, check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise RHSolveError(f"singular integral operator: {exc}") from exc
    rcond, _ = sla.lapack.zgecon(lu, anorm, norm="1")
    if not rcond > RCOND_MIN:
        raise RHSolveError(f"near-singular integral operator (rcond {rcond:.1e})")
    X = sla.lu_solve((lu, piv), B)
    return X.reshape(n, 2, 2).transpose(0, 2, 1)             # [i, r, b]


def _neumann_component(Cp, D, tol, max_iter):
    n = Cp.shape[0]
    w = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()
    for it in range(max_iter):
        new = np.eye(2) + np.einsum("ij,jab->iab", Cp, w @ D)
        step = np.max(np.abs(new - w))
        w = new
        if step < tol:
            return w
        if not np.isfinite(step) or step > 1e6:
            break
    raise RHSolveError(f"Neumann iteration did not converge in {it + 1} steps")


def solve_rh(contour: Contour, jump: JumpField, method="direct", tol=1e-13, max_iter=200) -> RHSolution:
    """Nystrom solve of M_- = M_+ J with M -> 1 at infinity.

    ``method="neumann"`` iterates the integral equation instead of factoring
    it; it converges only for small jumps and serves as a cross-check.
    """
    J = jump.J
    if J.shape != (contour.size, 4, 4):
        raise ValueError("jump field does not match the contour")
    if method not in ("direct", "neumann"):
        raise ValueError(f"unknown method {method!r}")
    C = contour.cauchy()
    Cp = C + 0.5 * np.eye(contour.size)
    Cm = C - 0.5 * np.eye(contour.size)
    Jc = split_components(J)                     # (n, 2, 2, 2)
    wts = contour.weights
    Mp_c, Mm_c, u_c = [], [], []
    for c in (0, 1):
        D = np.eye(2) - Jc[:, c]
        if method == "direct":
            w = _solve_component(Cp, D)
        else:
            w = _neumann_component(Cp, D, tol, max_iter)
        u = w @ D
        Mp_c.append(w)
        Mm_c.append(np.eye(2) + np.einsum("ij,jab->iab", Cm, u))
        u_c.append(u)
    Mp = join_components(np.stack(Mp_c, axis=1))
    Mm = join_components(np.stack(Mm_c, axis=1))
    u = join_components(np.stack(u_c, axis=1))
    M1 = -np.einsum("j,jab->ab", wts, u) / (2j * np.pi)
    residual = float(np.max(np.abs(Mm - Mp @ J)))
    return RHSolution(contour, Mp, Mm, M1, residual, u, jump.x, jump.t)


def reconstruct_potential(sol_or_M1):
    """W = i [Sigma3, M1]."""
    M1 = sol_or_M1.M1 if isinstance(sol_or_M1, RHSolution) else np.asarray(sol_or_M1)
    return 1j * (SIGMA3 @ M1 - M1 @ SIGMA3)


def potential_entries(W):
    """Diagonal entries (q1, q2), (r1, r2) of the off-diagonal blocks of W."""
    return np.array([W[0, 2], W[1, 3]]), np.array([W[2, 0], W[3, 1]])


# -- deformation and equivalence ---------------------------------------------------

@dataclass
class DeformedSolution:
    """Boundary values on the real axis of the deformed half-line solution.

    ``above`` and ``below`` are the limits from Im k > 0 and Im k < 0 at the
    real nodes sorted left to right; ``M1`` is the 1/k coefficient computed
    from the real-axis jump alone.
    """

    k: np.ndarray
    weights: np.ndarray
    above: np.ndarray
    below: np.ndarray
    M1: np.ndarray
    imag_continuity: float
    x: float = 0.0
    t: float = 0.0


def deform_Mred(sol: RHSolution, ing) -> DeformedSolution:
    """Multiply by J1 in D1 and by J3^{-1} in D4; identity elsewhere.

    ``ing`` holds the ingredients sampled at the nodes of ``sol.contour``.
    Continuity across iR of the deformed function is the jump relation on
    the imaginary rays, measured with the independently computed M_-.
    """
    c = sol.contour
    k, lab, w = c.nodes, c.node_label, c.weights
    x, t = sol.x, sol.t
    real = np.isin(lab, REAL_LABELS)
    above = np.empty((k.size, 4, 4), dtype=complex)
    below = np.empty_like(above)
    sel = lab == "R+"
    if np.any(sel):
        above[sel] = sol.Mp[sel] @ J1(ing["Gamma"][sel], k[sel], x, t)
        below[sel] = sol.Mm[sel] @ J3_inv(ing["Gammat"][sel], k[sel], x, t)
    for name, (hi, lo) in {"R-": ("Mm", "Mp"), "R+out": ("Mp", "Mm"), "R-out": ("Mm", "Mp")}.items():
        sel = lab == name
        above[sel] = getattr(sol, hi)[sel]
        below[sel] = getattr(sol, lo)[sel]
    imag = np.isin(lab, ("iR+", "iR-"))
    if np.any(imag):
        Jimag = np.empty((imag.sum(), 4, 4), dtype=complex)
        kk = k[imag]
        up = lab[imag] == "iR+"
        Jimag[up] = J1(ing["Gamma"][imag][up], kk[up], x, t)
        Jimag[~up] = J3(ing["Gammat"][imag][~up], kk[~up], x, t)
        cont = float(np.max(np.abs(sol.Mm[imag] - sol.Mp[imag] @ Jimag)))
    else:
        cont = 0.0
    order = np.argsort(k[real].real)
    kr = k[real][order].real
    wr = np.abs(w[real][order])
    A, B = above[real][order], below[real][order]
    M1 = -np.einsum("j,jab->ab", wr, A - B) / (2j * np.pi)
    return DeformedSolution(kr, wr, A, B, M1, cont, x, t)


def check_equivalence(deformed: DeformedSolution, line_sol: RHSolution):
    """Sup over the real nodes of |M~_red - I3 M_line I3| (Frobenius), both from above."""
    kl = line_sol.contour.nodes.real
    if kl.shape != deformed.k.shape or np.max(np.abs(kl - deformed.k)) > 1e-12:
        raise ValueError("line and half-line solutions must share the real nodes")
    diff = deformed.above - I3 @ line_sol.Mp @ I3
    return float(np.max(np.linalg.norm(diff, axis=(-2, -1))))


# -- pipelines ----------------------------------------------------------------------

@dataclass
class EquivalenceRecord:
    x: float
    t: float
    M_residual: float          # sup-node |M~_red - I3 M_line I3|
    Q_residual: float          # |Q_line - sigma3 Q_red|
    imag_continuity: float
    M1_deformed_residual: float  # 1/k coefficients of M~_red and M_red
    jump_residual_red: float
    jump_residual_line: float
    q_line: np.ndarray = field(repr=False, default=None)
    q_red: np.ndarray = field(repr=False, default=None)
    r_line: np.ndarray = field(repr=False, default=None)
    r_red: np.ndarray = field(repr=False, default=None)

    def as_dict(self):
        out = {k: float(getattr(self, k)) for k in ("x", "t", "M_residual", "Q_residual", "imag_continuity",
                                                    "M1_deformed_residual", "jump_residual_red",
                                                    "jump_residual_line")}
        for name in ("q_line", "q_red", "r_line", "r_red"):
            v = getattr(self, name)
            out[name] = [[float(z.real), float(z.imag)] for z in v]
        return out


class EquivalenceSetup:
    """Both routes for one line potential: the half-line problem built from the
    embedded data (with the boundary data eliminated) and the line problem."""

    def __init__(self, lp, nodes=1000, p=10, **contour_kw):
        from .akns import embed_halfline_UT, embed_redundant_line
        from .direct_scattering import compute_S, compute_line
        from .symmetries import line_reflection, linearizable_ingredients

        self.potential = lp
        self.halfline = embed_halfline_UT(lp)
        self.contour = halfline_contour(nodes, p, **contour_kw)
        self.line_contour = real_line_part(self.contour)
        hp = self.halfline
        self.ingredient_fn = linearizable_ingredients(lambda k: compute_S(hp, k, estimate_error=False))
        self.ingredients = sample_ingredients(self.ingredient_fn, self.contour)
        S_line = compute_line(embed_redundant_line(lp), self.line_contour.nodes, estimate_error=False)
        self.rho, self.rhot = line_reflection(S_line)

    def solve_pair(self, x, t):
        red = solve_rh(self.contour, build_J_quadrants(self.ingredients, self.contour, x, t))
        line = solve_rh(self.line_contour, build_J_line(self.rho, self.rhot, self.line_contour, x, t))
        return red, line

    def compare(self, x, t):
        red, line = self.solve_pair(x, t)
        deformed = deform_Mred(red, self.ingredients)
        q_red, r_red = potential_entries(reconstruct_potential(red))
        q_line, r_line = potential_entries(reconstruct_potential(line))
        s3 = np.array([1.0, -1.0])
        qres = float(max(np.max(np.abs(q_line - s3 * q_red)), np.max(np.abs(r_line - s3 * r_red))))
        return EquivalenceRecord(
            float(x), float(t), check_equivalence(deformed, line), qres, deformed.imag_continuity,
            float(np.max(np.abs(deformed.M1 - red.M1))), red.residual, line.residual,
            q_line, q_red, r_line, r_red)


def reconstruct_line(rho, rhot, contour: Contour, xs, t=0.0):
    """q(x, t), r(x, t) from line reflection data sampled at the contour nodes.

    Returns arrays (nx,) of the first component of Q_line and R_line.
    """
    q = np.empty(len(xs), dtype=complex)
    r = np.empty(len(xs), dtype=complex)
    for i, x in enumerate(xs):
        sol = solve_rh(contour, build_J_line(rho, rhot, contour, x, t))
        qq, rr = potential_entries(reconstruct_potential(sol))
        q[i], r[i] = qq[0], rr[0]
    return q, r


def fields_csv(records):
    """CSV with columns x, t and real/imaginary parts of each reconstructed component."""
    head = ["x", "t"]
    for name in ("q_line", "q_red", "r_line", "r_red"):
        for c in (1, 2):
            head += [f"{name}{c}_re", f"{name}{c}_im"]
    lines = [",".join(head)]
    for rec in records:
        row = [repr(rec.x), repr(rec.t)]
        for name in ("q_line", "q_red", "r_line", "r_red"):
            for z in getattr(rec, name):
                row += [repr(float(z.real)), repr(float(z.imag))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
