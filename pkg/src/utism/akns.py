"""Potentials, boundary data and the line <-> half-line embeddings.

Line potentials live on the periodic grid ``x_j = -L + j*h``, ``h = 2L/N``.
The grid is symmetric: ``-x_j`` is ``x_{(N-j) mod N}``, and the right end
``x = L`` is the periodic image of ``x = -L``.  Half-line potentials hold the
closed grid ``x = 0, h, ..., L`` (``N/2 + 1`` samples).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import SIGMA3

DECAY_TOL = 1e-8
SYMMETRY_TOL = 1e-10


class GridError(ValueError):
    pass


class DecayError(ValueError):
    pass


def line_grid(L, N):
    if N < 4 or N & (N - 1):
        raise GridError(f"N must be a power of two >= 4, got {N}")
    h = 2.0 * L / N
    return -L + h * np.arange(N)


def wavenumbers(L, N):
    return 2 * np.pi * np.fft.fftfreq(N, d=2.0 * L / N)


def spectral_derivative(f, L):
    f = np.asarray(f)
    xi = wavenumbers(L, f.shape[-1])
    return np.fft.ifft(1j * xi * np.fft.fft(f, axis=-1), axis=-1)


def reflect(f):
    """Samples of f(-x) on the symmetric periodic grid."""
    f = np.asarray(f)
    return np.roll(f[..., ::-1], 1, axis=-1)


def upsample(f, factor):
    """Band-limited interpolation of periodic samples onto a grid ``factor`` times finer."""
    f = np.asarray(f)
    n = f.shape[-1]
    if factor == 1:
        return f.copy()
    F = np.fft.fft(f)
    m = n * factor
    G = np.zeros(m, dtype=complex)
    half = n // 2
    G[:half] = F[:half]
    G[-half + 1:] = F[-half + 1:]
    # split the Nyquist mode symmetrically
    G[half] = 0.5 * F[half]
    G[-half] = 0.5 * F[half]
    return np.fft.ifft(G) * factor


def _pairs(a):
    a = np.asarray(a, dtype=complex).ravel()
    return [[float(v.real), float(v.imag)] for v in a]


def _unpairs(p):
    a = np.asarray(p, dtype=float).reshape(-1, 2)
    return a[:, 0] + 1j * a[:, 1]


@dataclass(frozen=True)
class LinePotential:
    """AKNS potential (q, r) sampled on the periodic grid of [-L, L)."""

    L: float
    q: np.ndarray
    r: np.ndarray
    decay_tol: float = DECAY_TOL

    def __post_init__(self):
        q = np.asarray(self.q, dtype=complex)
        r = np.asarray(self.r, dtype=complex)
        if q.shape != r.shape or q.ndim != 1:
            raise GridError("q and r must be 1-d arrays of equal length")
        line_grid(self.L, q.size)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)
        tail = self.tail()
        if tail > self.decay_tol:
            raise DecayError(f"potential is {tail:.2e} at x = -L (limit {self.decay_tol:.1e})")

    @classmethod
    def from_functions(cls, fq, fr, L=20.0, N=512, **kw):
        x = line_grid(L, N)
        return cls(L, fq(x), fr(x), **kw)

    @property
    def N(self):
        return self.q.size

    @property
    def h(self):
        return 2.0 * self.L / self.N

    @property
    def x(self):
        return line_grid(self.L, self.N)

    def tail(self):
        return float(max(abs(self.q[0]), abs(self.r[0]), abs(self.q[1]), abs(self.r[1]),
                         abs(self.q[-1]), abs(self.r[-1])))

    def refined(self, factor):
        """Same potential on a grid ``factor`` times finer (spectral interpolation)."""
        return LinePotential(self.L, upsample(self.q, factor), upsample(self.r, factor),
                             decay_tol=self.decay_tol)

    def to_json(self):
        return json.dumps({"kind": "line", "grid": {"L": self.L, "N": self.N},
                           "fields": {"q": _pairs(self.q), "r": _pairs(self.r)}})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("kind", "line") != "line":
            raise ValueError(f"not a line potential: {d.get('kind')}")
        return cls(float(d["grid"]["L"]), _unpairs(d["fields"]["q"]), _unpairs(d["fields"]["r"]))


@dataclass(frozen=True)
class HalfLinePotential:
    """Diagonal entries of Q, R on the closed grid 0, h, ..., L."""

    L: float
    q1: np.ndarray
    q2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    decay_tol: float = DECAY_TOL

    def __post_init__(self):
        arrs = [np.asarray(getattr(self, n), dtype=complex) for n in ("q1", "q2", "r1", "r2")]
        if len({a.shape for a in arrs}) != 1 or arrs[0].ndim != 1:
            raise GridError("half-line fields must be 1-d arrays of equal length")
        if arrs[0].size < 3 or (arrs[0].size - 1) % 2:
            raise GridError("half-line grid needs an even number of intervals")
        for n, a in zip(("q1", "q2", "r1", "r2"), arrs):
            object.__setattr__(self, n, a)
        tail = max(abs(a[-1]) for a in arrs)
        if tail > self.decay_tol:
            raise DecayError(f"potential is {tail:.2e} at x = L (limit {self.decay_tol:.1e})")

    @property
    def h(self):
        return self.L / (self.q1.size - 1)

    @property
    def x(self):
        return np.linspace(0.0, self.L, self.q1.size)

    def Q(self):
        """Array (n, 2) of diagonal entries of Q."""
        return np.stack([self.q1, self.q2], axis=-1)

    def R(self):
        return np.stack([self.r1, self.r2], axis=-1)

    def to_json(self):
        return json.dumps({"kind": "halfline", "grid": {"L": self.L, "N": 2 * (self.q1.size - 1)},
                           "fields": {n: _pairs(getattr(self, n)) for n in ("q1", "q2", "r1", "r2")}})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        f = d["fields"]
        return cls(float(d["grid"]["L"]), *(_unpairs(f[n]) for n in ("q1", "q2", "r1", "r2")))


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet and Neumann traces at x = 0 on the closed grid 0, dt, ..., T.

    Each of G0, G1, H0, H1 has shape (n, 2): the two diagonal entries.
    """

    T: float
    G0: np.ndarray
    G1: np.ndarray
    H0: np.ndarray
    H1: np.ndarray
    linearizable: bool = False
    residual: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        for n in ("G0", "G1", "H0", "H1"):
            a = np.asarray(getattr(self, n), dtype=complex)
            if a.ndim != 2 or a.shape[1] != 2:
                raise GridError(f"{n} must have shape (n, 2)")
            object.__setattr__(self, n, a)
        if (self.G0.shape[0] - 1) % 2:
            raise GridError("time grid needs an even number of intervals")
        if self.linearizable:
            res = symmetry_bc_residual(self)
            if res > SYMMETRY_TOL:
                raise ValueError(f"flagged linearizable but symmetry residual is {res:.2e}")

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.G0.shape[0])

    @property
    def dt(self):
        return self.T / (self.G0.shape[0] - 1)

    def tail(self):
        return float(max(np.max(np.abs(getattr(self, n)[-1])) for n in ("G0", "G1", "H0", "H1")))

    def to_json(self):
        return json.dumps({"kind": "boundary", "grid": {"T": self.T, "n": self.G0.shape[0]},
                           "linearizable": self.linearizable,
                           "fields": {n: _pairs(getattr(self, n)) for n in ("G0", "G1", "H0", "H1")}})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        f = d["fields"]
        arrs = [_unpairs(f[n]).reshape(-1, 2) for n in ("G0", "G1", "H0", "H1")]
        return cls(float(d["grid"]["T"]), *arrs, linearizable=bool(d.get("linearizable", False)))


def symmetry_bc_residual(bd: BoundaryData):
    """Sup over time of G0 - sigma G0 sigma, G1 + sigma G1 sigma and the same for H."""
    # for diagonal D = diag(d1, d2): sigma D sigma = diag(d2, d1)
    res = 0.0
    for even, odd in ((bd.G0, bd.G1), (bd.H0, bd.H1)):
        res = max(res, float(np.max(np.abs(even[:, 0] - even[:, 1]), initial=0.0)))
        res = max(res, float(np.max(np.abs(odd[:, 0] + odd[:, 1]), initial=0.0)))
    return res


def assemble_W(p: HalfLinePotential, i):
    if not 0 <= i < p.q1.size:
        raise IndexError(i)
    W = np.zeros((4, 4), dtype=complex)
    W[0, 2], W[1, 3] = p.q1[i], p.q2[i]
    W[2, 0], W[3, 1] = p.r1[i], p.r2[i]
    return W


def assemble_P(W, Wx, k):
    """t-part potential 2k W - i W_x Sigma3 - i W^2 Sigma3."""
    W = np.asarray(W, dtype=complex)
    Wx = np.asarray(Wx, dtype=complex)
    return 2 * k * W - 1j * Wx @ SIGMA3 - 1j * W @ W @ SIGMA3


def _require_symmetric(lp):
    if not isinstance(lp, LinePotential):
        raise GridError("expected a LinePotential on the symmetric periodic grid")


def embed_halfline_UT(lp: LinePotential) -> HalfLinePotential:
    """q1(x) = q(x), q2(x) = q(-x) (same for r) for x in [0, L]."""
    _require_symmetric(lp)
    n = lp.N
    half = slice(n // 2, n + 1)

    def closed(f):
        return np.append(f, f[0])[half]

    return HalfLinePotential(lp.L, closed(lp.q), closed(reflect(lp.q)),
                             closed(lp.r), closed(reflect(lp.r)), decay_tol=lp.decay_tol)


@dataclass(frozen=True)
class RedundantLinePotential:
    """Q_line = diag(q(x), -q(-x)), R_line = diag(r(x), -r(-x)) on [-L, L)."""

    L: float
    Q: np.ndarray  # (N, 2)
    R: np.ndarray

    @property
    def N(self):
        return self.Q.shape[0]

    @property
    def x(self):
        return line_grid(self.L, self.N)


def embed_redundant_line(lp: LinePotential) -> RedundantLinePotential:
    _require_symmetric(lp)
    Q = np.stack([lp.q, -reflect(lp.q)], axis=-1)
    R = np.stack([lp.r, -reflect(lp.r)], axis=-1)
    return RedundantLinePotential(lp.L, Q, R)


def extract_boundary_data(traj, tol=SYMMETRY_TOL) -> BoundaryData:
    """Boundary traces of the embedded half-line problem from a line trajectory.

    Uses q1 = q(x), q2 = q(-x), so G0 = diag(q, q)(0, t) and
    G1 = diag(q_x, -q_x)(0, t); likewise for r.
    """
    q0, qx, r0, rx = traj.q0, traj.qx0, traj.r0, traj.rx0
    G0 = np.stack([q0, q0], axis=-1)
    G1 = np.stack([qx, -qx], axis=-1)
    H0 = np.stack([r0, r0], axis=-1)
    H1 = np.stack([rx, -rx], axis=-1)
    bd = BoundaryData(traj.T, G0, G1, H0, H1)
    res = symmetry_bc_residual(bd)
    if res > tol:
        raise ValueError(f"boundary symmetry residual {res:.2e} exceeds {tol:.1e}")
    return BoundaryData(traj.T, G0, G1, H0, H1, linearizable=True, residual=res)
