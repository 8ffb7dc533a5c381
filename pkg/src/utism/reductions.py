"""Z2 reductions of the 4x4 problem and linearizable boundary conditions.

The reduction acts on the x-part U(k) = -ik Sigma3 + W of the Lax pair by

    (s . U)(k) = eps_B B U(sigma_s(k))^dagger B^{-1},   sigma_s(k) = -k*/eps_B.

Admissible B are found by an exact constraint chain over integer matrices:
block-diagonality, commutation with tau = conjugation by 1 (x) sigma3 (sign
gamma), commutation with u = conjugation by Sigma (sign mu), and finally
B^dagger = e^{i theta} B.  Each conjugation is an involution, so its
eigenvalues are +-1 and the joint eigenspaces are computed exactly.
"""

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import SIGMA, SIGMA3, TAU, dagger

CONSTRAINT_TOL = 1e-12


# -- exact linear algebra on 16-vectors ---------------------------------------------

def _rref_basis(cols):
    """Independent columns spanning the same space (exact, Fractions)."""
    cols = [list(map(Fraction, c)) for c in cols]
    basis, pivots = [], []
    for c in cols:
        v = c[:]
        for b, p in zip(basis, pivots):
            if v[p] != 0:
                f = v[p] / b[p]
                v = [vi - f * bi for vi, bi in zip(v, b)]
        nz = [i for i, vi in enumerate(v) if vi != 0]
        if nz:
            basis.append(v)
            pivots.append(nz[0])
    return basis


def _conj_operator(G):
    """16x16 integer matrix of X -> G X G^{-1} for a real involutive G (G^{-1} = G)."""
    G = np.real(G).astype(int)
    op = np.zeros((16, 16), dtype=int)
    for j in range(16):
        E = np.zeros(16, dtype=int)
        E[j] = 1
        op[:, j] = (G @ E.reshape(4, 4) @ G).ravel()
    return op


def _eigenspace(op, basis, lam):
    """Exact eigenspace of an involution ``op`` restricted to span(basis)."""
    img = [(np.array(b, dtype=object) + lam * op.astype(object) @ np.array(b, dtype=object)) / 2
           for b in basis]
    return _rref_basis([list(v) for v in img])


def _is_involution(op, basis):
    b = np.array(basis, dtype=object).T
    return np.all(op.astype(object) @ (op.astype(object) @ b) == b)


# -- candidates ----------------------------------------------------------------------

@dataclass(frozen=True)
class ReductionCandidate:
    """A concrete representation B = diag(B+, B-) of the reduction."""

    eps_B: int
    gamma: int
    mu: int
    theta: float
    params: tuple          # (rho+, rho-) or (beta+, beta-)
    B_plus: np.ndarray
    B_minus: np.ndarray

    def __post_init__(self):
        if self.eps_B not in (1, -1):
            raise ValueError("eps_B must be +1 or -1")
        res = constraint_residuals(self.B, self.gamma, self.mu, self.theta)
        if max(res.values()) > CONSTRAINT_TOL:
            raise ValueError(f"B violates the reduction constraints: {res}")

    @property
    def B(self):
        out = np.zeros((4, 4), dtype=complex)
        out[:2, :2], out[2:, 2:] = self.B_plus, self.B_minus
        return out

    @property
    def name(self):
        return "diagonal" if self.gamma == 1 else "antidiagonal"

    @property
    def ratio(self):
        """rho-/rho+ or beta-/beta+, which is real for every admissible B."""
        r = self.params[1] / self.params[0]
        return float(np.real(r))

    def sigma_s(self, k):
        return -np.conj(k) / self.eps_B

    def to_dict(self):
        def m(a):
            return [[[float(v.real), float(v.imag)] for v in row] for row in a]
        names = ["rho+", "rho-"] if self.gamma == 1 else ["beta+", "beta-"]
        return {"family": self.name, "eps_B": self.eps_B, "param_names": names, "gamma": self.gamma, "mu": self.mu,
                "theta": self.theta, "params": [[float(np.real(p)), float(np.imag(p))] for p in self.params],
                "B_plus": m(self.B_plus), "B_minus": m(self.B_minus)}


def constraint_residuals(B, gamma, mu, theta):
    """Residuals of the four defining constraints of an admissible B."""
    B = np.asarray(B, dtype=complex)
    Binv = np.linalg.inv(B)
    return {
        "block_diagonal": float(np.max(np.abs(B @ SIGMA3 - SIGMA3 @ B))),
        "involution": float(np.max(np.abs(dagger(B) @ Binv - np.exp(1j * theta) * np.eye(4)))),
        "tau_commutation": float(np.max(np.abs(B @ TAU - gamma * TAU @ B))),
        "u_commutation": float(np.max(np.abs(B @ SIGMA - mu * SIGMA @ B))),
    }


def admissible_parameters(B, tol=CONSTRAINT_TOL):
    """(gamma, mu, theta) if B satisfies the four constraints, else None."""
    B = np.asarray(B, dtype=complex)
    try:
        ratio = dagger(B) @ np.linalg.inv(B)
    except np.linalg.LinAlgError:
        return None
    theta = float(np.angle(ratio[0, 0]))
    for gamma, mu in itertools.product((1, -1), (1, -1)):
        if max(constraint_residuals(B, gamma, mu, theta).values()) <= tol:
            return gamma, mu, theta
    return None


@dataclass(frozen=True)
class ReductionFamily:
    """All admissible B with a given block shape.

    ``shape[mu]`` is the integer 2x2 block pattern E_mu; the blocks are
    B+- = e^{-i theta/2} c+- E_mu with c+- real when E_mu is symmetric and
    purely imaginary when it is antisymmetric.
    """

    gamma: int
    shape: dict                 # mu -> integer 2x2 pattern
    coefficient: dict           # mu -> "real" | "imaginary"

    @property
    def name(self):
        return "diagonal" if self.gamma == 1 else "antidiagonal"

    def candidate(self, mu=1, theta=0.0, c_plus=1.0, c_minus=1.0, eps_B=-1):
        if mu not in self.shape:
            raise ValueError(f"mu = {mu} is not admissible")
        kind = self.coefficient[mu]
        for c in (c_plus, c_minus):
            c = complex(c)
            if c == 0:
                raise ValueError("block coefficients must be nonzero")
            if (kind == "real" and c.imag != 0) or (kind == "imaginary" and c.real != 0):
                raise ValueError(f"coefficients must be {kind} for mu = {mu}")
        E = np.array(self.shape[mu], dtype=complex)
        ph = np.exp(-0.5j * theta)
        params = (ph * complex(c_plus), ph * complex(c_minus))
        return ReductionCandidate(eps_B, self.gamma, mu, float(theta), params, params[0] * E, params[1] * E)

    def to_dict(self):
        return {"family": self.name, "gamma": self.gamma,
                "blocks": {str(m): np.asarray(e).tolist() for m, e in self.shape.items()},
                "coefficient": {str(m): v for m, v in self.coefficient.items()},
                "form": "B_pm = exp(-i theta/2) c_pm E_mu"}


def classify_B():
    """Enumerate the admissible families of B (exact)."""
    # block-diagonality: [B, Sigma3] = 0
    s3 = _conj_operator(SIGMA3)
    full = [list(np.eye(16, dtype=int)[j]) for j in range(16)]
    ansatz = _eigenspace(s3, full, 1)
    tau, u = _conj_operator(TAU), _conj_operator(SIGMA)
    families = []
    for gamma in (1, -1):
        if not _is_involution(tau, ansatz):
            raise AssertionError("tau conjugation is not an involution")
        g_space = _eigenspace(tau, ansatz, gamma)
        if not g_space:
            continue
        shape, coefficient = {}, {}
        for mu in (1, -1):
            space = _eigenspace(u, g_space, mu)
            if not space:
                continue
            # one pattern per block, shared by B+ and B-
            blocks = []
            for v in space:
                M = np.array(v, dtype=object).reshape(4, 4)
                top, bot = M[:2, :2], M[2:, 2:]
                blk = top if any(top.ravel()) else bot
                lead = next(x for x in blk.ravel() if x != 0)
                blocks.append(blk / lead)
            if len(space) != 2:
                raise AssertionError(f"unexpected eigenspace dimension {len(space)} for ({gamma}, {mu})")
            E = blocks[0]
            if not all(np.all(b == E) for b in blocks):
                raise AssertionError("blocks of B+ and B- do not share a pattern")
            E = np.array([[int(x) for x in row] for row in E])
            if np.all(E.T == E):
                coefficient[mu] = "real"
            elif np.all(E.T == -E):
                coefficient[mu] = "imaginary"
            else:
                # E^T = s E fails: B^dagger = e^{i theta} B has no nonzero solution
                continue
            shape[mu] = E
        if shape:
            families.append(ReductionFamily(gamma, shape, coefficient))
    return families


def classification_json():
    return json.dumps([f.to_dict() for f in classify_B()], sort_keys=True)


# -- actions ----------------------------------------------------------------------------

def x_part(W, k):
    """U(k) = -i k Sigma3 + W."""
    return -1j * k * SIGMA3 + np.asarray(W, dtype=complex)


def s_action(U, c: ReductionCandidate):
    """k -> eps_B B U(sigma_s(k))^dagger B^{-1} for a callable U(k)."""
    B, Binv = c.B, np.linalg.inv(c.B)
    return lambda k: c.eps_B * B @ dagger(U(c.sigma_s(k))) @ Binv


def tau_action(U):
    return lambda k: TAU @ U(k) @ TAU


def u_action(U):
    return lambda k: SIGMA @ U(k) @ SIGMA


def action_residuals(c: ReductionCandidate, W, ks):
    """Involution of s and its commutation with tau and u on U = -ik Sigma3 + W."""
    U = lambda k: x_part(W, k)
    ss = s_action(s_action(U, c), c)
    st = s_action(tau_action(U), c)
    ts = tau_action(s_action(U, c))
    su = s_action(u_action(U), c)
    us = u_action(s_action(U, c))
    out = {"involution": 0.0, "tau": 0.0, "u": 0.0}
    for k in ks:
        out["involution"] = max(out["involution"], float(np.max(np.abs(ss(k) - U(k)))))
        out["tau"] = max(out["tau"], float(np.max(np.abs(st(k) - ts(k)))))
        out["u"] = max(out["u"], float(np.max(np.abs(su(k) - us(k)))))
    return out


# -- potentials -----------------------------------------------------------------------

def _diag(d):
    out = np.zeros(d.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 1, 1] = d[..., 0], d[..., 1]
    return out


def apply_reduction(Q, c: ReductionCandidate):
    """R = eps_B B- Q^dagger B+^{-1} for diagonal Q given as (n, 2) entries."""
    Q = np.asarray(Q, dtype=complex)
    R = c.eps_B * c.B_minus @ dagger(_diag(Q)) @ np.linalg.inv(c.B_plus)
    off = np.max(np.abs(R[..., [0, 1], [1, 0]]), initial=0.0)
    if off > CONSTRAINT_TOL * max(1.0, np.max(np.abs(Q), initial=0.0)):
        raise ValueError("reduction produced a non-diagonal R")
    return np.stack([R[..., 0, 0], R[..., 1, 1]], axis=-1)


def reduced_line_r(q, c: ReductionCandidate):
    """r on the line implied by the reduction through q1 = q(x), q2 = q(-x)."""
    from .akns import reflect
    q = np.asarray(q, dtype=complex)
    if c.gamma == 1:
        return c.eps_B * c.ratio * np.conj(q)
    return c.eps_B * c.ratio * np.conj(reflect(q))


def reduction_persistence(traj, c: ReductionCandidate):
    """Sup over the trajectory of |r - r_implied(q)| on the line."""
    return max(float(np.max(np.abs(traj.r[i] - reduced_line_r(traj.q[i], c))))
               for i in range(traj.t.size))


def induced_equation(c: ReductionCandidate):
    """Scalar equation i q_t + q_xx - coupling * q q~ q = 0 with q~ = q* (local) or q*(-x)."""
    coupling = 2.0 * c.eps_B * c.ratio
    kind = "NLS" if c.gamma == 1 else "nonlocal-NLS"
    return {"kind": kind, "coupling": coupling, "defocusing": bool(coupling > 0)}


# -- linearizable boundary conditions ------------------------------------------------

@dataclass(frozen=True)
class LinearizableK:
    K1: np.ndarray
    K4: np.ndarray

    @classmethod
    def symmetric(cls):
        """K1 = sigma = -K4, the choice matching the reflection boundary conditions."""
        s = np.array([[0, 1], [1, 0]], dtype=complex)
        return cls(s, -s)

    @property
    def K(self):
        out = np.zeros((4, 4), dtype=complex)
        out[:2, :2], out[2:, 2:] = self.K1, self.K4
        return out


def check_linearizable(Kb: LinearizableK, bd):
    """Sup over t of G0 K4 + K1 G0, H0 K1 + K4 H0, G1 K4 - K1 G1, H1 K1 - K4 H1."""
    G0, G1, H0, H1 = (_diag(getattr(bd, n)) for n in ("G0", "G1", "H0", "H1"))
    K1, K4 = Kb.K1, Kb.K4

    def sup(a):
        return float(np.max(np.abs(a), initial=0.0))
    return {
        "G0": sup(G0 @ K4 + K1 @ G0),
        "H0": sup(H0 @ K1 + K4 @ H0),
        "G1": sup(G1 @ K4 - K1 @ G1),
        "H1": sup(H1 @ K1 - K4 @ H1),
    }


def random_block_B(rng, gamma=None):
    """A random block-diagonal B; with ``gamma`` it is projected to commute (sign gamma) with tau."""
    Bp = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    Bm = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    B = np.zeros((4, 4), dtype=complex)
    B[:2, :2], B[2:, 2:] = Bp, Bm
    if gamma is not None:
        B = 0.5 * (B + gamma * TAU @ B @ TAU)
    return B

