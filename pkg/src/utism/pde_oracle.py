"""Reference evolution of the coupled system

    i q_t + q_xx = 2 q r q,     -i r_t + r_xx = 2 r q r

on the periodic grid of [-L, L) by Strang splitting.  The nonlinear
sub-flow keeps the product q*r pointwise constant, so it is solved exactly:
q <- q exp(-2i qr dt), r <- r exp(2i qr dt).
"""

import json
from dataclasses import dataclass

import numpy as np

from .akns import LinePotential, line_grid, reflect, wavenumbers

STABILITY_BOUND = 100.0


class InstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    L: float = 20.0
    N: int = 512
    dt: float = 1e-3
    T: float = 1.0
    dealias: bool = False
    stability_bound: float = STABILITY_BOUND
    growth_limit: float = 10.0

    def __post_init__(self):
        line_grid(self.L, self.N)
        kmax = np.pi * self.N / (2 * self.L)
        if self.dt * kmax**2 > self.stability_bound:
            raise ValueError(f"dt*kmax^2 = {self.dt * kmax**2:.1f} exceeds {self.stability_bound}")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) % 2:
            raise ValueError("T/dt must be an even integer")

    @property
    def steps(self):
        return int(round(self.T / self.dt))


@dataclass
class Trajectory:
    L: float
    t: np.ndarray
    q: np.ndarray  # (nt, N) snapshots
    r: np.ndarray
    q0: np.ndarray  # x = 0 traces, one per time sample
    qx0: np.ndarray
    r0: np.ndarray
    rx0: np.ndarray

    @property
    def T(self):
        return float(self.t[-1])

    @property
    def x(self):
        return line_grid(self.L, self.q.shape[-1])

    def potential(self, i=-1):
        return LinePotential(self.L, self.q[i], self.r[i], decay_tol=np.inf)

    def snapshot_json(self, i=-1):
        return json.dumps({"kind": "line", "t": float(self.t[i]),
                           "grid": {"L": self.L, "N": self.q.shape[-1]},
                           "fields": {n: [[float(v.real), float(v.imag)] for v in getattr(self, n)[i]]
                                      for n in ("q", "r")}})

    def traces_csv(self):
        lines = ["t,q_re,q_im,qx_re,qx_im,r_re,r_im,rx_re,rx_im"]
        for i, t in enumerate(self.t):
            vals = [self.q0[i], self.qx0[i], self.r0[i], self.rx0[i]]
            lines.append(",".join([repr(float(t))] + [f"{repr(float(v.real))},{repr(float(v.imag))}" for v in vals]))
        return "\n".join(lines) + "\n"


def _linear(qh, rh, xi, tau, mask):
    phase = np.exp(-1j * xi**2 * tau)
    return qh * phase * mask, rh * np.conj(phase) * mask


def step(q, r, dt, L, mask=None):
    """One Strang step: half linear, exact nonlinear, half linear."""
    q = np.asarray(q, dtype=complex)
    r = np.asarray(r, dtype=complex)
    xi = wavenumbers(L, q.size)
    if mask is None:
        mask = 1.0
    qh, rh = _linear(np.fft.fft(q), np.fft.fft(r), xi, dt / 2, mask)
    q, r = np.fft.ifft(qh), np.fft.ifft(rh)
    qr = q * r
    q, r = q * np.exp(-2j * qr * dt), r * np.exp(2j * qr * dt)
    qh, rh = _linear(np.fft.fft(q), np.fft.fft(r), xi, dt / 2, mask)
    q, r = np.fft.ifft(qh), np.fft.ifft(rh)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(r))):
        raise InstabilityError("non-finite field")
    return q, r


def evolve(q0, r0, config: EvolutionConfig) -> Trajectory:
    q = np.asarray(q0, dtype=complex).copy()
    r = np.asarray(r0, dtype=complex).copy()
    if q.size != config.N:
        raise ValueError(f"initial data has {q.size} samples, config expects {config.N}")
    L = config.L
    xi = wavenumbers(L, config.N)
    mask = 1.0
    if config.dealias:
        mask = (np.abs(xi) <= (2 / 3) * np.abs(xi).max()).astype(float)
    i0 = config.N // 2
    norm0 = max(np.max(np.abs(q)), np.max(np.abs(r)), 1e-300)

    n = config.steps + 1
    t = config.dt * np.arange(n)
    Q = np.empty((n, config.N), dtype=complex)
    R = np.empty_like(Q)
    Q[0], R[0] = q, r
    for s in range(1, n):
        q, r = step(q, r, config.dt, L, mask)
        if max(np.max(np.abs(q)), np.max(np.abs(r))) > config.growth_limit * norm0:
            raise InstabilityError(f"field norm grew beyond {config.growth_limit}x at t = {t[s]:.3f}")
        Q[s], R[s] = q, r
    Qx = np.fft.ifft(1j * xi * np.fft.fft(Q, axis=-1), axis=-1)
    Rx = np.fft.ifft(1j * xi * np.fft.fft(R, axis=-1), axis=-1)
    return Trajectory(L, t, Q, R, Q[:, i0].copy(), Qx[:, i0].copy(), R[:, i0].copy(), Rx[:, i0].copy())


def specialize(kind, eps, q0):
    """Initial r0 for the local (r = eps q*) or nonlocal (r(x) = eps q*(-x)) reduction."""
    q0 = np.asarray(q0, dtype=complex)
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    if kind in ("local", "nls"):
        return q0, eps * np.conj(q0)
    if kind in ("nonlocal", "nnls"):
        return q0, eps * np.conj(reflect(q0))
    raise ValueError(f"unknown reduction kind {kind!r}")


def mass(q, r, L):
    """Discrete integral of q*r over the periodic grid."""
    return complex(np.sum(q * r) * 2 * L / q.size)
