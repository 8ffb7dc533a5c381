"""Small fixed-size complex matrix algebra.

Everything in this package is built out of 2x2 and 4x4 complex matrices.
Arrays may carry leading batch axes (e.g. one matrix per spectral point);
the matrix lives in the last two axes.
"""

from typing import NamedTuple

import numpy as np

COND_LIMIT = 1e12


class SingularMatrixError(ArithmeticError):
    """Raised when a matrix is too ill-conditioned to invert safely."""


ID2 = np.eye(2, dtype=complex)
ID4 = np.eye(4, dtype=complex)

sigma3 = np.diag([1.0, -1.0]).astype(complex)
sigma = np.array([[0, 1], [1, 0]], dtype=complex)

# Sigma_3 = diag(1_2, -1_2)
SIGMA3 = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
# Sigma = 1_2 (x) sigma: swaps the two components inside each block
SIGMA = np.kron(ID2, sigma)
# 1 (x) sigma_3
TAU = np.kron(ID2, sigma3)
# I_3 = diag(sigma_3, 1_2)
I3 = np.diag([1.0, -1.0, 1.0, 1.0]).astype(complex)


class Block4(NamedTuple):
    tl: np.ndarray
    tr: np.ndarray
    bl: np.ndarray
    br: np.ndarray


def commutator(a, b):
    return a @ b - b @ a


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def blocks(a) -> Block4:
    a = np.asarray(a)
    return Block4(a[..., :2, :2], a[..., :2, 2:], a[..., 2:, :2], a[..., 2:, 2:])


def assemble(b: Block4):
    top = np.concatenate([b.tl, b.tr], axis=-1)
    bottom = np.concatenate([b.bl, b.br], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def condition_number(a):
    """Ratio of extreme singular values (batched)."""
    s = np.linalg.svd(np.asarray(a), compute_uv=False)
    with np.errstate(divide="ignore"):
        return np.where(s[..., -1] > 0, s[..., 0] / s[..., -1], np.inf)


def inv(a, cond_limit=COND_LIMIT):
    """Inverse of a (batch of) 2x2 or 4x4 matrices with a conditioning guard."""
    a = np.asarray(a, dtype=complex)
    if a.shape[-1] not in (2, 4) or a.shape[-2] != a.shape[-1]:
        raise ValueError(f"expected 2x2 or 4x4 matrices, got shape {a.shape}")
    cond = condition_number(a)
    if np.any(~np.isfinite(cond)) or np.any(cond > cond_limit):
        raise SingularMatrixError(
            f"matrix condition estimate {np.max(cond):.3e} exceeds {cond_limit:.1e}"
        )
    if a.shape[-1] == 2:
        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        out = np.empty_like(a)
        out[..., 0, 0] = a[..., 1, 1]
        out[..., 1, 1] = a[..., 0, 0]
        out[..., 0, 1] = -a[..., 0, 1]
        out[..., 1, 0] = -a[..., 1, 0]
        return out / det[..., None, None]
    return np.linalg.inv(a)


def unit(i, j, n=4):
    """Unit matrix E_ij (zero-based indices)."""
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


# -- diagonal-block structure ------------------------------------------------
#
# Every 4x4 object here (W, P, S, T, jumps, RH solutions) has four diagonal
# 2x2 blocks, so it is a direct sum of two 2x2 matrices acting on the index
# pairs (0, 2) and (1, 3).  The helpers below move between the two views.

_COMPONENT_INDEX = ((0, 2), (1, 3))


def split_components(a):
    """4x4 with diagonal blocks -> array (..., 2, 2, 2) indexed [component, i, j]."""
    a = np.asarray(a)
    out = np.empty(a.shape[:-2] + (2, 2, 2), dtype=complex)
    for c, idx in enumerate(_COMPONENT_INDEX):
        out[..., c, :, :] = a[..., idx, :][..., :, idx]
    return out


def join_components(c):
    """Inverse of :func:`split_components`."""
    c = np.asarray(c)
    out = np.zeros(c.shape[:-3] + (4, 4), dtype=complex)
    for n, idx in enumerate(_COMPONENT_INDEX):
        for i in range(2):
            for j in range(2):
                out[..., idx[i], idx[j]] = c[..., n, i, j]
    return out


def offdiag_block_residual(a):
    """Largest entry of a 4x4 that falls outside the four diagonals of its blocks."""
    a = np.asarray(a)
    mask = np.ones((4, 4), dtype=bool)
    for idx in _COMPONENT_INDEX:
        for i in idx:
            for j in idx:
                mask[i, j] = False
    return float(np.max(np.abs(a[..., mask]), initial=0.0))
