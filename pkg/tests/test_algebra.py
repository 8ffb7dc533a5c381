import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from utism.algebra import (I3, ID2, ID4, SIGMA, SIGMA3, TAU, SingularMatrixError, assemble, blocks,
                           commutator, dagger, inv, join_components, offdiag_block_residual, sigma,
                           sigma3, split_components, unit)

mat4 = arrays(complex, (4, 4), elements=st.complex_numbers(max_magnitude=10, allow_nan=False))


def test_commutator_examples():
    A = np.arange(16).reshape(4, 4) * (1 + 1j)
    assert np.all(commutator(A, A) == 0)
    assert np.all(commutator(SIGMA3, SIGMA3) == 0)
    # E_13 in one-based indexing
    E = unit(0, 2)
    assert np.array_equal(commutator(SIGMA3, E), 2 * E)


def test_dagger_examples():
    assert np.array_equal(dagger(ID4), ID4)
    assert np.array_equal(dagger(1j * sigma3), -1j * sigma3)


@given(mat4)
def test_dagger_involution(A):
    assert np.array_equal(dagger(dagger(A)), A)


def test_blocks_examples():
    b = blocks(ID4)
    assert np.array_equal(b.tl, ID2) and np.array_equal(b.br, ID2)
    assert not b.tr.any() and not b.bl.any()
    b = blocks(SIGMA3)
    assert np.array_equal(b.tl, ID2) and np.array_equal(b.br, -ID2)


@given(mat4)
def test_assemble_inverts_blocks(A):
    assert np.array_equal(assemble(blocks(A)), A)


def test_constants_square_to_identity():
    for M in (SIGMA3, I3, SIGMA, TAU):
        assert np.array_equal(M @ M, ID4)
    assert np.array_equal(sigma @ sigma, ID2)


@settings(max_examples=50)
@given(arrays(complex, (2, 2), elements=st.complex_numbers(max_magnitude=5, allow_nan=False)))
def test_inverse_2x2(A):
    A = A + 6 * ID2  # diagonally dominant, well conditioned
    assert np.allclose(A @ inv(A), ID2, atol=1e-13, rtol=0)


def test_inverse_rejects_singular():
    with pytest.raises(SingularMatrixError):
        inv(np.array([[1, 2], [2, 4]], dtype=complex))
    with pytest.raises(SingularMatrixError):
        inv(np.diag([1, 1, 1, 1e-14]).astype(complex))


def test_inverse_rejects_other_sizes():
    with pytest.raises(ValueError):
        inv(np.eye(3))


@given(mat4)
def test_component_split_roundtrip(A):
    D = A.copy()
    D[offdiag_mask()] = 0
    assert np.array_equal(join_components(split_components(D)), D)
    assert offdiag_block_residual(D) == 0


def offdiag_mask():
    m = np.ones((4, 4), dtype=bool)
    for idx in ((0, 2), (1, 3)):
        for i in idx:
            for j in idx:
                m[i, j] = False
    return m
