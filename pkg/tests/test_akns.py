import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from utism.akns import (BoundaryData, DecayError, GridError, HalfLinePotential, LinePotential,
                        assemble_P, assemble_W, embed_halfline_UT, embed_redundant_line,
                        extract_boundary_data, line_grid, reflect, spectral_derivative,
                        symmetry_bc_residual, upsample)
from utism.algebra import SIGMA3, unit
from utism.pde_oracle import EvolutionConfig, evolve

x = line_grid(20.0, 512)


def pulse(f):
    return LinePotential(20.0, f, -np.conj(f))


def halfline_from(q):
    return embed_halfline_UT(pulse(q))


def test_grid_rules():
    with pytest.raises(GridError):
        line_grid(20.0, 500)
    with pytest.raises(DecayError):
        LinePotential(20.0, np.ones(512), np.ones(512))


@given(arrays(complex, 64, elements=st.complex_numbers(max_magnitude=1, allow_nan=False)))
def test_reflect_is_involution(f):
    assert np.array_equal(reflect(reflect(f)), f)


def test_upsample_keeps_samples():
    f = np.exp(-x**2) * np.exp(0.4j * x)
    assert np.allclose(upsample(f, 4)[::4], f, atol=1e-14)


def test_assemble_W_examples():
    zero = halfline_from(0 * x + 0j)
    assert not assemble_W(zero, 3).any()
    n = zero.q1.size
    one = HalfLinePotential(20.0, np.r_[1.0, np.zeros(n - 1)], *(np.zeros(n),) * 3)
    assert np.array_equal(assemble_W(one, 0), unit(0, 2))


def test_W_squared_is_block_diagonal():
    p = halfline_from(0.3 / np.cosh(x) * np.exp(0.5j * x))
    W = assemble_W(p, 10)
    W2 = W @ W
    assert not W2[:2, 2:].any() and not W2[2:, :2].any()


def test_assemble_P_examples():
    Z = np.zeros((4, 4))
    assert not assemble_P(Z, Z, 1.3).any()
    W = assemble_W(halfline_from(0.3 / np.cosh(x)), 5)
    assert np.allclose(assemble_P(W, Z, 0.0), -1j * W @ W @ SIGMA3)


def test_lax_compatibility_on_oracle_data():
    q0 = 0.2 / np.cosh(x - 0.5) * np.exp(0.3j * x)
    traj = evolve(q0, -np.conj(q0), EvolutionConfig(L=20.0, N=512, dt=1e-3, T=0.01))
    k = 0.7 + 0.2j
    i, dt = 5, 1e-3

    def W_at(s):
        q, r = traj.q[s], traj.r[s]
        W = np.zeros((x.size, 4, 4), dtype=complex)
        W[:, 0, 2], W[:, 1, 3], W[:, 2, 0], W[:, 3, 1] = q, reflect(q), r, reflect(r)
        return W

    W = W_at(i)
    Wt = (-W_at(i + 2) + 8 * W_at(i + 1) - 8 * W_at(i - 1) + W_at(i - 2)) / (12 * dt)
    Wx = spectral_derivative(W.transpose(1, 2, 0), 20.0).transpose(2, 0, 1)
    U = -1j * k * SIGMA3 + W
    V = -2j * k**2 * SIGMA3 + assemble_P(W, Wx, k)
    Vx = spectral_derivative(V.transpose(1, 2, 0), 20.0).transpose(2, 0, 1)
    res = Wt - Vx + U @ V - V @ U
    assert np.max(np.abs(res)) < 1e-6


def test_embedding_parity():
    even = 0.3 / np.cosh(x)
    odd = 0.3 * np.tanh(x) / np.cosh(x)
    p = halfline_from(even)
    assert np.allclose(p.q1, p.q2, atol=1e-15)
    p = halfline_from(odd)
    assert np.allclose(p.q1[:-1], -p.q2[:-1], atol=1e-15)


def test_embedding_sech_pointwise():
    p = halfline_from(0.3 / np.cosh(x) * np.exp(1j * x))
    assert np.allclose(p.q2, 0.3 / np.cosh(p.x) * np.exp(-1j * p.x), atol=1e-14)


def test_redundant_line():
    assert not embed_redundant_line(pulse(0 * x + 0j)).Q.any()
    q = 0.3 / np.cosh(x - 0.5) * np.exp(0.2j * x)
    rp = embed_redundant_line(pulse(q))
    i0 = x.size // 2
    assert np.array_equal(rp.Q[i0], [q[i0], -q[i0]])
    assert np.allclose(rp.Q[:, 1], -0.3 / np.cosh(-x - 0.5) * np.exp(-0.2j * x), atol=1e-8)
    # restriction to x >= 0 is sigma3 times the half-line embedding
    hp = embed_halfline_UT(pulse(q))
    n = hp.q1.size - 1
    assert np.array_equal(rp.Q[i0:i0 + n, 0], hp.q1[:-1])
    assert np.array_equal(rp.Q[i0:i0 + n, 1], -hp.q2[:-1])


def test_boundary_data_zero_and_symmetric():
    z = 0 * x + 0j
    bd = extract_boundary_data(evolve(z, z, EvolutionConfig(T=0.01)))
    assert not any(getattr(bd, n).any() for n in ("G0", "G1", "H0", "H1"))
    assert bd.linearizable


def test_boundary_traces_match_finite_differences(oracle_run):
    traj, _ = oracle_run
    bd = extract_boundary_data(traj)
    assert symmetry_bc_residual(bd) < 1e-10
    h = 2 * traj.L / traj.q.shape[-1]
    i0 = traj.q.shape[-1] // 2
    c = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    qx = traj.q[:, i0 - 4:i0 + 5] @ c / h
    assert np.max(np.abs(bd.G1[:, 0] - qx)) < 1e-8
    assert np.max(np.abs(bd.G1[:, 1] + qx)) < 1e-8


def test_linearizable_flag_is_checked():
    n = 5
    G = np.ones((n, 2), dtype=complex)
    with pytest.raises(ValueError):
        BoundaryData(1.0, G, G, G, G, linearizable=True)


def test_json_roundtrip():
    lp = pulse(0.3 / np.cosh(x) * np.exp(0.1j * x))
    back = LinePotential.from_json(lp.to_json())
    assert np.array_equal(back.q, lp.q) and np.array_equal(back.r, lp.r)
    hp = embed_halfline_UT(lp)
    back = HalfLinePotential.from_json(hp.to_json())
    assert np.array_equal(back.q2, hp.q2)
    assert json.loads(hp.to_json())["kind"] == "halfline"
