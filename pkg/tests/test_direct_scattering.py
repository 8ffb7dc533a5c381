import numpy as np
import pytest
from scipy.integrate import solve_ivp

from utism.akns import BoundaryData, LinePotential, embed_halfline_UT, embed_redundant_line, line_grid
from utism.algebra import ID4, split_components
from utism.direct_scattering import (DiscreteSpectrumError, ScatteringMatrix, SpectralGrid,
                                     check_no_zeros, compute_line, compute_S, compute_T, quadrant)

AMP = 0.3


def fq(x):
    return AMP / np.cosh(x - 0.5) * np.exp(0.3j * x)


def fr(x):
    return -np.conj(fq(x))


def scalar_reference(k, L=20.0):
    """mu(0, k) of the 2x2 problem from x = L, integrated on the analytic potential."""
    s3 = np.diag([1.0, -1.0]).astype(complex)

    def rhs(x, y):
        W = np.array([[0, fq(x)], [fr(x), 0]])
        return ((-1j * k * s3 + W) @ y.reshape(2, 2)).ravel()

    y0 = np.diag(np.exp(-1j * k * L * np.array([1, -1]))).ravel()
    sol = solve_ivp(rhs, (L, 0), y0, method="DOP853", rtol=1e-13, atol=1e-15)
    return sol.y[:, -1].reshape(2, 2)


@pytest.fixture(scope="module")
def grid():
    return SpectralGrid.build(kmax=4.0, n=40)


def test_grid_closed_under_reflections(grid):
    k = grid.k
    assert np.array_equal(k[grid.neg], -k)
    assert np.array_equal(k[grid.conj], np.conj(k))
    assert np.all(np.abs(k) > 1e-3)
    assert set(np.unique(quadrant(k))) == {0, 1, 2, 3, 4}


def test_zero_data_gives_identity(zero_line, grid):
    S = compute_S(embed_halfline_UT(zero_line), grid.k)
    assert np.nanmax(np.abs(S.M - ID4)) < 1e-12
    real = SpectralGrid.real_axis(4.0, 40).k
    Sl = compute_line(embed_redundant_line(zero_line), real)
    assert np.max(np.abs(Sl.M - ID4)) < 1e-12
    z = np.zeros((11, 2), dtype=complex)
    T = compute_T(BoundaryData(1.0, z, z, z, z), grid.k)
    assert np.nanmax(np.abs(T.M - ID4)) < 1e-12


def test_unimodular_and_diagonal_blocks(sech_line, grid):
    S = compute_S(embed_halfline_UT(sech_line), grid.k)
    assert S.det_residual() < 1e-8
    assert S.structure_residual() < 1e-10
    Sl = compute_line(embed_redundant_line(sech_line), SpectralGrid.real_axis(4.0, 40).k)
    assert Sl.det_residual() < 1e-8
    assert Sl.structure_residual() < 1e-10


def test_T_unimodular(oracle_run, grid):
    from utism.akns import extract_boundary_data
    traj, _ = oracle_run
    T = compute_T(extract_boundary_data(traj), grid.k)
    assert T.det_residual() < 1e-8
    assert T.structure_residual() < 1e-10


def test_matches_independent_scalar_integration():
    ks = np.array([-2.0, -0.7, 0.4, 1.5, 3.0])
    ref = np.array([scalar_reference(k) for k in ks])
    lp = LinePotential.from_functions(fq, fr, L=20.0, N=512).refined(8)
    S = compute_S(embed_halfline_UT(lp), ks.astype(complex))
    first = split_components(S.M)[:, 0]
    assert np.max(np.abs(first - ref)) < 1e-8
    assert np.max(np.abs(S.a[:, 0] - ref[:, 1, 1])) < 1e-8


def test_fourth_order_convergence():
    ks = np.array([-1.0, 0.5, 2.0])
    ref = np.array([scalar_reference(k) for k in ks])
    base = LinePotential.from_functions(fq, fr, L=20.0, N=256)
    errs = []
    for f in (1, 2, 4):
        S = compute_S(embed_halfline_UT(base.refined(f)), ks.astype(complex))
        errs.append(np.max(np.abs(split_components(S.M)[:, 0] - ref)))
    assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12


def test_richardson_estimate_tracks_error():
    ks = np.array([0.5, 2.0])
    ref = np.array([scalar_reference(k) for k in ks])
    lp = LinePotential.from_functions(fq, fr, L=20.0, N=512)
    S = compute_S(embed_halfline_UT(lp), ks.astype(complex))
    err = np.max(np.abs(split_components(S.M)[:, 0] - ref))
    assert 0.3 * err < S.error < 3 * err


def test_nls_unimodularity_on_the_line(sech_line):
    k = SpectralGrid.real_axis(3.0, 20).k
    Sl = compute_line(embed_redundant_line(sech_line), k)
    # r = -q*: |a|^2 + |b|^2 = 1 on the real axis for the first component
    assert np.max(np.abs(np.abs(Sl.a[:, 0])**2 + np.abs(Sl.b[:, 0])**2 - 1)) < 1e-8


def test_discrete_spectrum_detected():
    x = line_grid(20.0, 512)
    q = 2.0 / np.cosh(x)
    lp = LinePotential(20.0, q, -q).refined(4)
    k = np.array([0.5, 1.5j, -1.5j, 1.0 + 1.0j])
    S = compute_line(embed_redundant_line(lp), k)
    with pytest.raises(DiscreteSpectrumError):
        check_no_zeros(S)


def test_json_roundtrip(sech_line):
    S = compute_S(embed_halfline_UT(sech_line), np.array([0.5, 1.0 + 0.5j]))
    back = ScatteringMatrix.from_json(S.to_json())
    assert np.array_equal(back.k, S.k)
    assert np.allclose(back.M, S.M, equal_nan=True, atol=0)
