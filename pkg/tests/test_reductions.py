import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from utism.akns import BoundaryData, extract_boundary_data, line_grid, reflect, symmetry_bc_residual
from utism.algebra import TAU
from utism.experiments import OracleSettings, _candidate_for, run_oracle
from utism.reductions import (CONSTRAINT_TOL, LinearizableK, ReductionCandidate, action_residuals,
                              admissible_parameters, apply_reduction, check_linearizable,
                              classification_json, classify_B, constraint_residuals,
                              induced_equation, random_block_B, reduced_line_r,
                              reduction_persistence)

FAMILIES = {f.name: f for f in classify_B()}
nonzero = st.floats(0.1, 5.0) | st.floats(-5.0, -0.1)
angle = st.floats(-np.pi, np.pi)


def test_exactly_two_families():
    fams = classify_B()
    assert [f.name for f in fams] == ["diagonal", "antidiagonal"]
    diag, anti = FAMILIES["diagonal"], FAMILIES["antidiagonal"]
    assert diag.gamma == 1 and anti.gamma == -1
    assert np.array_equal(diag.shape[1], np.eye(2)) and np.array_equal(diag.shape[-1], np.diag([1, -1]))
    assert np.array_equal(anti.shape[1], [[0, 1], [1, 0]]) and np.array_equal(anti.shape[-1], [[0, 1], [-1, 0]])
    assert anti.coefficient == {1: "real", -1: "imaginary"}
    assert diag.coefficient == {1: "real", -1: "real"}


def test_classification_is_deterministic():
    assert classification_json() == classification_json()


@settings(max_examples=60)
@given(st.sampled_from(["diagonal", "antidiagonal"]), st.sampled_from([1, -1]), angle, nonzero, nonzero,
       st.sampled_from([1, -1]))
def test_every_candidate_satisfies_constraints(name, mu, theta, cp, cm, eps):
    fam = FAMILIES[name]
    unit = 1.0 if fam.coefficient[mu] == "real" else 1j
    c = fam.candidate(mu=mu, theta=theta, c_plus=cp * unit, c_minus=cm * unit, eps_B=eps)
    res = constraint_residuals(c.B, c.gamma, c.mu, c.theta)
    assert max(res.values()) <= CONSTRAINT_TOL
    assert admissible_parameters(c.B) is not None
    assert c.sigma_s(1 + 2j) == -(1 - 2j) / eps


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_random_block_B_rejected(seed):
    rng = np.random.default_rng(seed)
    assert admissible_parameters(random_block_B(rng)) is None
    # commuting with tau alone is not enough either
    assert admissible_parameters(random_block_B(rng, gamma=1)) is None


def test_bad_candidates_raise():
    fam = FAMILIES["antidiagonal"]
    with pytest.raises(ValueError):
        fam.candidate(mu=-1, c_plus=1.0, c_minus=1.0)      # needs imaginary coefficients
    with pytest.raises(ValueError):
        fam.candidate(mu=1, c_plus=0.0)
    with pytest.raises(ValueError):
        ReductionCandidate(-1, 1, 1, 0.0, (1, 1), np.eye(2), np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        fam.candidate(eps_B=2)


def test_apply_reduction_examples():
    rng = np.random.default_rng(3)
    Q = rng.normal(size=(20, 2)) + 1j * rng.normal(size=(20, 2))
    local = _candidate_for("nls", -1)
    assert not apply_reduction(np.zeros((5, 2)), local).any()
    assert np.allclose(apply_reduction(Q, local), -np.conj(Q), atol=1e-15)
    fam = FAMILIES["antidiagonal"]
    c = fam.candidate(mu=-1, theta=0.4, c_plus=2j, c_minus=-1j, eps_B=-1)
    R = apply_reduction(Q, c)
    ratio = -0.5
    assert np.allclose(R[:, 0], -ratio * np.conj(Q[:, 1]), atol=1e-14)
    assert np.allclose(R[:, 1], -ratio * np.conj(Q[:, 0]), atol=1e-14)


def test_nonlocal_reduction_on_the_line():
    x = line_grid(20.0, 256)
    q = 0.3 / np.cosh(x - 1) * np.exp(0.4j * x)
    c = _candidate_for("nonlocal", 1)
    assert np.array_equal(reduced_line_r(q, c), np.conj(reflect(q)))


def test_induced_equation():
    diag = FAMILIES["diagonal"]
    eq = induced_equation(diag.candidate(c_plus=1.0, c_minus=-1.0, eps_B=-1))
    assert eq == {"kind": "NLS", "coupling": 2.0, "defocusing": True}
    anti = FAMILIES["antidiagonal"]
    eq = induced_equation(anti.candidate(mu=-1, c_plus=1j, c_minus=3j, eps_B=1))
    assert eq["kind"] == "nonlocal-NLS" and isinstance(eq["coupling"], float) and eq["coupling"] == 6.0
    base = induced_equation(diag.candidate(mu=1, theta=0.0, c_plus=2.0, c_minus=1.0))
    for mu in (1, -1):
        for theta in (0.3, -2.0):
            assert induced_equation(diag.candidate(mu=mu, theta=theta, c_plus=2.0, c_minus=1.0)) == base


@pytest.mark.parametrize("name", ["diagonal", "antidiagonal"])
def test_actions(name):
    fam = FAMILIES[name]
    rng = np.random.default_rng(4)
    ks = rng.normal(size=5) + 1j * rng.normal(size=5)
    for mu in fam.shape:
        unit = 1.0 if fam.coefficient[mu] == "real" else 1j
        for eps in (1, -1):
            c = fam.candidate(mu=mu, theta=1.1, c_plus=0.7 * unit, c_minus=-1.3 * unit, eps_B=eps)
            W = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            res = action_residuals(c, W, ks)
            assert max(res.values()) < 1e-12
            assert np.allclose(c.B @ TAU, c.gamma * TAU @ c.B)


def test_linearizable_zero_and_symmetric(oracle_run):
    K = LinearizableK.symmetric()
    z = np.zeros((11, 2), dtype=complex)
    assert max(check_linearizable(K, BoundaryData(1.0, z, z, z, z)).values()) == 0
    bd = extract_boundary_data(oracle_run[0])
    assert max(check_linearizable(K, bd).values()) < 1e-10


def test_linearizable_matches_symmetry_residual():
    rng = np.random.default_rng(5)
    arrs = [rng.normal(size=(9, 2)) + 1j * rng.normal(size=(9, 2)) for _ in range(4)]
    bd = BoundaryData(1.0, *arrs)
    res = check_linearizable(LinearizableK.symmetric(), bd)
    # each relation is a rotated copy of the corresponding symmetry residual
    assert max(res.values()) == pytest.approx(symmetry_bc_residual(bd), rel=1e-12)


def test_linearizable_detects_perturbation(oracle_run):
    bd = extract_boundary_data(oracle_run[0])
    G0 = bd.G0.copy()
    G0[:, 0] *= 1.5
    res = check_linearizable(LinearizableK.symmetric(), BoundaryData(bd.T, G0, bd.G1, bd.H0, bd.H1))
    assert res["G0"] > 1e-3


@pytest.mark.parametrize("kind,eps", [("nls", -1), ("nonlocal", -1), ("nonlocal", 1)])
def test_reduction_persists_under_evolution(kind, eps):
    traj, stages = run_oracle(OracleSettings(amplitude=0.3, kind=kind, eps=eps))
    assert reduction_persistence(traj, _candidate_for(kind, eps)) < 1e-6
    assert stages["oracle"].ok
