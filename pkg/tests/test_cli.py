import json

import numpy as np
import pytest

from utism.akns import LinePotential
from utism.cli import DEFAULTS, STAGE_EXIT, main, run


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def fixtures(tmp_path):
    sech = LinePotential.from_functions(lambda x: 0.3 / np.cosh(x), lambda x: -0.3 / np.cosh(x))
    zero = LinePotential.from_functions(lambda x: 0 * x, lambda x: 0 * x)
    (tmp_path / "sech.json").write_text(sech.to_json())
    (tmp_path / "zero.json").write_text(zero.to_json())
    return tmp_path


def test_classify(tmp_path):
    code, rep = run("classify", out=tmp_path / "a")
    assert code == 0
    assert [f["family"] for f in rep["families"]] == ["diagonal", "antidiagonal"]
    run("classify", out=tmp_path / "b")
    assert (tmp_path / "a" / "classify.json").read_bytes() == (tmp_path / "b" / "classify.json").read_bytes()


def test_scatter_zero_and_sech(fixtures):
    cfg = write(fixtures / "z.json", {"potential": str(fixtures / "zero.json"), "n": 10})
    assert main(["scatter", "--config", cfg, "--out", str(fixtures / "z")]) == 0
    data = json.loads((fixtures / "z" / "scatter_data.json").read_text())
    M = np.array([r["S"] for r in data["S_line"]["records"]])
    M = M[..., 0] + 1j * M[..., 1]
    assert np.max(np.abs(M - np.eye(4))) < 1e-12
    cfg = write(fixtures / "s.json", {"potential": str(fixtures / "sech.json"), "n": 10})
    code, rep = run("scatter", cfg, fixtures / "s")
    assert code == 0
    assert rep["stages"]["scatter"]["residuals"]["det_S"] < 1e-8
    assert rep["config"]["kmax"] == DEFAULTS["scatter"]["kmax"]


@pytest.mark.parametrize("cfg", [
    None,
    {"potential": "does-not-exist.json"},
    {"no_such_key": 1},
    {"potential": "x", "tol_det": -1.0},
])
def test_usage_errors_exit_2(tmp_path, cfg):
    args = ["scatter", "--out", str(tmp_path)]
    path = tmp_path / "missing.json"
    if cfg is not None:
        path = write(tmp_path / "c.json", cfg)
    args += ["--config", str(path)]
    assert main(args) == 2


def test_reduction_audit(tmp_path):
    for kind in ("nls", "nonlocal"):
        cfg = write(tmp_path / f"{kind}.json", {"kind": kind, "n": 10})
        code, rep = run("reduction-audit", cfg, tmp_path)
        assert code == 0
        assert rep["stages"]["reduction"]["residuals"]["structure"] < 5e-7
    cfg = write(tmp_path / "zero.json", {"amplitude": 0.0, "n": 10})
    _, rep = run("reduction-audit", cfg, tmp_path)
    assert max(rep["stages"]["reduction"]["residuals"].values()) < 1e-12
    assert main(["reduction-audit", "--config", write(tmp_path / "bad.json", {"kind": "x"}),
                 "--out", str(tmp_path)]) == 2


def test_oracle_outputs(tmp_path):
    cfg = write(tmp_path / "o.json", {"T": 0.2})
    code, rep = run("oracle", cfg, tmp_path, seed=7)
    assert code == 0
    assert rep["config"]["seed"] == 7
    assert (tmp_path / "oracle_traces.csv").exists() and (tmp_path / "oracle_snapshot.json").exists()


def test_global_relation_failure_is_tagged(tmp_path):
    cfg = write(tmp_path / "gr.json", {"g0_factor": 2.0, "n": 10})
    assert main(["ut-halfline", "--config", cfg, "--out", str(tmp_path)]) == STAGE_EXIT["global_relation"]
    rep = json.loads((tmp_path / "ut-halfline.json").read_text())
    assert rep["stages"]["global_relation"]["residuals"]["global_relation_D1"] > 1e-2
    # raw residuals have no tolerance; JSON stays strict
    assert rep["stages"]["global_relation"]["tolerances"]["global_relation_D1_uncorrected"] is None


def test_equivalence_small(tmp_path):
    cfg = write(tmp_path / "e.json", {"amplitude": 0.0, "nodes": 300, "x_max": 1.0, "times": [0.0]})
    code, rep = run("equivalence", cfg, tmp_path)
    assert code == 0
    assert rep["stages"]["equivalence"]["residuals"]["M_equivalence"] < 1e-14
    assert (tmp_path / "equivalence_fields.csv").read_text().startswith("x,t,")
    bad = write(tmp_path / "bad.json", {"g0_factor": 2.0, "nodes": 300, "x_max": 1.0})
    code, rep = run("equivalence", bad, tmp_path / "bad")
    assert code == STAGE_EXIT["global_relation"]
    assert "equivalence" not in rep["stages"]
