"""Command line runner: ``utism <command> [--config FILE] [--out DIR] [--seed N]``.

Every command writes ``<command>.json`` into the output directory with the
resolved configuration (defaults included) and one residual table per stage.
The exit code is 0 when every residual is below its tolerance, otherwise the
code of the first failing stage.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

EXIT_USAGE = 2
STAGE_EXIT = {
    "oracle": 3,
    "scatter": 4,
    "global_relation": 5,
    "symmetry": 6,
    "rh": 7,
    "equivalence": 8,
    "reduction": 9,
    "classification": 10,
}

_ORACLE = {"amplitude": 0.2, "center": 0.5, "velocity": 0.3, "kind": "local", "eps": -1,
           "L": 30.0, "N": 1024, "dt": 1e-3, "T": 1.0}

DEFAULTS = {
    "scatter": {"potential": None, "kmax": 4.0, "n": 40, "tol_det": 1e-8},
    "oracle": dict(_ORACLE, tol_mass=1e-8, tol_persistence=1e-6, tol_endpoint=1e-8),
    "ut-halfline": dict(_ORACLE, kmax=3.0, n=30, g0_factor=1.0, tol=5e-6),
    "equivalence": dict(_ORACLE, amplitude=0.1, L=20.0, N=512, nodes=1000, x_max=20.0, x_step=1.0,
                        times=[0.0, 0.5], g0_factor=1.0, oracle_L=30.0, oracle_N=1024,
                        tol_gr=5e-6, tol_M=1e-5, tol_Q=1e-4),
    "reduction-audit": {"kind": "nls", "amplitude": 0.3, "eps": -1, "kmax": 3.0, "n": 30,
                        "L": 30.0, "N": 1024, "tol": 5e-7},
    "classify": {"tol": 1e-12},
}


class UsageError(Exception):
    pass


def _finite(obj):
    """JSON-safe copy: non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def resolve_config(command, path=None, seed=None):
    cfg = json.loads(json.dumps(DEFAULTS[command]))
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            user = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise UsageError(f"invalid JSON in {path}: {e}") from e
        unknown = set(user) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(user)
    for key, val in cfg.items():
        if key.startswith("tol") and not (isinstance(val, (int, float)) and val > 0):
            raise UsageError(f"tolerance {key} must be positive")
    if seed is not None:
        cfg["seed"] = int(seed)
        if "center" in cfg:
            rng = np.random.default_rng(seed)
            cfg["center"] = float(rng.uniform(0.0, 1.0))
            cfg["velocity"] = float(rng.uniform(-0.5, 0.5))
    return cfg


def _settings(cfg):
    from .experiments import OracleSettings
    return OracleSettings(**{k: cfg[k] for k in _ORACLE})


def _stage_dict(rep):
    return {"residuals": rep.residuals, "tolerances": rep.tolerances, "passed": rep.passed,
            "ok": rep.ok, "info": rep.info}


# -- commands ----------------------------------------------------------------------

def cmd_scatter(cfg, out):
    from .akns import HalfLinePotential, LinePotential
    from .experiments import scatter_potential
    if cfg["potential"] is None:
        raise UsageError("scatter needs a 'potential' file in the config")
    p = Path(cfg["potential"])
    if not p.is_file():
        raise UsageError(f"potential file not found: {p}")
    text = p.read_text()
    kind = json.loads(text).get("kind", "line")
    pot = LinePotential.from_json(text) if kind == "line" else HalfLinePotential.from_json(text)
    data, stages = scatter_potential(pot, cfg["kmax"], cfg["n"], cfg["tol_det"])
    (out / "scatter_data.json").write_text(json.dumps(
        {name: json.loads(S.to_json()) for name, S in data.items()}, sort_keys=True))
    return stages, {}


def cmd_oracle(cfg, out):
    from .experiments import run_oracle
    traj, stages = run_oracle(_settings(cfg), cfg["tol_mass"], cfg["tol_persistence"], cfg["tol_endpoint"])
    (out / "oracle_snapshot.json").write_text(traj.snapshot_json())
    (out / "oracle_traces.csv").write_text(traj.traces_csv())
    return stages, {}


def cmd_ut_halfline(cfg, out):
    from .experiments import ut_halfline
    data, stages = ut_halfline(_settings(cfg), cfg["kmax"], cfg["n"], cfg["g0_factor"], cfg["tol"])
    (out / "boundary_data.json").write_text(data["boundary"].to_json())
    return stages, {}


def cmd_equivalence(cfg, out):
    from .experiments import equivalence_with_diagnosis
    xs = np.arange(0.0, cfg["x_max"] + 0.5 * cfg["x_step"], cfg["x_step"])
    data, stages = equivalence_with_diagnosis(
        _settings(cfg), xs, cfg["times"], nodes=cfg["nodes"], g0_factor=cfg["g0_factor"],
        oracle_L=cfg["oracle_L"], oracle_N=cfg["oracle_N"],
        tol_gr=cfg["tol_gr"], tol_M=cfg["tol_M"], tol_Q=cfg["tol_Q"])
    if data["csv"]:
        (out / "equivalence_fields.csv").write_text(data["csv"])
    extra = {"records": [{k: v for k, v in r.as_dict().items() if not k.startswith(("q_", "r_"))}
                         for r in data["records"]]}
    return stages, extra


def cmd_reduction_audit(cfg, out):
    from .experiments import reduction_audit
    if cfg["kind"] not in ("nls", "nonlocal"):
        raise UsageError("kind must be 'nls' or 'nonlocal'")
    data, stages = reduction_audit(cfg["kind"], cfg["amplitude"], cfg["eps"], cfg["kmax"], cfg["n"],
                                   cfg["L"], cfg["N"], cfg["tol"])
    return stages, {"candidate": data["candidate"].to_dict()}


def cmd_classify(cfg, out):
    from .reductions import admissible_parameters, classify_B, constraint_residuals, random_block_B
    from .symmetries import SymmetryReport
    families = classify_B()
    worst = 0.0
    for fam in families:
        for mu, kind in fam.coefficient.items():
            c = 1.0 if kind == "real" else 1j
            cand = fam.candidate(mu=mu, theta=0.9, c_plus=2 * c, c_minus=-c)
            worst = max(worst, max(constraint_residuals(cand.B, cand.gamma, mu, cand.theta).values()))
    rng = np.random.default_rng(cfg.get("seed", 0))
    accepted = admissible_parameters(random_block_B(rng)) is not None
    rep = SymmetryReport(info={"families": [f.name for f in families]})
    rep.add("family_count_mismatch", abs(len(families) - 2), 0.5)
    rep.add("constraint_residual", worst, cfg["tol"])
    rep.add("random_B_accepted", float(accepted), 0.5)
    return {"classification": rep}, {"families": [f.to_dict() for f in families]}


COMMANDS = {
    "scatter": cmd_scatter,
    "oracle": cmd_oracle,
    "ut-halfline": cmd_ut_halfline,
    "equivalence": cmd_equivalence,
    "reduction-audit": cmd_reduction_audit,
    "classify": cmd_classify,
}


def exit_code(stages):
    for name, rep in stages.items():
        if not rep.ok:
            return STAGE_EXIT.get(name, 1)
    return 0


def run(command, config=None, out=".", seed=None):
    """Run one command; returns (exit code, report dict)."""
    cfg = resolve_config(command, config, seed)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stages, extra = COMMANDS[command](cfg, out)
    code = exit_code(stages)
    report = {"command": command, "config": cfg, "exit_code": code, "ok": code == 0,
              "stages": {n: _stage_dict(r) for n, r in stages.items()}}
    report.update(extra)
    (out / f"{command}.json").write_text(json.dumps(_finite(report), sort_keys=True, indent=2) + "\n")
    for name, rep in stages.items():
        print(f"[{name}]")
        print(rep.table())
    return code, report


def main(argv=None):
    parser = argparse.ArgumentParser(prog="utism", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON file overriding the defaults")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, help="seed for randomized inputs")
    args = parser.parse_args(argv)
    try:
        code, _ = run(args.command, args.config, args.out, args.seed)
    except UsageError as e:
        print(f"utism: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
