import numpy as np
import pytest

from utism.akns import LinePotential, line_grid
from utism.experiments import OracleSettings, run_oracle, sech_pulse


@pytest.fixture(scope="session")
def sech_line():
    """Amplitude-0.3 sech pulse with r = -q*, refined for scattering."""
    x = line_grid(20.0, 512)
    q = sech_pulse(x, 0.3)
    return LinePotential(20.0, q, -np.conj(q)).refined(4)


@pytest.fixture(scope="session")
def zero_line():
    x = line_grid(20.0, 512)
    return LinePotential(20.0, 0 * x + 0j, 0 * x + 0j)


@pytest.fixture(scope="session")
def oracle_run():
    """Oracle trajectory for amplitude 0.2, T = 1 on the wide grid."""
    traj, stages = run_oracle(OracleSettings(amplitude=0.2))
    return traj, stages


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, name, ok, detail, seconds, limit):
        ok = bool(ok) and seconds < limit
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}  [{seconds:.1f} s / {limit:g} s]"
        _CRITERIA.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
