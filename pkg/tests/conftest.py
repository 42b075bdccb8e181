import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from quasiground.asymptotics import SweepOptions, default_q_list, energy_gap, sweep  # noqa: E402
from quasiground.constants import ProblemParams, existence_threshold  # noqa: E402
from quasiground.potentials import Potential  # noqa: E402
from quasiground.profile import critical_profile  # noqa: E402

BLOWUP_DQ = (0.5, 0.25, 0.125)
COMPACT_DQ = (0.5, 0.25, 0.125, 0.0625)


@pytest.fixture(scope="session")
def crit1():
    return critical_profile(1)


@pytest.fixture(scope="session")
def crit2():
    return critical_profile(2)


@pytest.fixture(scope="session")
def a_star1(crit1):
    return existence_threshold(1, crit1.mass)


@pytest.fixture(scope="session")
def harmonic():
    return Potential.power(2)


@pytest.fixture(scope="session")
def blowup_records(crit1, a_star1):
    """N=1, a = 2a*, V = 0."""
    return sweep(default_q_list(1, BLOWUP_DQ), ProblemParams(1, 6.0, 2 * a_star1), None,
                 SweepOptions(), "blowup", crit1)


@pytest.fixture(scope="session")
def trapped_records(crit1, a_star1, harmonic):
    """N=1, a = 2a*, V = |x|^2, each member seeded on the zero of V."""
    return sweep(default_q_list(1, BLOWUP_DQ), ProblemParams(1, 6.0, 2 * a_star1), harmonic,
                 SweepOptions(center="argmin"), "blowup", crit1)


@pytest.fixture(scope="session")
def gap_records(crit1, a_star1, harmonic):
    return energy_gap(default_q_list(1, BLOWUP_DQ), ProblemParams(1, 6.0, 2 * a_star1), harmonic,
                      SweepOptions(), crit1)


@pytest.fixture(scope="session")
def compact_records(crit1, a_star1, harmonic):
    """N=1, a = a*/2, V = |x|^2, default grid followed by q* itself."""
    qs = default_q_list(1, COMPACT_DQ) + [6.0]
    return sweep(qs, ProblemParams(1, 6.0, 0.5 * a_star1), harmonic, SweepOptions(),
                 "compactness", crit1)


def pytest_terminal_summary(terminalreporter):
    from verdicts import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
