import math
import os

import pytest

from alphaduplex import mcsim
from alphaduplex.config import defaults, parse_config

REFERENCE_MC_N = 10_000
REFERENCE_SEED = 2024


def reference_network():
    return parse_config(defaults()).base


@pytest.fixture(scope="session")
def net():
    return reference_network()


@pytest.fixture(scope="session")
def dense_net(net):
    """Reference parameters with unbounded UE power (single-tier closed forms apply)."""
    return net.with_global(p_u_max=math.inf)


@pytest.fixture(scope="session")
def reference_batch(net):
    """Shared 10^4-realization batch of the reference network."""
    return mcsim.simulate(net, REFERENCE_MC_N, seed=REFERENCE_SEED, workers=os.cpu_count() or 1)


# one line per acceptance criterion, printed at the end of the run
CRITERIA = {}


def record(number, ok, detail):
    CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
