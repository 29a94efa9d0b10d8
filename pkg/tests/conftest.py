import math

import pytest

from perbif import ShootingConfig, continue_branch, distinct_solutions

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def cfg():
    return ShootingConfig()


@pytest.fixture(scope="session")
def slice_q3_mu3(cfg):
    """Constant solution plus branches 1 and 2 at q=3, mu=3."""
    return distinct_solutions(3.0, TWO_PI, 3.0, cfg)


@pytest.fixture(scope="session")
def slice_q2_mu45(cfg):
    return distinct_solutions(2.0, TWO_PI, 4.5, cfg)


@pytest.fixture(scope="session")
def branch1_q3_mu3(slice_q3_mu3):
    return next(s for s in slice_q3_mu3 if s.k == 1)


@pytest.fixture(scope="session")
def branches_q3(cfg):
    """Branches 1..3 at q=3 continued up to mu=9."""
    return {k: continue_branch(3.0, TWO_PI, k, 9.0, cfg) for k in (1, 2, 3)}


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
