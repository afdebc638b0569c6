import numpy as np
import pytest

from finsum.suites import hinge_l2_instance, lasso_instance, ridge_instance

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report(number, name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ridge10():
    return ridge_instance(16, 8, 10.0, seed=0)


@pytest.fixture(scope="session")
def ridge100():
    return ridge_instance(16, 8, 100.0, seed=0)


# The reference solves run 10^6 iterations; build each instance once.
@pytest.fixture(scope="session")
def lasso_ref():
    return lasso_instance(16, 8, 0.1, seed=0, iters=10**6)


@pytest.fixture(scope="session")
def hinge_ref():
    return hinge_l2_instance(8, 8, 0.1, seed=0, iters=10**6)
