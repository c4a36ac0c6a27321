import numpy as np
import pytest

from bandlab import TorusGeometry, build_variance

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Append a one-line acceptance verdict, echoed in the terminal summary."""
    def _record(name, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        print(ACCEPTANCE_LINES[-1])
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_profile():
    return build_variance(TorusGeometry(3, 2, 4), 1.0)


@pytest.fixture(scope="session")
def l2_profile():
    return build_variance(TorusGeometry(3, 3, 2), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
