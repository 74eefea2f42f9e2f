import numpy as np
import pytest

from tiltalloc.platform import PlatformGeometry


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def hexa():
    return PlatformGeometry()


@pytest.fixture
def hexa_quadratic():
    return PlatformGeometry(thrust_model="quadratic")


def random_state(rng, n=6, speed_range=(100.0, 900.0)):
    alpha = rng.uniform(-np.pi, np.pi, n)
    omega = rng.uniform(*speed_range, n)
    return np.concatenate([alpha, omega])


# one line per acceptance criterion, filled by test_acceptance and echoed after the run
ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
