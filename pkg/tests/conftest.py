import numpy as np
import pytest

from fourthorder.coeffs import CoefficientPair, make_bump, make_step, zero_coefficient
from fourthorder.fredholm import DeterminantEvaluator, Rectangle
from fourthorder.resonances import find_zeros, laurent_at_origin, punctured_square

STEP_RADIUS = 27.0
STRIP_HEIGHT = 62.0
STRIP_DEPTH = 12.0

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture(scope="session")
def step_pair():
    """p = 2 on [0, 1], q = 0: p_+ p_- = 4."""
    return CoefficientPair(make_step(2.0, 1.0), zero_coefficient(1.0))


@pytest.fixture(scope="session")
def mixed_pair():
    return CoefficientPair(make_step(1.5, 1.0), make_bump(30.0, 1.0, 2))


@pytest.fixture(scope="session")
def zero_pair():
    return CoefficientPair(zero_coefficient(1.0), zero_coefficient(1.0))


@pytest.fixture(scope="session")
def step_fast(step_pair):
    """Richardson-accelerated evaluator used for zero searches."""
    return DeterminantEvaluator.build(step_pair, 4, 16, richardson=1)


@pytest.fixture(scope="session")
def step_search(step_fast):
    return find_zeros(step_fast, punctured_square(STEP_RADIUS, 0.05))


@pytest.fixture(scope="session")
def step_strips(step_fast):
    """Deep searches along the K2 and K4 resonance strings."""
    k2 = find_zeros(step_fast, Rectangle(-STRIP_DEPTH, -0.05, 0.05, STRIP_HEIGHT))
    k4 = find_zeros(step_fast, Rectangle(0.05, STRIP_HEIGHT, -STRIP_DEPTH, -0.05))
    return k2, k4


@pytest.fixture(scope="session")
def step_laurent(step_fast):
    return laurent_at_origin(step_fast)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
