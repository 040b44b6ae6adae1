import numpy as np
import pytest

from containsim.pipeline import run_pipeline
from containsim.scenario import apply_k1_file, load_packaged, packaged_k1

EXAMPLE_EDGES = [(2, 1, 1), (5, 1, 1), (5, 2, 1), (6, 2, 1), (1, 3, 1), (2, 3, 1), (7, 3, 1), (7, 4, 1)]


@pytest.fixture
def example():
    return load_packaged("four_followers")


@pytest.fixture(scope="session")
def example_gains():
    """Pipeline up to gain synthesis on the bundled example (placed poles)."""
    return run_pipeline(load_packaged("four_followers"), stop="gains")


@pytest.fixture(scope="session")
def example_gains_k1():
    """Same, with the externally designed K1 matrices."""
    s = apply_k1_file(load_packaged("four_followers"), packaged_k1())
    return run_pipeline(s, stop="gains")


@pytest.fixture(scope="session")
def example_run():
    return run_pipeline(load_packaged("four_followers"), stop="simulate")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion."""
    def record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
