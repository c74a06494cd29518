import numpy as np
import pytest

from sysnoise.fixtures import fixture_corpus


@pytest.fixture(scope="session")
def corpus():
    """16 synthetic 32x32 images and their q100 4:4:4 JPEG encodings."""
    return fixture_corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Append one PASS/FAIL line per acceptance criterion; echoed in the terminal summary."""
    def log(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
