import numpy as np
import pytest

from tdslearn.gaussian import SeededSampler

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def report(name: str, passed: bool, detail: str = ""):
        line = f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def sampler():
    return SeededSampler(12345)


@pytest.fixture
def gaussian_1e5():
    return SeededSampler(777).rng().standard_normal((100_000, 5))


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)
