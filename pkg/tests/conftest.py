import numpy as np
import pytest

from pel.synth_data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_separable():
    """Three well-separated clusters in 4-d, 20 points each."""
    r = np.random.default_rng(0)
    centers = np.array([[3.0, 0, 0, 0], [0, 3.0, 0, 0], [0, 0, 3.0, 0]])
    y = np.repeat(np.arange(3), 20)
    X = centers[y] + 0.3 * r.normal(size=(60, 4))
    return Dataset(X, y, y.copy(), "train")


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")
