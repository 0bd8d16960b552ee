import numpy as np
import pytest


def upper_points(rng, count, n, rmin, rmax, boundary=False):
    """Random POLAR points with rmin <= |y| <= rmax in the closed upper half-space."""
    Y = rng.normal(size=(count, n))
    Y[:, -1] = 0.0 if boundary else np.abs(Y[:, -1])
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    return Y * rng.uniform(rmin, rmax, size=(count, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance criteria register their outcome here; printed once at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
