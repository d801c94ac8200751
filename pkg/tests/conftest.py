import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gzk.groundstate import petviashvili_solve
from gzk.spectral import Field, Grid

settings.register_profile(
    "gzk", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("gzk")

_GS = {}


def ground_state(k, points=512, half_length=20.0):
    key = (k, points, half_length)
    if key not in _GS:
        _GS[key] = petviashvili_solve(k, half_length=half_length, points=points)
    return _GS[key]


@pytest.fixture(scope="session")
def gs():
    return ground_state


def band_limited(grid: Grid, rng: np.random.Generator, frac: float = 0.25) -> Field:
    """Random real field whose spectrum lives in the lowest ``frac`` of each axis."""
    nx, ny = grid.shape
    mx, my = max(1, int(frac * nx / 2)), max(1, int(frac * ny / 2))
    c = np.zeros(grid.shape, dtype=complex)
    c[:mx, :my] = rng.normal(size=(mx, my)) + 1j * rng.normal(size=(mx, my))
    c[-mx + 1 :, :my] = rng.normal(size=(mx - 1, my)) + 1j * rng.normal(size=(mx - 1, my)) if mx > 1 else 0
    v = np.fft.ifft2(c).real
    return Field(grid, values=v / np.max(np.abs(v)))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
