import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rayleigh_pulse import amplitude as am
from rayleigh_pulse import modal_frame, solve_rayleigh, spectral as sp, wave_speeds
from rayleigh_pulse.harness import ForceSpec, build_bundle

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mc11():
    return wave_speeds(1.0, 1.0)


@pytest.fixture(scope="session")
def rd11(mc11):
    return solve_rayleigh(mc11)


@pytest.fixture(scope="session")
def md11(mc11, rd11):
    return modal_frame(mc11, rd11)


@pytest.fixture(scope="session")
def small_grid():
    return sp.Grid2(32.0, 32, 2 * np.pi * 8, 64)


@pytest.fixture(scope="session")
def small_bundle(mc11, small_grid):
    """Solved small-data run on a coarse grid, profiles at ``t = 0.5``."""
    return build_bundle(mc11, small_grid, am.SolverConfig(dt=0.05, T=0.5),
                        ForceSpec(sigma_theta=3.0))
