import numpy as np
import pytest
from hypothesis import settings

from seirq.integrator import IntegratorConfig
from seirq.scenarios import ScenarioConfig, scenario_peak, simulate, testing_scenario

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

GRID_STEP = 1e-3

# lines printed in the terminal summary by the acceptance suite
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def basic_default():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def basic_trajectory(basic_default):
    return simulate(basic_default)


@pytest.fixture(scope="session")
def testing_target(basic_default):
    """Total-infected peak of the basic testing scenario at psi = 0.1."""
    return scenario_peak(testing_scenario(basic_default, 0.1), "total_infected")


def _grid_crossing(values, peaks, target):
    """Grid point at which the decreasing peak sequence first drops to ``target``."""
    below = np.nonzero(np.asarray(peaks) <= target)[0]
    assert len(below) > 0 and below[0] > 0, "target not bracketed by the grid"
    return values[below[0]]


@pytest.fixture(scope="session")
def grid_oracles(basic_default, testing_target):
    """Exhaustive-search solutions of both matching problems at step 1e-3."""
    plain = basic_default
    sq = np.round(np.arange(0.0, 0.3 + GRID_STEP / 2, GRID_STEP), 12)
    sq_peaks = [scenario_peak(ScenarioConfig(initial_quarantine=float(q)), "total_infected")
                for q in sq]
    chi = np.round(np.arange(0.0, 0.6 + GRID_STEP / 2, GRID_STEP), 12)
    chi_peaks = [scenario_peak(plain.with_params(chi=float(c)), "total_infected") for c in chi]
    return {
        "abrupt": _grid_crossing(sq, sq_peaks, testing_target),
        "gradual": _grid_crossing(chi, chi_peaks, testing_target),
    }


@pytest.fixture
def fine_config():
    return IntegratorConfig(rtol=1e-10, atol=1e-12)
