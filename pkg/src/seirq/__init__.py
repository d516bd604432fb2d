"""Compartmental epidemic models with quarantine and testing.

The package provides a classical SEIR model and two extensions with
quarantined compartments (a 9-compartment basic model and an 18-compartment
model with latent stages and separate symptomatic/asymptomatic groups),
compiled ODE integrators, trajectory analysis, scenario experiments and a
command-line front end.
"""

from .analysis import (EpidemicSummary, epidemic_end, find_peak, integrate_observable,
                       quarantine_integral, summarize)
from .errors import NumericalError, SeirqError, ValidationError
from .integrator import IntegratorConfig, Trajectory, integrate, integrate_model, interpolate
from .model import (BasicParams, BasicState, ExtendedParams, ExtendedState, ModelKind,
                    SeirParams, SeirState, basic_rhs, extended_rhs, r0_to_beta, seir_rhs,
                    split_infectious_period)
from .scenarios import (ScenarioConfig, compare_quarantine_cost, latency_sweep,
                        match_abrupt_quarantine, match_gradual_quarantine,
                        quarantine_cost_ratio, run_scenario, simulate, sweep_1d, sweep_2d)

__all__ = [
    "BasicParams", "BasicState", "EpidemicSummary", "ExtendedParams", "ExtendedState",
    "IntegratorConfig", "ModelKind", "NumericalError", "ScenarioConfig", "SeirParams",
    "SeirState", "SeirqError", "Trajectory", "ValidationError", "basic_rhs",
    "compare_quarantine_cost", "epidemic_end", "extended_rhs", "find_peak", "integrate",
    "integrate_model", "integrate_observable", "interpolate", "latency_sweep",
    "match_abrupt_quarantine", "match_gradual_quarantine", "quarantine_cost_ratio",
    "quarantine_integral", "r0_to_beta", "run_scenario", "seir_rhs", "simulate",
    "split_infectious_period", "summarize", "sweep_1d", "sweep_2d",
]
