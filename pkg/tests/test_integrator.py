"""Tests for the Runge-Kutta integrators and Hermite dense output."""

import numpy as np
import pytest

import oracles
from seirq.errors import (ConfigurationError, DivergenceError, NumericalError,
                          OutOfRangeError, StiffnessError)
from seirq.integrator import IntegratorConfig, Trajectory, integrate, integrate_model, interpolate
from seirq.model import (BasicParams, BasicState, ExtendedParams, ExtendedState, ModelKind,
                         SeirParams, SeirState, seir_field)

N = 500_000
SEIR0 = SeirState(s=1 - 2 / N, e=2 / N)
BASIC0 = BasicState(s=1 - 2 / N, e=2 / N)
EXTENDED0 = ExtendedState(s_s=0.5 - 1 / N, s_a=0.5 - 1 / N, e_s=1 / N, e_a=1 / N)


class TestConfig:
    @pytest.mark.parametrize("field, value", [
        ("dt", 0.0), ("rtol", -1e-8), ("atol", float("nan")), ("t_max", 0.0),
        ("output_dt", float("inf")), ("method", "euler"),
    ])
    def test_invalid(self, field, value):
        with pytest.raises(ConfigurationError, match=field):
            IntegratorConfig(**{field: value})

    def test_defaults(self):
        c = IntegratorConfig()
        assert (c.method, c.rtol, c.atol, c.t_max, c.output_dt) == (
            "adaptive-dp54", 1e-8, 1e-12, 600.0, 0.25)


class TestTrajectory:
    def test_requires_two_samples(self):
        with pytest.raises(ValueError):
            Trajectory([0.0], [[1.0]], [[0.0]])

    def test_requires_increasing_times(self):
        with pytest.raises(ValueError):
            Trajectory([0.0, 1.0, 1.0], np.zeros((3, 2)), np.zeros((3, 2)))

    def test_requires_equal_lengths(self):
        with pytest.raises(ValueError):
            Trajectory([0.0, 1.0], np.zeros((3, 2)), np.zeros((3, 2)))

    def test_arrays_are_read_only(self):
        traj = Trajectory([0.0, 1.0], np.zeros((2, 2)), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            traj.states[0, 0] = 1.0


@pytest.mark.parametrize("method", ["fixed-rk4", "adaptive-dp54"])
class TestBasicBehaviour:
    def test_zero_field_is_constant(self, method):
        y0 = np.array([0.3, 0.7])
        traj = integrate(lambda t, y: np.zeros_like(y), y0,
                         IntegratorConfig(method=method, t_max=10.0))
        assert traj.times[0] == 0.0 and traj.times[-1] == 10.0
        assert np.all(traj.states == y0)

    def test_disease_free_state_is_preserved(self, method):
        traj = integrate_model(ModelKind.BASIC, BasicState(), BasicParams(psi=0.1, chi=0.2),
                               IntegratorConfig(method=method))
        assert np.all(traj.states == BasicState().to_array())

    def test_covers_horizon_on_output_grid(self, method):
        traj = integrate_model(ModelKind.SEIR, SEIR0, SeirParams(),
                               IntegratorConfig(method=method, t_max=100.0, output_dt=0.5))
        np.testing.assert_allclose(traj.times, np.arange(0.0, 100.5, 0.5), rtol=0, atol=1e-12)

    def test_deterministic(self, method):
        cfg = IntegratorConfig(method=method, t_max=300.0)
        a = integrate_model(ModelKind.EXTENDED, EXTENDED0, ExtendedParams(psi_s=0.1), cfg)
        b = integrate_model(ModelKind.EXTENDED, EXTENDED0, ExtendedParams(psi_s=0.1), cfg)
        assert a.states.tobytes() == b.states.tobytes()
        assert a.derivatives.tobytes() == b.derivatives.tobytes()

    def test_python_callable_matches_compiled(self, method):
        cfg = IntegratorConfig(method=method, t_max=200.0)
        p = SeirParams().to_array()
        compiled = integrate(seir_field, SEIR0.to_array(), cfg, p)
        interpreted = integrate(lambda t, y: seir_field.py_func(t, y, p), SEIR0.to_array(), cfg)
        np.testing.assert_allclose(interpreted.states, compiled.states, rtol=0, atol=1e-15)


def test_stored_derivatives_equal_field():
    traj = integrate_model(ModelKind.SEIR, SEIR0, SeirParams(), IntegratorConfig(t_max=200))
    p = SeirParams().to_array()
    for j in (0, 100, 400, 800):
        np.testing.assert_allclose(traj.derivatives[j], seir_field(0.0, traj.states[j], p),
                                   rtol=1e-13, atol=1e-18)


class TestAccuracy:
    def test_seir_against_independent_oracle(self):
        """Peak and final size agree with scipy's DOP853 at tight tolerance."""
        traj = integrate_model(ModelKind.SEIR, SEIR0, SeirParams())
        ref = oracles.reference_solution("seir", SEIR0.to_array(), SeirParams(), traj.times)
        assert np.max(np.abs(traj.states - ref)) < 1e-7
        assert traj.states[-1, 3] == pytest.approx(ref[-1, 3], abs=1e-8)
        assert traj.states[:, 2].max() == pytest.approx(ref[:, 2].max(), abs=1e-9)

    def test_seir_against_fine_rk4_with_richardson_check(self):
        """Fixed RK4 at dt = 1e-3 and 5e-4 agree, and the adaptive run matches both."""
        fine = IntegratorConfig(method="fixed-rk4", dt=1e-3, t_max=300.0)
        finer = IntegratorConfig(method="fixed-rk4", dt=5e-4, t_max=300.0)
        a = integrate_model(ModelKind.SEIR, SEIR0, SeirParams(), fine)
        b = integrate_model(ModelKind.SEIR, SEIR0, SeirParams(), finer)
        assert np.max(np.abs(a.states - b.states)) < 1e-11
        adaptive = integrate_model(ModelKind.SEIR, SEIR0, SeirParams(),
                                   IntegratorConfig(t_max=300.0))
        assert np.max(np.abs(adaptive.states - b.states)) < 1e-7

    @pytest.mark.parametrize("kind, y0, params", [
        (ModelKind.BASIC, BASIC0, BasicParams(psi=0.1, chi=0.2)),
        (ModelKind.EXTENDED, EXTENDED0, ExtendedParams(psi_s=0.1, psi_a=0.05)),
    ])
    def test_quarantine_models_against_independent_oracle(self, kind, y0, params):
        traj = integrate_model(kind, y0, params, IntegratorConfig(t_max=400.0))
        ref = oracles.reference_solution(kind.value, y0.to_array(), params, traj.times)
        assert np.max(np.abs(traj.states - ref)) < 1e-7

    def test_rk4_order(self):
        cfg = lambda dt: IntegratorConfig(method="fixed-rk4", dt=dt, t_max=200.0,
                                          output_dt=dt)
        ref = integrate_model(ModelKind.SEIR, SEIR0, SeirParams(), cfg(1e-4)).states[-1]
        err = [np.max(np.abs(integrate_model(ModelKind.SEIR, SEIR0, SeirParams(),
                                             cfg(dt)).states[-1] - ref))
               for dt in (0.4, 0.2, 0.1)]
        assert 14 <= err[0] / err[1] <= 18
        assert 14 <= err[1] / err[2] <= 18

    @pytest.mark.parametrize("kind, y0, params", [
        (ModelKind.SEIR, SEIR0, SeirParams()),
        (ModelKind.BASIC, BASIC0, BasicParams(psi=0.1, chi=0.5)),
        (ModelKind.EXTENDED, EXTENDED0, ExtendedParams(psi_s=0.2, psi_a=0.1)),
    ])
    def test_conservation_drift(self, kind, y0, params):
        traj = integrate_model(kind, y0, params)
        assert np.max(np.abs(traj.states.sum(axis=1) - 1.0)) < 1e-9


class TestFailures:
    @pytest.mark.filterwarnings("ignore:.*encountered:RuntimeWarning")
    def test_divergence_fixed(self):
        cfg = IntegratorConfig(method="fixed-rk4", dt=0.1, t_max=5.0)
        with pytest.raises(DivergenceError):
            integrate(lambda t, y: y * y, np.array([1.0]), cfg)

    @pytest.mark.filterwarnings("ignore:.*encountered:RuntimeWarning")
    def test_blow_up_adaptive(self):
        with pytest.raises((StiffnessError, DivergenceError)):
            integrate(lambda t, y: y * y, np.array([1.0]), IntegratorConfig(t_max=5.0))

    def test_failures_are_numerical(self):
        assert issubclass(StiffnessError, NumericalError)
        assert issubclass(DivergenceError, NumericalError)

    def test_non_finite_initial_state(self):
        with pytest.raises(DivergenceError):
            integrate(lambda t, y: y, np.array([np.nan]))

    def test_wrong_params_type(self):
        with pytest.raises(ConfigurationError):
            integrate_model(ModelKind.BASIC, BASIC0, SeirParams())


@pytest.fixture(scope="module")
def seir():
    return integrate_model(ModelKind.SEIR, SEIR0, SeirParams(), IntegratorConfig(t_max=300))


class TestInterpolate:
    def test_exact_at_nodes(self, seir):
        for j in (0, 1, 57, len(seir) - 1):
            assert np.array_equal(interpolate(seir, seir.times[j]), seir.states[j])

    def test_linear_midpoint(self):
        t = np.array([0.0, 1.0, 2.0])
        y = np.array([[1.0], [3.0], [5.0]])
        traj = Trajectory(t, y, np.full((3, 1), 2.0))
        assert interpolate(traj, 1.5)[0] == 4.0

    def test_reproduces_cubics(self):
        t = np.array([0.0, 0.7, 2.0])
        y = (t ** 3 - 2 * t)[:, None]
        f = (3 * t ** 2 - 2)[:, None]
        traj = Trajectory(t, y, f)
        for x in (0.1, 0.35, 1.2, 1.99):
            assert interpolate(traj, x)[0] == pytest.approx(x ** 3 - 2 * x, abs=1e-14)

    def test_out_of_range(self, seir):
        with pytest.raises(OutOfRangeError):
            interpolate(seir, -0.1)
        with pytest.raises(OutOfRangeError):
            interpolate(seir, 300.01)

    def test_between_nodes_against_refined_grid(self, seir):
        refined = integrate_model(ModelKind.SEIR, SEIR0, SeirParams(),
                                  IntegratorConfig(t_max=300, output_dt=0.025))
        # O(h^4) Hermite error with h = 0.25 and |y''''| ~ 1e-5
        for j in range(1, len(refined) - 1, 37):
            t = refined.times[j]
            np.testing.assert_allclose(interpolate(seir, t), refined.states[j], rtol=0,
                                       atol=2e-9)
