"""Explicit Runge-Kutta integration with stored derivatives for dense output.

Two methods are provided:

* ``fixed-rk4``: classical fourth-order steps of size ``dt``; every
  ``round(output_dt / dt)``-th step is stored.
* ``adaptive-dp54``: Dormand-Prince 5(4) with an error-proportional step
  controller. Steps are shortened so they land exactly on the output grid
  ``0, output_dt, 2*output_dt, ...``, hence no interpolation is needed to
  produce samples.

Both methods store the vector field at every sample, which makes the cubic
Hermite interpolant of :func:`interpolate` available without re-integration.

The stepping loops are written once in plain Python. They run compiled for
the built-in model fields and interpreted for arbitrary Python callables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np
from numba import types
from numba.extending import overload

from .errors import ConfigurationError, DivergenceError, OutOfRangeError, StiffnessError
from .model import ModelKind, basic_field, extended_field, model_spec, seir_field

METHODS = ("fixed-rk4", "adaptive-dp54")
MIN_STEP = 1e-12

_OK, _DIVERGED, _UNDERFLOW = 0, 1, 2

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth-order minus embedded fourth-order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "adaptive-dp54"
    dt: float = 0.1
    rtol: float = 1e-8
    atol: float = 1e-12
    t_max: float = 600.0
    output_dt: float = 0.25

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("dt", "rtol", "atol", "t_max", "output_dt"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigurationError(f"{name} must be a number, got {v!r}")
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {v!r}")

    def with_horizon(self, t_max: float) -> "IntegratorConfig":
        return replace(self, t_max=float(t_max))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution: ``states[j]`` and ``derivatives[j]`` at ``times[j]``."""

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    model_kind: ModelKind | None = None

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        states = np.array(self.states, dtype=float)
        derivs = np.array(self.derivatives, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
            derivs = derivs.reshape(states.shape)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("a trajectory needs at least two samples")
        if states.shape[0] != len(times) or derivs.shape != states.shape:
            raise ValueError("times, states and derivatives must have equal length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        for arr in (times, states, derivs):
            arr.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "derivatives", derivs)
        if self.model_kind is not None:
            object.__setattr__(self, "model_kind", ModelKind(self.model_kind))

    def __len__(self):
        return len(self.times)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def final_state(self):
        return model_spec(self.model_kind).state_cls.from_array(self.states[-1])


# ---------------------------------------------------------------------------
# stepping loops (numba-compatible subset of Python)
#
# ``rhs`` is either a Python callable or, in compiled mode, the integer id of
# a built-in model. Keeping function objects out of the compiled signatures
# lets numba cache the loops on disk.

_FIELD_IDS = {seir_field: 0, basic_field: 1, extended_field: 2}


@numba.njit(cache=True)
def _model_field(model_id, t, y, p):
    if model_id == 0:
        return seir_field(t, y, p)
    elif model_id == 1:
        return basic_field(t, y, p)
    return extended_field(t, y, p)


def _eval(rhs, t, y, p):
    return rhs(t, y, p)


@overload(_eval)
def _eval_compiled(rhs, t, y, p):
    if isinstance(rhs, types.Integer):
        return lambda rhs, t, y, p: _model_field(rhs, t, y, p)
    return lambda rhs, t, y, p: rhs(t, y, p)


def _rk4_loop(rhs, y0, p, dt, t_max, n_steps, stride, n_out, ys, fs, ts):
    y = y0.copy()
    t = 0.0
    f = _eval(rhs, t, y, p)
    ys[0] = y
    fs[0] = f
    ts[0] = t
    j = 1
    for n in range(1, n_steps + 1):
        t_next = n * dt
        if n == n_steps:
            t_next = t_max
        h = t_next - t
        k1 = f
        k2 = _eval(rhs, t + 0.5 * h, y + (0.5 * h) * k1, p)
        k3 = _eval(rhs, t + 0.5 * h, y + (0.5 * h) * k2, p)
        k4 = _eval(rhs, t + h, y + h * k3, p)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t_next
        if not np.all(np.isfinite(y)):
            return _DIVERGED, j
        f = _eval(rhs, t, y, p)
        if n % stride == 0 or n == n_steps:
            ys[j] = y
            fs[j] = f
            ts[j] = t
            j += 1
    return _OK, j


def _dp54_loop(rhs, y0, p, out_times, h0, rtol, atol, ys, fs):
    n_out = out_times.shape[0]
    y = y0.copy()
    t = out_times[0]
    f = _eval(rhs, t, y, p)
    ys[0] = y
    fs[0] = f
    h = h0
    j = 1
    while j < n_out:
        target = out_times[j]
        remaining = target - t
        landing = h >= remaining
        hs = remaining if landing else h

        k1 = f
        k2 = _eval(rhs, t + _C2 * hs, y + hs * (_A21 * k1), p)
        k3 = _eval(rhs, t + _C3 * hs, y + hs * (_A31 * k1 + _A32 * k2), p)
        k4 = _eval(rhs, t + _C4 * hs, y + hs * (_A41 * k1 + _A42 * k2 + _A43 * k3), p)
        k5 = _eval(rhs, t + _C5 * hs, y + hs * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), p)
        k6 = _eval(rhs, t + hs,
                   y + hs * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), p)
        y_new = y + hs * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        t_new = target if landing else t + hs
        k7 = _eval(rhs, t_new, y_new, p)
        err = hs * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.max(np.abs(err) / scale)

        if err_norm <= 1.0:
            y = y_new
            f = k7
            t = t_new
            if not np.all(np.isfinite(y)):
                return _DIVERGED, j
            if landing:
                ys[j] = y
                fs[j] = f
                j += 1
            if err_norm == 0.0:
                factor = 5.0
            else:
                factor = min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
            if landing:
                # a shortened landing step says little about the usable size
                h = max(h, hs * factor)
            else:
                h = hs * factor
        else:
            if err_norm != err_norm:
                factor = 0.2
            else:
                factor = max(0.2, 0.9 * err_norm ** -0.2)
            h = hs * factor
            if h < MIN_STEP:
                return _UNDERFLOW, j
    return _OK, j


_rk4_jit = numba.njit(cache=True, nogil=True)(_rk4_loop)
_dp54_jit = numba.njit(cache=True, nogil=True)(_dp54_loop)


def _output_times(t_max: float, output_dt: float) -> np.ndarray:
    n = int(math.floor(t_max / output_dt + 1e-9))
    times = np.arange(n + 1, dtype=float) * output_dt
    if t_max - times[-1] > 1e-9 * max(1.0, t_max):
        times = np.append(times, t_max)
    else:
        times[-1] = t_max
    return times


def _wrap_python(fn):
    def rhs(t, y, p):
        return np.asarray(fn(t, y), dtype=float)

    return rhs


def integrate(rhs, initial, config: IntegratorConfig | None = None, params=None,
              model_kind=None) -> Trajectory:
    """Integrate ``y' = rhs(...)`` from ``t = 0`` to ``config.t_max``.

    Parameters
    ----------
    rhs
        Either one of the compiled model fields ``rhs(t, y, p)`` (then
        ``params`` is the float array ``p``) or any Python callable
        ``rhs(t, y)``.
    initial
        Initial state vector.
    config
        Method and tolerances; defaults to ``IntegratorConfig()``.
    params
        Parameter array forwarded to compiled fields.
    model_kind
        Tag stored on the trajectory; enables the sum-to-one check.

    Raises
    ------
    DivergenceError
        A non-finite state was produced.
    StiffnessError
        The adaptive step shrank below ``MIN_STEP``.
    """
    config = config or IntegratorConfig()
    y0 = np.array(initial, dtype=float)
    if y0.ndim != 1 or not np.all(np.isfinite(y0)):
        raise DivergenceError("initial state must be a finite 1-d vector")

    if isinstance(rhs, numba.core.registry.CPUDispatcher):
        model_id = _FIELD_IDS.get(rhs)
        if model_id is None:
            raise ConfigurationError("only the built-in compiled fields are supported")
        p = np.ascontiguousarray(np.asarray(params if params is not None else [], dtype=float))
        rk4, dp54, field = _rk4_jit, _dp54_jit, model_id
    else:
        p = np.zeros(0)
        rk4, dp54, field = _rk4_loop, _dp54_loop, _wrap_python(rhs)

    dim = y0.shape[0]
    if config.method == "fixed-rk4":
        n_steps = max(1, int(math.ceil(config.t_max / config.dt - 1e-9)))
        stride = max(1, int(round(config.output_dt / config.dt)))
        n_out = n_steps // stride + 1 + (1 if n_steps % stride else 0)
        ys = np.empty((n_out, dim))
        fs = np.empty((n_out, dim))
        ts = np.empty(n_out)
        status, filled = rk4(field, y0, p, config.dt, config.t_max, n_steps, stride,
                             n_out, ys, fs, ts)
        failed_at = ts[filled - 1] if filled else 0.0
    else:
        ts = _output_times(config.t_max, config.output_dt)
        ys = np.empty((len(ts), dim))
        fs = np.empty((len(ts), dim))
        h0 = min(config.dt, config.output_dt)
        status, filled = dp54(field, y0, p, ts, h0, config.rtol, config.atol, ys, fs)
        failed_at = ts[filled - 1]

    if status == _DIVERGED:
        raise DivergenceError(f"non-finite state after t = {failed_at:g}")
    if status == _UNDERFLOW:
        raise StiffnessError(
            f"step size fell below {MIN_STEP:g} after t = {failed_at:g}; "
            "the problem looks stiff"
        )

    traj = Trajectory(ts, ys, fs, model_kind)
    if model_kind is not None:
        drift = np.max(np.abs(ys.sum(axis=1) - 1.0))
        limit = max(100 * config.rtol, 1e-9)
        if drift > limit:
            raise DivergenceError(
                f"densities drifted from unit sum by {drift:.3g} (limit {limit:.3g})"
            )
    return traj


def integrate_model(kind, initial, params, config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate one of the built-in models from a state record or array."""
    spec = model_spec(kind)
    if hasattr(initial, "to_array"):
        initial = initial.to_array()
    if not isinstance(params, spec.params_cls):
        raise ConfigurationError(
            f"{spec.kind.value} model needs {spec.params_cls.__name__}, got {type(params).__name__}"
        )
    return integrate(spec.field, initial, config, params.to_array(), spec.kind)


# ---------------------------------------------------------------------------
# dense output


def hermite(t0, t1, y0, y1, f0, f1, t):
    """Cubic Hermite interpolant on ``[t0, t1]`` evaluated at ``t``."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _bracket(times: np.ndarray, t: float) -> int:
    j = int(np.searchsorted(times, t, side="right")) - 1
    return min(max(j, 0), len(times) - 2)


def interpolate(traj: Trajectory, t: float) -> np.ndarray:
    """State at time ``t`` from the cubic Hermite interpolant; exact at samples."""
    times = traj.times
    if not (times[0] <= t <= times[-1]):
        raise OutOfRangeError(f"t = {t!r} outside [{times[0]:g}, {times[-1]:g}]")
    j = _bracket(times, t)
    if t == times[j]:
        return traj.states[j].copy()
    if t == times[j + 1]:
        return traj.states[j + 1].copy()
    return hermite(times[j], times[j + 1], traj.states[j], traj.states[j + 1],
                   traj.derivatives[j], traj.derivatives[j + 1], t)
