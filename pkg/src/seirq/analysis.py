"""Scalar observables extracted from trajectories.

Observables are named aggregates (``"reported_active"``, ``"total_infected"``,
``"total_quarantined"``, ...) or single compartment names; see
:func:`seirq.model.observable_names`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEpidemicError, HorizonTooShortError, OutOfRangeError
from .integrator import Trajectory, hermite
from .model import observable_weights

END_TIME_TOL = 1e-6


@dataclass(frozen=True)
class EpidemicSummary:
    peak_value: float
    peak_time: float
    end_time: float
    quarantine_integral: float
    observable_name: str
    degenerate: bool = False


def observable_series(traj: Trajectory, observable: str) -> tuple[np.ndarray, np.ndarray]:
    """Values and time derivatives of ``observable`` at every sample."""
    if traj.model_kind is None:
        raise ValueError("observables need a trajectory tagged with its model kind")
    w = observable_weights(traj.model_kind, observable)
    return traj.states @ w, traj.derivatives @ w


def _refine_peak(t, v, j):
    """Vertex of the parabola through samples ``j-1, j, j+1``."""
    t0, t1, t2 = t[j - 1], t[j], t[j + 1]
    v0, v1, v2 = v[j - 1], v[j], v[j + 1]
    d01 = (v1 - v0) / (t1 - t0)
    d12 = (v2 - v1) / (t2 - t1)
    curvature = (d12 - d01) / (t2 - t0)
    if not curvature < 0:
        return t1, v1
    # p(x) = v1 + d(x - t1) + c(x - t1)^2, with d the slope at t1
    slope = d01 + curvature * (t1 - t0)
    dx = -slope / (2 * curvature)
    tp = min(max(t1 + dx, t0), t2)
    vp = v1 + slope * (tp - t1) + curvature * (tp - t1) ** 2
    return tp, max(vp, v1)


def find_peak(traj: Trajectory, observable: str) -> tuple[float, float]:
    """Global maximum of an observable as ``(peak_time, peak_value)``.

    The discrete argmax (earliest on ties) is refined by the vertex of the
    quadratic through the three bracketing samples. Boundary maxima are
    returned unrefined.
    """
    values, _ = observable_series(traj, observable)
    return _peak_of(traj.times, values)


def _peak_of(t, v):
    j = int(np.argmax(v))
    if 0 < j < len(v) - 1:
        tp, vp = _refine_peak(t, v, j)
        return float(tp), float(vp)
    return float(t[j]), float(v[j])


def epidemic_end(traj: Trajectory, threshold: float, observable: str = "reported_active") -> float:
    """First time after the peak of ``observable`` at which it falls to ``threshold``.

    The crossing is located by bisection on the Hermite interpolant to within
    ``END_TIME_TOL`` days.

    Raises
    ------
    DegenerateEpidemicError
        The observable never exceeds ``threshold``.
    HorizonTooShortError
        The observable is still above ``threshold`` at the end of the trajectory.
    """
    v, dv = observable_series(traj, observable)
    t = traj.times
    j_peak = int(np.argmax(v))
    if not v[j_peak] > threshold:
        raise DegenerateEpidemicError(
            f"{observable} peaks at {v[j_peak]:.3g}, never above threshold {threshold:.3g}"
        )
    below = np.nonzero(v[j_peak:] <= threshold)[0]
    if len(below) == 0:
        raise HorizonTooShortError(
            f"{observable} still above {threshold:.3g} at t = {t[-1]:g}; extend t_max"
        )
    j = j_peak + int(below[0])
    if v[j] == threshold:
        return float(t[j])
    lo, hi = t[j - 1], t[j]
    a = (t[j - 1], t[j], v[j - 1], v[j], dv[j - 1], dv[j])
    while hi - lo > 0.1 * END_TIME_TOL:
        mid = 0.5 * (lo + hi)
        if hermite(*a, mid) > threshold:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def _cell_integral(t0, t1, y0, y1, f0, f1, a, b):
    """Exact integral of the cubic Hermite interpolant over ``[a, b]``."""
    if a == t0 and b == t1:
        h = t1 - t0
        return 0.5 * h * (y0 + y1) + h * h / 12.0 * (f0 - f1)
    # two-point Gauss-Legendre is exact for cubics
    m, r = 0.5 * (a + b), 0.5 * (b - a) / math.sqrt(3.0)
    return 0.5 * (b - a) * (hermite(t0, t1, y0, y1, f0, f1, m - r)
                            + hermite(t0, t1, y0, y1, f0, f1, m + r))


def _cell_trapezoid(t0, t1, y0, y1, f0, f1, a, b):
    ya = y0 if a == t0 else hermite(t0, t1, y0, y1, f0, f1, a)
    yb = y1 if b == t1 else hermite(t0, t1, y0, y1, f0, f1, b)
    return 0.5 * (b - a) * (ya + yb)


def integrate_observable(traj: Trajectory, observable: str, start: float, end: float,
                         rule: str = "hermite") -> float:
    """Time integral of ``observable`` over ``[start, end]``.

    ``rule="hermite"`` integrates the cubic Hermite interpolant exactly, which
    is additive over adjacent intervals. ``rule="trapezoid"`` applies the
    trapezoid rule on the stored grid, with interpolated end values for
    partial cells.
    """
    t = traj.times
    if not (t[0] <= start <= end <= t[-1]):
        raise OutOfRangeError(f"[{start!r}, {end!r}] not inside [{t[0]:g}, {t[-1]:g}]")
    if rule == "hermite":
        cell = _cell_integral
    elif rule == "trapezoid":
        cell = _cell_trapezoid
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    if start == end:
        return 0.0
    y, f = observable_series(traj, observable)
    j0 = int(np.searchsorted(t, start, side="right")) - 1
    j1 = min(int(np.searchsorted(t, end, side="left")), len(t) - 1)
    pieces = []
    for j in range(j0, j1):
        a = max(start, t[j])
        b = min(end, t[j + 1])
        if b > a:
            pieces.append(cell(t[j], t[j + 1], y[j], y[j + 1], f[j], f[j + 1], a, b))
    return math.fsum(pieces)


def quarantine_integral(traj: Trajectory, end_time: float, start: float = 0.0,
                        rule: str = "hermite") -> float:
    """Time integral of the total quarantined population over ``[start, end_time]``."""
    return integrate_observable(traj, "total_quarantined", start, end_time, rule)


def summarize(traj: Trajectory, population_size: float,
              observable: str = "total_infected") -> EpidemicSummary:
    """Peak of ``observable``, epidemic end and quarantine cost in one record.

    The end time uses the reported-active rule with threshold
    ``0.1 / population_size``. A trajectory whose reported cases never reach
    the threshold is flagged ``degenerate`` with ``end_time = 0`` and a zero
    integral.
    """
    peak_time, peak_value = find_peak(traj, observable)
    try:
        end = epidemic_end(traj, 0.1 / population_size)
    except DegenerateEpidemicError:
        return EpidemicSummary(max(peak_value, 0.0), peak_time, 0.0, 0.0, observable, True)
    integral = quarantine_integral(traj, end)
    return EpidemicSummary(peak_value, peak_time, end, integral, observable)
