"""Scenario construction, peak matching, quarantine-cost ratios and sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .analysis import EpidemicSummary, find_peak, summarize
from .errors import (
    BracketError,
    ConfigurationError,
    DomainError,
    HorizonTooShortError,
    NonMonotoneError,
    NumericalError,
    SeirqError,
    UnsupportedParameterError,
)
from .integrator import IntegratorConfig, Trajectory, integrate_model
from .model import (
    BasicParams,
    ExtendedParams,
    ModelKind,
    SeirParams,
    model_spec,
    split_infectious_period,
)

DEFAULT_POPULATION = 500_000
MATCH_TOLERANCE = 1e-3
MAX_BISECTIONS = 200
CHI_MAX_INITIAL = 50.0
CHI_MAX_DOUBLINGS = 4

_N_SLOTS = {ModelKind.SEIR: 1, ModelKind.BASIC: 1, ModelKind.EXTENDED: 2}


def default_seed(kind, population_size: float) -> tuple[float, ...]:
    """Two exposed individuals: ``E(0) = 2/N``, or ``E_s(0) = E_a(0) = 1/N``."""
    if ModelKind(kind) is ModelKind.EXTENDED:
        return (1.0 / population_size, 1.0 / population_size)
    return (2.0 / population_size,)


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation: model, parameters, initial-condition convention, solver.

    ``seed_exposed`` holds ``(E,)`` for the SEIR and basic models and
    ``(E_s, E_a)`` for the extended model; ``initial_quarantine`` holds
    ``(S_Q,)`` or ``(S_sQ, S_aQ)``. ``None`` selects the defaults. The SEIR
    model has no quarantine, so its ``initial_quarantine`` must be zero.
    """

    model_kind: ModelKind = ModelKind.BASIC
    params: SeirParams | BasicParams | ExtendedParams | None = None
    population_size: float = DEFAULT_POPULATION
    seed_exposed: tuple[float, ...] | None = None
    initial_quarantine: tuple[float, ...] | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        try:
            kind = ModelKind(self.model_kind)
        except ValueError:
            raise ConfigurationError(
                f"model must be one of {[k.value for k in ModelKind]}, got {self.model_kind!r}"
            ) from None
        object.__setattr__(self, "model_kind", kind)
        spec = model_spec(kind)
        if self.params is None:
            object.__setattr__(self, "params", spec.params_cls())
        elif not isinstance(self.params, spec.params_cls):
            raise ConfigurationError(
                f"{kind.value} model needs {spec.params_cls.__name__}, "
                f"got {type(self.params).__name__}"
            )
        n = self.population_size
        if isinstance(n, bool) or not (isinstance(n, (int, float)) and math.isfinite(n) and n > 0):
            raise ConfigurationError(f"population_size must be positive, got {n!r}")
        slots = _N_SLOTS[kind]
        seed = self._slots("seed_exposed", self.seed_exposed, slots,
                           default_seed(kind, n))
        quarantine = self._slots("initial_quarantine", self.initial_quarantine, slots,
                                 (0.0,) * slots)
        if kind is ModelKind.SEIR and quarantine[0] != 0.0:
            raise ConfigurationError("initial_quarantine must be 0 for the seir model")
        if sum(seed) + sum(quarantine) > 1.0:
            raise ConfigurationError(
                f"seed_exposed + initial_quarantine = {sum(seed) + sum(quarantine)!r} exceeds 1"
            )
        object.__setattr__(self, "seed_exposed", seed)
        object.__setattr__(self, "initial_quarantine", quarantine)

    @staticmethod
    def _slots(name, value, slots, default):
        if value is None:
            return tuple(default)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = (value,) * slots if slots == 1 else None
        if value is None:
            raise ConfigurationError(f"{name} needs {slots} values for this model")
        value = tuple(value)
        if len(value) != slots:
            raise ConfigurationError(f"{name} needs {slots} values, got {len(value)}")
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigurationError(f"{name} entries must be numbers, got {v!r}")
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ConfigurationError(f"{name} entries must lie in [0, 1], got {v!r}")
        return tuple(float(v) for v in value)

    def with_params(self, **changes) -> "ScenarioConfig":
        return replace(self, params=replace(self.params, **changes))


# ---------------------------------------------------------------------------
# building and running


def build_initial_state(config: ScenarioConfig) -> np.ndarray:
    """Initial densities: seeds in the exposed compartments, the quarantine
    in the quarantined susceptibles, and the rest susceptible."""
    kind = config.model_kind
    spec = model_spec(kind)
    seed, quarantine = config.seed_exposed, config.initial_quarantine
    free = 1.0 - sum(seed) - sum(quarantine)
    if free < 0:
        raise ConfigurationError("seed and quarantine over-allocate the population")
    if kind is ModelKind.SEIR:
        state = spec.state_cls(s=free, e=seed[0])
    elif kind is ModelKind.BASIC:
        state = spec.state_cls(s=free, s_q=quarantine[0], e=seed[0])
    else:
        state = spec.state_cls(
            s_s=free / 2, s_a=free / 2, e_s=seed[0], e_a=seed[1],
            s_sq=quarantine[0], s_aq=quarantine[1],
        )
    return state.to_array()


def simulate(config: ScenarioConfig) -> Trajectory:
    """Integrate a scenario over ``[0, t_max]`` without post-processing."""
    try:
        return integrate_model(config.model_kind, build_initial_state(config),
                               config.params, config.integrator)
    except NumericalError as exc:
        raise type(exc)(f"{_describe(config)}: {exc}") from exc


def _describe(config: ScenarioConfig) -> str:
    return (f"{config.model_kind.value} scenario with {config.params}, "
            f"seed={config.seed_exposed}, quarantine={config.initial_quarantine}")


def run_scenario(config: ScenarioConfig,
                 observable: str = "total_infected") -> tuple[Trajectory, EpidemicSummary]:
    """Simulate and summarize; the horizon is doubled once if the epidemic
    has not ended by ``t_max``."""
    traj = simulate(config)
    try:
        return traj, summarize(traj, config.population_size, observable)
    except HorizonTooShortError:
        longer = replace(config, integrator=config.integrator.with_horizon(
            2 * config.integrator.t_max))
        traj = simulate(longer)
        try:
            return traj, summarize(traj, config.population_size, observable)
        except HorizonTooShortError as exc:
            raise HorizonTooShortError(f"{_describe(config)}: {exc}") from exc


def scenario_peak(config: ScenarioConfig, observable: str) -> float:
    return find_peak(simulate(config), observable)[1]


# ---------------------------------------------------------------------------
# peak matching


@dataclass(frozen=True)
class MatchResult:
    matched_parameter_name: str
    matched_value: float
    achieved_peak: float
    target_peak: float
    iterations: int
    bracket: tuple[float, float]

    @property
    def relative_mismatch(self) -> float:
        return abs(self.achieved_peak - self.target_peak) / self.target_peak


def _testing_rates(config: ScenarioConfig) -> tuple[float, ...]:
    p = config.params
    if config.model_kind is ModelKind.BASIC:
        return (p.psi, p.chi)
    if config.model_kind is ModelKind.EXTENDED:
        return (p.psi_s, p.psi_a)
    return ()


def with_quarantine(config: ScenarioConfig, q: float, split: str = "sum") -> ScenarioConfig:
    """Set the abrupt quarantine to ``q``.

    For the extended model ``split="sum"`` puts ``q/2`` in each of S_sQ and
    S_aQ, while ``split="each"`` puts ``q`` in both.
    """
    if config.model_kind is ModelKind.EXTENDED:
        if split == "sum":
            pair = (q / 2, q / 2)
        elif split == "each":
            pair = (q, q)
        else:
            raise ConfigurationError(f"split must be 'sum' or 'each', got {split!r}")
        return replace(config, initial_quarantine=pair)
    if config.model_kind is ModelKind.SEIR:
        raise UnsupportedParameterError("the seir model has no quarantine compartments")
    return replace(config, initial_quarantine=(q,))


def _bisect_decreasing(peak_of, lo, hi, p_lo, p_hi, target, tolerance, name):
    """Bisection for ``peak_of(x) = target`` with ``peak_of`` decreasing."""
    best = (lo, p_lo) if abs(p_lo - target) <= abs(p_hi - target) else (hi, p_hi)
    bracket = (lo, hi)
    for iteration in range(1, MAX_BISECTIONS + 1):
        if abs(best[1] - target) <= tolerance * target:
            return MatchResult(name, best[0], best[1], target, iteration - 1, bracket)
        mid = 0.5 * (lo + hi)
        p_mid = peak_of(mid)
        if p_mid > target:
            lo = mid
        else:
            hi = mid
        if abs(p_mid - target) < abs(best[1] - target):
            best = (mid, p_mid)
    if abs(best[1] - target) <= tolerance * target:
        return MatchResult(name, best[0], best[1], target, MAX_BISECTIONS, bracket)
    raise BracketError(
        f"bisection on {name} did not reach relative tolerance {tolerance:g} "
        f"in {MAX_BISECTIONS} iterations", achievable=bracket
    )


def _check_target(target, p_lo, p_hi, name, lo, hi):
    if not (p_hi <= target <= p_lo * (1 + MATCH_TOLERANCE)):
        raise BracketError(
            f"target peak {target:.6g} unreachable by varying {name} in [{lo:g}, {hi:g}]; "
            f"achievable peaks are [{p_hi:.6g}, {p_lo:.6g}]",
            achievable=(p_hi, p_lo),
        )


def match_abrupt_quarantine(target_peak: float, base: ScenarioConfig,
                            observable: str = "total_infected",
                            tolerance: float = MATCH_TOLERANCE,
                            split: str = "sum") -> MatchResult:
    """Initial quarantine size that gives the same ``observable`` peak as ``target_peak``.

    The base scenario must have no testing and no gradual quarantining.
    """
    if any(r != 0.0 for r in _testing_rates(base)):
        raise ConfigurationError("abrupt matching needs psi = 0 (and chi = 0) in the base")
    if not target_peak > 0:
        raise DomainError(f"target peak must be positive, got {target_peak!r}")

    def peak_of(q):
        return scenario_peak(with_quarantine(base, q, split), observable)

    lo = 0.0
    hi = 1.0 - sum(base.seed_exposed)
    if base.model_kind is ModelKind.EXTENDED and split == "each":
        hi = hi / 2
    p_lo, p_hi = peak_of(lo), peak_of(hi)
    _check_target(target_peak, p_lo, p_hi, "initial quarantine", lo, hi)
    p_mid = peak_of(0.5 * (lo + hi))
    if not p_lo >= p_mid >= p_hi:
        raise NonMonotoneError(
            f"peak is not monotone in the initial quarantine: "
            f"{p_lo:.6g}, {p_mid:.6g}, {p_hi:.6g} at q = {lo:g}, {0.5 * (lo + hi):g}, {hi:g}"
        )
    return _bisect_decreasing(peak_of, lo, hi, p_lo, p_hi, target_peak, tolerance,
                              "initial_quarantine")


def match_gradual_quarantine(target_peak: float, base: ScenarioConfig,
                             observable: str = "total_infected",
                             tolerance: float = MATCH_TOLERANCE) -> MatchResult:
    """Indiscriminate quarantining rate chi giving the same peak as ``target_peak``.

    Only the basic model has chi. The base must have psi = 0 and no initial
    quarantine.
    """
    if base.model_kind is not ModelKind.BASIC:
        raise UnsupportedParameterError(
            f"chi exists only in the basic model, not in {base.model_kind.value}"
        )
    if base.params.psi != 0.0 or sum(base.initial_quarantine) != 0.0:
        raise ConfigurationError("gradual matching needs psi = 0 and S_Q(0) = 0 in the base")
    if not target_peak > 0:
        raise DomainError(f"target peak must be positive, got {target_peak!r}")

    def peak_of(chi):
        return scenario_peak(base.with_params(chi=chi), observable)

    lo, hi = 0.0, CHI_MAX_INITIAL
    p_lo, p_hi = peak_of(lo), peak_of(hi)
    for _ in range(CHI_MAX_DOUBLINGS):
        if p_hi <= target_peak:
            break
        hi *= 2
        p_hi = peak_of(hi)
    _check_target(target_peak, p_lo, p_hi, "chi", lo, hi)
    p_mid = peak_of(0.5 * (lo + hi))
    if not p_lo >= p_mid >= p_hi:
        raise NonMonotoneError(
            f"peak is not monotone in chi: {p_lo:.6g}, {p_mid:.6g}, {p_hi:.6g} "
            f"at chi = {lo:g}, {0.5 * (lo + hi):g}, {hi:g}"
        )
    return _bisect_decreasing(peak_of, lo, hi, p_lo, p_hi, target_peak, tolerance, "chi")


# ---------------------------------------------------------------------------
# testing versus indiscriminate quarantining


def testing_scenario(base: ScenarioConfig, psi: float) -> ScenarioConfig:
    """Quarantining based on testing only: rate ``psi``, no indiscriminate quarantine."""
    if base.model_kind is ModelKind.BASIC:
        cfg = base.with_params(psi=psi, chi=0.0)
    elif base.model_kind is ModelKind.EXTENDED:
        cfg = base.with_params(psi_s=psi, psi_a=psi)
    else:
        raise UnsupportedParameterError("the seir model has no testing rate")
    return with_quarantine(cfg, 0.0)


def indiscriminate_base(base: ScenarioConfig) -> ScenarioConfig:
    """``base`` with testing and all quarantining switched off."""
    return with_quarantine(testing_scenario(base, 0.0), 0.0)


@dataclass(frozen=True)
class CostComparison:
    psi: float
    strategy: str
    match: MatchResult
    testing: EpidemicSummary
    indiscriminate: EpidemicSummary
    testing_config: ScenarioConfig
    indiscriminate_config: ScenarioConfig

    @property
    def ratio(self) -> float:
        return self.indiscriminate.quarantine_integral / self.testing.quarantine_integral


def compare_quarantine_cost(psi: float, base: ScenarioConfig, strategy: str,
                            observable: str = "total_infected",
                            split: str = "sum") -> CostComparison:
    """Match an indiscriminate strategy to the testing scenario at rate ``psi``
    and summarize both, each over its own epidemic duration."""
    if not (math.isfinite(psi) and psi > 0):
        raise DomainError(f"psi must be positive, got {psi!r}")
    testing = testing_scenario(base, psi)
    _, test_summary = run_scenario(testing, observable)
    plain = indiscriminate_base(base)
    if strategy == "abrupt":
        match = match_abrupt_quarantine(test_summary.peak_value, plain, observable, split=split)
        matched = with_quarantine(plain, match.matched_value, split)
    elif strategy == "gradual":
        match = match_gradual_quarantine(test_summary.peak_value, plain, observable)
        matched = plain.with_params(chi=match.matched_value)
    else:
        raise ConfigurationError(f"strategy must be 'abrupt' or 'gradual', got {strategy!r}")
    _, ind_summary = run_scenario(matched, observable)
    return CostComparison(psi, strategy, match, test_summary, ind_summary, testing, matched)


def quarantine_cost_ratio(psi: float, base: ScenarioConfig, strategy: str,
                          observable: str = "total_infected", split: str = "sum") -> float:
    """Quarantine-cost integral of the matched indiscriminate strategy divided
    by that of quarantining based on testing at rate ``psi``."""
    return compare_quarantine_cost(psi, base, strategy, observable, split).ratio


# ---------------------------------------------------------------------------
# sweeps


def apply_override(config: ScenarioConfig, path: str, value: float) -> ScenarioConfig:
    """Return ``config`` with the field at ``path`` set to ``value``.

    Paths are dotted (``params.beta_s``, ``population_size``,
    ``initial_quarantine.1``). A ``1/`` prefix sets the reciprocal, e.g.
    ``1/params.gamma_a`` takes a mean duration. Several paths joined by
    ``+`` all receive the same value.
    """
    for part in path.split("+"):
        part = part.strip()
        v = float(value)
        if part.startswith("1/"):
            part = part[2:]
            if v == 0:
                raise DomainError(f"cannot take the reciprocal of 0 for {part}")
            v = 1.0 / v
        config = _set_path(config, part, v)
    return config


def _set_path(config: ScenarioConfig, path: str, value: float) -> ScenarioConfig:
    head, _, rest = path.partition(".")
    if head == "params":
        names = {f for f in config.params.as_dict()}
        if rest not in names or rest == "feedback_enabled":
            raise UnsupportedParameterError(
                f"{config.model_kind.value} parameters have no numeric field {rest!r}"
            )
        return config.with_params(**{rest: value})
    if head == "population_size" and not rest:
        return replace(config, population_size=value)
    if head in ("seed_exposed", "initial_quarantine"):
        current = list(getattr(config, head))
        if rest:
            try:
                current[int(rest)] = value
            except (ValueError, IndexError):
                raise UnsupportedParameterError(f"bad index in {path!r}") from None
        else:
            current = [value] * len(current)
        return replace(config, **{head: tuple(current)})
    if head == "integrator" and rest in ("t_max", "rtol", "atol", "dt", "output_dt"):
        return replace(config, integrator=replace(config.integrator, **{rest: value}))
    raise UnsupportedParameterError(f"unknown parameter path {path!r}")


@dataclass(frozen=True, eq=False)
class SweepGrid:
    axis1: tuple[str, tuple[float, ...]]
    axis2: tuple[str, tuple[float, ...]] | None
    observable: str
    values: np.ndarray
    errors: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.values.shape


def _cell_peak(base, overrides, observable):
    try:
        cfg = base
        for path, value in overrides:
            cfg = apply_override(cfg, path, value)
        return scenario_peak(cfg, observable), None
    except SeirqError as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def _run_cells(base, cells, observable, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda c: _cell_peak(base, c, observable), cells))
    return [_cell_peak(base, c, observable) for c in cells]


def sweep_1d(base: ScenarioConfig, path: str, values: Sequence[float], observable: str,
             workers: int | None = None) -> SweepGrid:
    """Peak of ``observable`` for each value of the parameter at ``path``.

    Failing cells hold NaN and are listed in ``errors``; the sweep completes.
    """
    values = tuple(float(v) for v in values)
    results = _run_cells(base, [((path, v),) for v in values], observable, workers)
    grid = np.array([r[0] for r in results])
    errors = {(i,): r[1] for i, r in enumerate(results) if r[1] is not None}
    return SweepGrid((path, values), None, observable, grid, errors)


def sweep_2d(base: ScenarioConfig, path1: str, values1: Sequence[float], path2: str,
             values2: Sequence[float], observable: str,
             workers: int | None = None) -> SweepGrid:
    """Peak of ``observable`` over the product grid ``values1 x values2``."""
    values1 = tuple(float(v) for v in values1)
    values2 = tuple(float(v) for v in values2)
    cells = [((path1, a), (path2, b)) for a in values1 for b in values2]
    results = _run_cells(base, cells, observable, workers)
    grid = np.array([r[0] for r in results]).reshape(len(values1), len(values2))
    errors = {divmod(i, len(values2)): r[1] for i, r in enumerate(results) if r[1] is not None}
    return SweepGrid((path1, values1), (path2, values2), observable, grid, errors)


@dataclass(frozen=True)
class LatencyCell:
    lambda_: float
    gamma: float | None
    peak_time: float
    peak_value: float
    error: str | None = None


@dataclass(frozen=True)
class LatencySweep:
    cells: tuple[LatencyCell, ...]
    reference_time: float
    reference_value: float
    observable: str


def latency_reference(base: ScenarioConfig, delta: float) -> ScenarioConfig:
    """Basic-model counterpart of an extended scenario with recovery rate ``delta``."""
    p = base.params
    params = BasicParams(beta=p.beta_s, omega=p.omega_s, delta=delta, psi=0.0, chi=0.0,
                         rho=p.rho, k=0.5)
    return ScenarioConfig(ModelKind.BASIC, params, base.population_size,
                          (sum(base.seed_exposed),), (sum(base.initial_quarantine),),
                          base.integrator)


def latency_sweep(base: ScenarioConfig, lambda_values: Sequence[float], delta: float,
                  observable: str = "reported_active") -> LatencySweep:
    """Peak timing and height while the infectious period ``1/delta`` is split
    into a latent part ``1/lambda`` and the rest ``1/gamma``.

    Cells with ``lambda <= delta`` carry a domain error instead of a result.
    """
    if base.model_kind is not ModelKind.EXTENDED:
        raise UnsupportedParameterError("latency sweeps need the extended model")
    if base.params.psi_s != 0.0 or base.params.psi_a != 0.0:
        raise ConfigurationError("latency sweeps need psi_s = psi_a = 0")
    cells = []
    for lam in lambda_values:
        lam = float(lam)
        try:
            gamma = split_infectious_period(delta, lam)
            cfg = base.with_params(lambda_s=lam, lambda_a=lam, gamma_s=gamma, gamma_a=gamma)
            t_peak, v_peak = find_peak(simulate(cfg), observable)
            cells.append(LatencyCell(lam, gamma, t_peak, v_peak))
        except SeirqError as exc:
            cells.append(LatencyCell(lam, None, math.nan, math.nan,
                                     f"{type(exc).__name__}: {exc}"))
    ref_time, ref_value = find_peak(simulate(latency_reference(base, delta)), observable)
    return LatencySweep(tuple(cells), ref_time, ref_value, observable)


def crossing_point(xs: Sequence[float], ys: Sequence[float], level: float) -> float | None:
    """First ``x`` at which the piecewise-linear curve through ``(xs, ys)``
    reaches ``level`` from below; ``None`` if the curve starts at or above
    ``level`` or never reaches it.
    """
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        if math.isfinite(y0) and math.isfinite(y1) and y0 < level <= y1:
            return x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    return None
