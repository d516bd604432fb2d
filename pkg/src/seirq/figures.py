"""Pre-registered experiments behind each figure id.

Every figure writes one CSV and one SVG per panel plus ``params.json``, which
records the resolved configuration of every run and any derived quantities
(matched parameters, crossing points). Panels are named
``panel_<letter>_<content>``.

========  =====================================================================
id        experiment
========  =====================================================================
fig2      SEIR versus basic versus extended: reported and total infected
fig3      abrupt quarantine size S_Q(0) in {0, 0.1, 0.2, 0.3, 0.4}, both models
fig4      extended model with and without the quarantine-conserving feedback
fig5      testing rate psi in {0, 0.1, 0.2, 0.3}, both models
fig6      peak heights over 1/gamma_s x 1/gamma_a for two latent rates
fig7      peak heights over beta_s x beta_a and psi_s x psi_a
fig8      timing and height of the reported peak as the latent period varies
fig9      abrupt versus gradual quarantine matched to the same peak
fig10     indiscriminate quarantine versus testing, basic model
fig11     indiscriminate quarantine versus testing, extended model
========  =====================================================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .analysis import observable_series
from .config import scenario_to_dict
from .errors import ConfigurationError
from .integrator import IntegratorConfig
from .model import BasicParams, ExtendedParams, ModelKind, SeirParams
from .output import (Series, emit_grid_csv, emit_series_csv, emit_svg_chart,
                     emit_table_csv, line_chart_svg)
from .scenarios import (DEFAULT_POPULATION, ScenarioConfig, compare_quarantine_cost,
                        crossing_point, latency_sweep, match_gradual_quarantine,
                        scenario_peak, simulate, sweep_2d, with_quarantine)

FIGURE_HORIZON = 700.0
RATIO_LEVEL = 10.0

_LABELS = {
    "reported_active": "I_sQ",
    "total_infected": "total infected",
    "total_quarantined": "total quarantined",
    "sigma_q": "conserved quarantine sum",
}


@dataclass
class FigureContext:
    out_dir: Path
    integrator: IntegratorConfig
    emitted: list[tuple[str, str]] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def record(self, name: str, kind: str):
        self.emitted.append((name, kind))

    def scenario(self, kind: ModelKind, params, **kw) -> ScenarioConfig:
        return ScenarioConfig(kind, params, integrator=self.integrator, **kw)

    def timeseries_panel(self, name: str, title: str, runs: dict, observable: str):
        """``runs`` maps series label to ``(config, trajectory)``."""
        trajs = [traj for _, traj in runs.values()]
        times = trajs[0].times
        columns = {}
        for label, (_, traj) in runs.items():
            if not np.array_equal(traj.times, times):
                raise ConfigurationError(f"{name}: runs do not share an output grid")
            columns[label] = observable_series(traj, observable)[0]
        emit_series_csv(times, columns, self.path(f"{name}.csv"))
        self.record(f"{name}.csv", "csv")
        line_chart_svg([Series(lbl, times, v) for lbl, v in columns.items()],
                       self.path(f"{name}.svg"), title=title, xlabel="t (days)",
                       ylabel=_LABELS.get(observable, observable))
        self.record(f"{name}.svg", "svg")

    def grid_panel(self, name: str, title: str, grid):
        emit_grid_csv(grid, self.path(f"{name}.csv"))
        self.record(f"{name}.csv", "csv")
        emit_svg_chart(grid, self.path(f"{name}.svg"), title=title)
        self.record(f"{name}.svg", "svg")

    def table_panel(self, name: str, header, rows, series, title, xlabel, ylabel,
                    markers=False):
        emit_table_csv(header, rows, self.path(f"{name}.csv"))
        self.record(f"{name}.csv", "csv")
        line_chart_svg(series, self.path(f"{name}.svg"), title=title, xlabel=xlabel,
                       ylabel=ylabel, markers=markers)
        self.record(f"{name}.svg", "svg")

    def log_runs(self, key: str, runs: dict):
        self.params.setdefault("runs", {})[key] = {
            label: scenario_to_dict(cfg) for label, (cfg, _) in runs.items()
        }


def _run(configs: dict) -> dict:
    return {label: (cfg, simulate(cfg)) for label, cfg in configs.items()}


def fig2(ctx: FigureContext):
    """SEIR versus the quarantine models without testing or gradual quarantine."""
    basic = _run({
        "seir": ctx.scenario(ModelKind.SEIR, SeirParams()),
        "basic_k0.5_rho0": ctx.scenario(ModelKind.BASIC, BasicParams(k=0.5, rho=0.0)),
        "basic_k0.5_rho0.5": ctx.scenario(ModelKind.BASIC, BasicParams(k=0.5, rho=0.5)),
    })
    one = 1.0 / DEFAULT_POPULATION
    extended = _run({
        "extended_es2_ea0_rho0": ctx.scenario(ModelKind.EXTENDED, ExtendedParams(rho=0.0),
                                              seed_exposed=(2 * one, 0.0)),
        "extended_es1_ea1_rho0": ctx.scenario(ModelKind.EXTENDED, ExtendedParams(rho=0.0)),
        "extended_es1_ea1_rho0.5": ctx.scenario(ModelKind.EXTENDED, ExtendedParams(rho=0.5)),
    })
    ctx.timeseries_panel("panel_a_reported_basic", "I_sQ, SEIR and basic model", basic,
                         "reported_active")
    ctx.timeseries_panel("panel_b_reported_extended", "I_sQ, extended model", extended,
                         "reported_active")
    ctx.timeseries_panel("panel_c_total_basic", "total infected, SEIR and basic model",
                         basic, "total_infected")
    ctx.timeseries_panel("panel_d_total_extended", "total infected, extended model",
                         extended, "total_infected")
    ctx.log_runs("basic", basic)
    ctx.log_runs("extended", extended)


QUARANTINE_SIZES = (0.0, 0.1, 0.2, 0.3, 0.4)


def fig3(ctx: FigureContext):
    """Abrupt quarantine of increasing size."""
    basic = _run({f"sq{q:g}": with_quarantine(ctx.scenario(ModelKind.BASIC, BasicParams()), q)
                  for q in QUARANTINE_SIZES})
    extended = _run({
        f"sq{q:g}": with_quarantine(ctx.scenario(ModelKind.EXTENDED, ExtendedParams()), q)
        for q in QUARANTINE_SIZES
    })
    ctx.timeseries_panel("panel_a_reported_basic", "I_sQ, basic model", basic,
                         "reported_active")
    ctx.timeseries_panel("panel_b_reported_extended", "I_sQ, extended model", extended,
                         "reported_active")
    ctx.timeseries_panel("panel_c_total_basic", "total infected, basic model", basic,
                         "total_infected")
    ctx.timeseries_panel("panel_d_total_extended", "total infected, extended model",
                         extended, "total_infected")
    ctx.log_runs("basic", basic)
    ctx.log_runs("extended", extended)


def fig4(ctx: FigureContext):
    """Quarantine-conserving feedback switched on and off at psi = 0.1."""
    configs = {}
    for q in (0.2, 0.4):
        for enabled in (True, False):
            params = ExtendedParams(psi_s=0.1, psi_a=0.1, feedback_enabled=enabled)
            label = f"sq{q:g}_{'feedback' if enabled else 'no_feedback'}"
            configs[label] = with_quarantine(ctx.scenario(ModelKind.EXTENDED, params), q)
    runs = _run(configs)
    ctx.timeseries_panel("panel_a_reported", "I_sQ with and without feedback", runs,
                         "reported_active")
    ctx.timeseries_panel("panel_b_total", "total infected with and without feedback", runs,
                         "total_infected")
    ctx.timeseries_panel("panel_c_conserved_quarantine", "conserved quarantine sum", runs,
                         "sigma_q")
    ctx.log_runs("extended", runs)


TESTING_RATES = (0.0, 0.1, 0.2, 0.3)


def fig5(ctx: FigureContext):
    """Testing rate psi in both models."""
    basic = _run({f"psi{p:g}": ctx.scenario(ModelKind.BASIC, BasicParams(psi=p))
                  for p in TESTING_RATES})
    extended = _run({f"psi{p:g}": ctx.scenario(ModelKind.EXTENDED,
                                                ExtendedParams(psi_s=p, psi_a=p))
                     for p in TESTING_RATES})
    ctx.timeseries_panel("panel_a_reported_basic", "I_sQ, basic model", basic,
                         "reported_active")
    ctx.timeseries_panel("panel_b_reported_extended", "I_sQ, extended model", extended,
                         "reported_active")
    ctx.timeseries_panel("panel_c_total_basic", "total infected, basic model", basic,
                         "total_infected")
    ctx.timeseries_panel("panel_d_total_extended", "total infected, extended model",
                         extended, "total_infected")
    ctx.log_runs("basic", basic)
    ctx.log_runs("extended", extended)


PERIOD_GRID = tuple(float(v) for v in np.linspace(2.0, 7.0, 11))
BETA_GRID = tuple(float(v) for v in np.linspace(0.1, 0.6, 11))
PSI_GRID = tuple(float(v) for v in np.linspace(0.0, 0.4, 11))


def _heatmaps(ctx, panels, base, path1, values1, path2, values2):
    for name, observable in panels:
        grid = sweep_2d(base, path1, values1, path2, values2, observable)
        ctx.grid_panel(name, f"peak of {_LABELS[observable]}", grid)
        ctx.params.setdefault("grids", {})[name] = {
            "axis1": {"path": path1, "values": list(values1)},
            "axis2": {"path": path2, "values": list(values2)},
            "observable": observable,
            "base": scenario_to_dict(base),
            "failed_cells": {str(k): v for k, v in grid.errors.items()},
        }


def fig6(ctx: FigureContext):
    """Peak sensitivity to the infectious-stage lengths of both groups."""
    for letters, lam in ((("a", "b"), 0.5), (("c", "d"), 10.0)):
        base = ctx.scenario(ModelKind.EXTENDED, ExtendedParams(lambda_s=lam, lambda_a=lam),
                            initial_quarantine=(0.1, 0.1))
        _heatmaps(ctx, [(f"panel_{letters[0]}_reported_lambda{lam:g}", "reported_active"),
                        (f"panel_{letters[1]}_total_lambda{lam:g}", "total_infected")],
                  base, "1/params.gamma_s", PERIOD_GRID, "1/params.gamma_a", PERIOD_GRID)


def fig7(ctx: FigureContext):
    """Peak sensitivity to the transmission and testing rates of both groups."""
    base = ctx.scenario(ModelKind.EXTENDED, ExtendedParams(), initial_quarantine=(0.1, 0.1))
    _heatmaps(ctx, [("panel_a_reported_beta", "reported_active"),
                    ("panel_b_total_beta", "total_infected")],
              base, "params.beta_s", BETA_GRID, "params.beta_a", BETA_GRID)
    _heatmaps(ctx, [("panel_c_reported_psi", "reported_active"),
                    ("panel_d_total_psi", "total_infected")],
              base, "params.psi_s", PSI_GRID, "params.psi_a", PSI_GRID)


LATENT_PERIODS = (5.0, 4.5, 4.0, 3.5, 3.0, 2.5, 2.0, 1.5, 1.0, 0.75, 0.5, 0.25, 0.1, 0.05)
INFECTIOUS_PERIOD = 5.5


def fig8(ctx: FigureContext):
    """Reported peak as the latent part of a fixed infectious period varies."""
    base = ctx.scenario(ModelKind.EXTENDED, ExtendedParams())
    sweep = latency_sweep(base, [1.0 / p for p in LATENT_PERIODS], 1.0 / INFECTIOUS_PERIOD,
                          "reported_active")
    rows = [[1.0 / c.lambda_, c.lambda_, c.gamma if c.gamma is not None else float("nan"),
             c.peak_time, c.peak_value] for c in sweep.cells]
    ctx.table_panel(
        "panel_a_latency", ["latent_period", "lambda", "gamma", "peak_time", "peak_value"],
        rows,
        [Series("extended", [r[3] for r in rows], [r[4] for r in rows]),
         Series("basic reference", [sweep.reference_time], [sweep.reference_value])],
        "timing and height of the I_sQ peak", "peak time (days)", "peak of I_sQ",
        markers=True,
    )
    ctx.params["latency"] = {
        "infectious_period": INFECTIOUS_PERIOD,
        "latent_periods": list(LATENT_PERIODS),
        "reference": {"peak_time": sweep.reference_time, "peak_value": sweep.reference_value},
        "failed_cells": {repr(c.lambda_): c.error for c in sweep.cells if c.error},
        "base": scenario_to_dict(base),
    }


def fig9(ctx: FigureContext):
    """Gradual quarantine rate matched to the peak of an abrupt quarantine."""
    base = ctx.scenario(ModelKind.BASIC, BasicParams())
    configs, matches = {}, {}
    for q in (0.2, 0.4):
        abrupt = with_quarantine(base, q)
        target = scenario_peak(abrupt, "total_infected")
        match = match_gradual_quarantine(target, base, "total_infected")
        configs[f"abrupt_sq{q:g}"] = abrupt
        configs[f"gradual_matching_sq{q:g}"] = base.with_params(chi=match.matched_value)
        matches[f"sq{q:g}"] = {"target_peak": target, "chi": match.matched_value,
                               "achieved_peak": match.achieved_peak}
    runs = _run(configs)
    ctx.timeseries_panel("panel_a_reported", "I_sQ, abrupt versus gradual", runs,
                         "reported_active")
    ctx.timeseries_panel("panel_b_total", "total infected, abrupt versus gradual", runs,
                         "total_infected")
    ctx.timeseries_panel("panel_c_quarantined", "quarantined, abrupt versus gradual", runs,
                         "total_quarantined")
    ctx.params["matches"] = matches
    ctx.log_runs("basic", runs)


COST_PSI_GRID = (0.005, 0.01, 0.015, 0.02) + tuple(round(0.025 * i, 3) for i in range(1, 13))
SELECTED_PSI = 0.1


def _comparison_panels(ctx, base, strategies, split):
    comps = {s: compare_quarantine_cost(SELECTED_PSI, base, s, split=split) for s in strategies}
    first = next(iter(comps.values()))
    configs = {f"testing_psi{SELECTED_PSI:g}": first.testing_config}
    for s, comp in comps.items():
        configs[f"{s}_matched"] = comp.indiscriminate_config
    runs = _run(configs)
    ctx.timeseries_panel("panel_a_total", "total infected at matched peaks", runs,
                         "total_infected")
    ctx.timeseries_panel("panel_b_quarantined", "total quarantined at matched peaks", runs,
                         "total_quarantined")
    ctx.log_runs("selected", runs)
    ctx.params["selected"] = {
        s: {"matched_parameter": c.match.matched_parameter_name,
            "matched_value": c.match.matched_value, "ratio": c.ratio,
            "target_peak": c.match.target_peak, "achieved_peak": c.match.achieved_peak}
        for s, c in comps.items()
    }


def fig10(ctx: FigureContext):
    """Indiscriminate (abrupt, gradual) quarantine versus testing, basic model."""
    base = ctx.scenario(ModelKind.BASIC, BasicParams())
    strategies = ("abrupt", "gradual")
    _comparison_panels(ctx, base, strategies, "sum")
    table = {s: [compare_quarantine_cost(p, base, s) for p in COST_PSI_GRID] for s in strategies}
    psis = list(COST_PSI_GRID)
    matched = {s: [c.match.matched_value for c in table[s]] for s in strategies}
    ratios = {s: [c.ratio for c in table[s]] for s in strategies}
    ctx.table_panel(
        "panel_c_matched_parameters", ["psi", "matched_initial_quarantine", "matched_chi"],
        [[p, a, g] for p, a, g in zip(psis, matched["abrupt"], matched["gradual"])],
        [Series("S_Q(0)", psis, matched["abrupt"]), Series("chi", psis, matched["gradual"])],
        "indiscriminate quarantine matching the testing peak", "psi", "matched value",
    )
    ctx.table_panel(
        "panel_d_cost_ratio", ["psi", "ratio_abrupt", "ratio_gradual"],
        [[p, a, g] for p, a, g in zip(psis, ratios["abrupt"], ratios["gradual"])],
        [Series("abrupt", psis, ratios["abrupt"]), Series("gradual", psis, ratios["gradual"])],
        "quarantine-integral ratio, indiscriminate / testing", "psi", "ratio",
    )
    ctx.params["cost_ratio"] = {
        "psi_grid": psis,
        "ratio_level": RATIO_LEVEL,
        "psi_star": {s: crossing_point(psis, ratios[s], RATIO_LEVEL) for s in strategies},
        "ratios": ratios,
        "matched": matched,
    }


def fig11(ctx: FigureContext):
    """Indiscriminate abrupt quarantine versus testing, extended model.

    The matched quarantine S_Q(0) is split equally between both groups.
    """
    base = ctx.scenario(ModelKind.EXTENDED, ExtendedParams())
    _comparison_panels(ctx, base, ("abrupt",), "sum")


FIGURES: dict[str, Callable[[FigureContext], None]] = {
    f.__name__: f for f in (fig2, fig3, fig4, fig5, fig6, fig7, fig8, fig9, fig10, fig11)
}


def run_figure(figure_id: str, out_dir, integrator: IntegratorConfig | None = None):
    """Run one figure experiment into ``out_dir`` and return the emitted files.

    Raises
    ------
    ConfigurationError
        ``figure_id`` is not one of :data:`FIGURES`.
    """
    if figure_id not in FIGURES:
        raise ConfigurationError(
            f"unknown figure id {figure_id!r}; valid ids: {', '.join(FIGURES)}"
        )
    if integrator is None:
        integrator = IntegratorConfig(t_max=FIGURE_HORIZON)
    out_dir = Path(out_dir)
    ctx = FigureContext(out_dir, integrator)
    ctx.params["figure"] = figure_id
    ctx.params["description"] = (FIGURES[figure_id].__doc__ or "").strip().splitlines()[0]
    FIGURES[figure_id](ctx)
    (out_dir / "params.json").write_text(json.dumps(ctx.params, indent=2) + "\n")
    ctx.record("params.json", "json")
    return ctx.emitted
