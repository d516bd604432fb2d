"""Command-line interface.

Exit codes: 0 on success, 1 on invalid input (including usage errors and
unwritable output paths), 2 when a computation fails numerically.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import EpidemicSummary
from .config import GridSweepSpec, LatencySweepSpec, parse_config, scenario_to_dict
from .errors import ConfigurationError, NumericalError, OutputError, SeirqError
from .figures import FIGURE_HORIZON, FIGURES, RATIO_LEVEL, run_figure
from .integrator import IntegratorConfig
from .model import ModelKind, model_spec, observable_weights
from .output import (RunManifest, Series, emit_grid_csv, emit_series_csv, emit_svg_chart,
                     emit_table_csv, emit_timeseries_csv, line_chart_svg)
from .scenarios import (ScenarioConfig, compare_quarantine_cost, crossing_point,
                        latency_sweep, run_scenario, simulate, sweep_1d, sweep_2d)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2
TIMESERIES_OBSERVABLES = ("reported_active", "total_infected", "total_quarantined")


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the validation code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return value


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") \
            from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=_positive_float,
                        help="relative tolerance of the adaptive integrator")
    common.add_argument("--t-max", type=_positive_float, dest="t_max",
                        help="integration horizon in days")

    parser = _Parser(prog="seirq", description="Epidemic models with quarantine and testing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="run one scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("match-peak", parents=[common],
                       help="match indiscriminate quarantine to a testing scenario's peak")
    p.add_argument("--config", required=True)
    p.add_argument("--strategy", choices=("abrupt", "gradual"), required=True)
    p.add_argument("--psi", type=_positive_float, required=True)
    p.add_argument("--split", choices=("sum", "each"), default="sum",
                   help="extended model: S_Q(0) is the sum of both groups or each group's share")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("cost-ratio", parents=[common],
                       help="quarantine-cost ratio over a grid of testing rates")
    p.add_argument("--config", required=True)
    p.add_argument("--psi-grid", type=_float_list, required=True, dest="psi_grid")
    p.add_argument("--strategy", choices=("abrupt", "gradual", "both"), default="both")
    p.add_argument("--split", choices=("sum", "each"), default="sum")
    p.add_argument("--out", required=True)

    p = sub.add_parser("figure", parents=[common], help="reproduce one figure experiment")
    p.add_argument("figure_id", metavar="id", choices=list(FIGURES),
                   help=f"one of {', '.join(FIGURES)}")
    p.add_argument("--out", required=True)
    return parser


def _override_integrator(integrator: IntegratorConfig, args) -> IntegratorConfig:
    if args.tolerance is not None:
        integrator = replace(integrator, rtol=args.tolerance)
    if args.t_max is not None:
        integrator = replace(integrator, t_max=args.t_max)
    return integrator


def _override(config: ScenarioConfig, args) -> ScenarioConfig:
    return replace(config, integrator=_override_integrator(config.integrator, args))


def _prepare_out(out) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"{out}: cannot create output directory ({exc.strerror})") from None
    return out


def _write_json(path: Path, data) -> None:
    try:
        path.write_text(json.dumps(data, indent=2) + "\n")
    except OSError as exc:
        raise OutputError(f"{path}: cannot write ({exc.strerror})") from None


def _summary_dict(summary: EpidemicSummary) -> dict:
    return {
        "observable": summary.observable_name,
        "peak_value": summary.peak_value,
        "peak_time": summary.peak_time,
        "end_time": summary.end_time,
        "quarantine_integral": summary.quarantine_integral,
        "degenerate": summary.degenerate,
    }


class _Run:
    def __init__(self, command, config_path, out):
        self.out = _prepare_out(out)
        self.manifest = RunManifest(command, config_path, str(out), [])

    def add(self, name, kind):
        self.manifest.emitted_files.append((name, kind))
        return self.out / name

    def json(self, name, data):
        _write_json(self.out / name, data)
        self.add(name, "json")

    def finish(self) -> RunManifest:
        _write_json(self.out / "manifest.json", self.manifest.to_dict())
        return self.manifest


def _load_scenario(args) -> ScenarioConfig:
    config = parse_config(args.config)
    if not isinstance(config, ScenarioConfig):
        raise ConfigurationError(f"{args.config}: a sweep file needs the 'sweep' command")
    return _override(config, args)


def cmd_simulate(args) -> RunManifest:
    config = _load_scenario(args)
    traj, summary = run_scenario(config)
    run = _Run("simulate", args.config, args.out)
    run.json("params.json", scenario_to_dict(config))
    emit_timeseries_csv(traj, TIMESERIES_OBSERVABLES, run.add("timeseries.csv", "csv"))
    emit_timeseries_csv(traj, model_spec(config.model_kind).state_cls.field_names(),
                        run.add("compartments.csv", "csv"))
    kind = config.model_kind
    line_chart_svg([Series(n, traj.times, traj.states @ observable_weights(kind, n))
                    for n in TIMESERIES_OBSERVABLES],
                   run.add("timeseries.svg", "svg"), title=f"{config.model_kind.value} model",
                   xlabel="t (days)", ylabel="fraction of population")
    run.json("summary.json", _summary_dict(summary))
    print(f"peak {summary.peak_value:.6g} at t = {summary.peak_time:.4g}; "
          f"epidemic end t_e = {summary.end_time:.6g}")
    return run.finish()


def cmd_match_peak(args) -> RunManifest:
    base = _load_scenario(args)
    comp = compare_quarantine_cost(args.psi, base, args.strategy, split=args.split)
    testing, matched = simulate(comp.testing_config), simulate(comp.indiscriminate_config)
    run = _Run("match-peak", args.config, args.out)
    run.json("params.json", {"testing": scenario_to_dict(comp.testing_config),
                             "matched": scenario_to_dict(comp.indiscriminate_config)})
    columns, kind = {}, base.model_kind
    for name in ("total_infected", "total_quarantined"):
        w = observable_weights(kind, name)
        columns[f"testing_{name}"] = testing.states @ w
        columns[f"matched_{name}"] = matched.states @ w
    emit_series_csv(testing.times, columns, run.add("timeseries.csv", "csv"))
    for name in ("total_infected", "total_quarantined"):
        line_chart_svg([Series(f"testing psi={args.psi:g}", testing.times,
                               columns[f"testing_{name}"]),
                        Series(f"{args.strategy} matched", matched.times,
                               columns[f"matched_{name}"])],
                       run.add(f"{name}.svg", "svg"), title=name, xlabel="t (days)",
                       ylabel="fraction of population")
    m = comp.match
    run.json("match.json", {
        "psi": args.psi,
        "strategy": args.strategy,
        "matched_parameter": m.matched_parameter_name,
        "matched_value": m.matched_value,
        "target_peak": m.target_peak,
        "achieved_peak": m.achieved_peak,
        "relative_mismatch": m.relative_mismatch,
        "iterations": m.iterations,
        "bracket": list(m.bracket),
        "testing": _summary_dict(comp.testing),
        "matched": _summary_dict(comp.indiscriminate),
        "cost_ratio": comp.ratio,
    })
    print(f"{m.matched_parameter_name} = {m.matched_value:.6g} "
          f"(peak {m.achieved_peak:.6g} vs target {m.target_peak:.6g}); "
          f"cost ratio {comp.ratio:.4g}")
    return run.finish()


def cmd_sweep(args) -> RunManifest:
    spec = parse_config(args.config)
    if isinstance(spec, ScenarioConfig):
        raise ConfigurationError(f"{args.config}: missing 'sweep' object")
    base = _override(spec.scenario, args)
    run = _Run("sweep", args.config, args.out)
    if isinstance(spec, LatencySweepSpec):
        sweep = latency_sweep(base, spec.lambda_values, spec.delta, spec.observable)
        rows = [[c.lambda_, c.gamma if c.gamma is not None else math.nan, c.peak_time,
                 c.peak_value] for c in sweep.cells]
        emit_table_csv(["lambda", "gamma", "peak_time", "peak_value"], rows,
                       run.add("latency.csv", "csv"))
        line_chart_svg([Series("extended", [r[2] for r in rows], [r[3] for r in rows]),
                        Series("basic reference", [sweep.reference_time],
                               [sweep.reference_value])],
                       run.add("latency.svg", "svg"), title=f"peak of {spec.observable}",
                       xlabel="peak time (days)", ylabel="peak value", markers=True)
        run.json("summary.json", {
            "reference": {"peak_time": sweep.reference_time,
                          "peak_value": sweep.reference_value},
            "failed_cells": {repr(c.lambda_): c.error for c in sweep.cells if c.error},
        })
    else:
        assert isinstance(spec, GridSweepSpec)
        path1, values1 = spec.axis1
        if spec.axis2 is None:
            grid = sweep_1d(base, path1, values1, spec.observable, spec.workers)
        else:
            path2, values2 = spec.axis2
            grid = sweep_2d(base, path1, values1, path2, values2, spec.observable,
                            spec.workers)
        emit_grid_csv(grid, run.add("grid.csv", "csv"))
        emit_svg_chart(grid, run.add("grid.svg", "svg"))
        run.json("summary.json", {"failed_cells": {str(k): v for k, v in grid.errors.items()}})
        if grid.errors:
            print(f"{len(grid.errors)} sweep cell(s) failed; see summary.json", file=sys.stderr)
    run.json("params.json", scenario_to_dict(base))
    return run.finish()


def cmd_cost_ratio(args) -> RunManifest:
    base = _load_scenario(args)
    if args.strategy == "both":
        strategies = ("abrupt", "gradual") if base.model_kind is ModelKind.BASIC else ("abrupt",)
    else:
        strategies = (args.strategy,)
    psis = list(args.psi_grid)
    comps = {s: [compare_quarantine_cost(p, base, s, split=args.split) for p in psis]
             for s in strategies}
    run = _Run("cost-ratio", args.config, args.out)
    header = ["psi"]
    for s in strategies:
        header += [f"ratio_{s}", f"matched_{s}"]
    rows = []
    for i, p in enumerate(psis):
        row = [p]
        for s in strategies:
            row += [comps[s][i].ratio, comps[s][i].match.matched_value]
        rows.append(row)
    emit_table_csv(header, rows, run.add("cost_ratio.csv", "csv"))
    ratios = {s: [c.ratio for c in comps[s]] for s in strategies}
    line_chart_svg([Series(s, psis, ratios[s]) for s in strategies],
                   run.add("cost_ratio.svg", "svg"),
                   title="quarantine-integral ratio, indiscriminate / testing",
                   xlabel="psi", ylabel="ratio")
    psi_star = {s: crossing_point(psis, ratios[s], RATIO_LEVEL) for s in strategies}
    run.json("summary.json", {"ratio_level": RATIO_LEVEL, "psi_star": psi_star,
                              "ratios": ratios})
    run.json("params.json", scenario_to_dict(base))
    for s in strategies:
        print(f"{s}: " + ", ".join(f"psi={p:g}: {r:.4g}" for p, r in zip(psis, ratios[s])))
    return run.finish()


def cmd_figure(args) -> RunManifest:
    integrator = _override_integrator(IntegratorConfig(t_max=FIGURE_HORIZON), args)
    run = _Run("figure", None, args.out)
    for name, kind in run_figure(args.figure_id, run.out, integrator):
        run.add(name, kind)
    print(f"{args.figure_id}: {len(run.manifest.emitted_files)} files in {run.out}")
    return run.finish()


COMMANDS = {
    "simulate": cmd_simulate,
    "match-peak": cmd_match_peak,
    "sweep": cmd_sweep,
    "cost-ratio": cmd_cost_ratio,
    "figure": cmd_figure,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"seirq: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SeirqError as exc:
        print(f"seirq: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
