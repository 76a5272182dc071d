"""Command-line entry point: ``sancdyn {simulate,montecarlo,sweep,analyze}``.

Exit status: 0 on success, 1 on usage or constraint errors (raised before
any output file is touched), 2 on runtime or estimation errors.
"""

from __future__ import annotations

import argparse
import io
import sys

from sancdyn.analysis import (
    MonteCarloConfig,
    SweepMode,
    compare_empirical_analytic,
    estimate_growth_rate,
    parse_axis,
    sweep_stability_region,
)
from sancdyn.dynamics import (
    DEFAULT_TOLERANCE,
    classify_stability,
    cumulative_limit,
    simulate_deterministic,
    simulate_lanchester,
    total_gain,
)
from sancdyn.errors import (
    ConfigurationError,
    DivergenceError,
    EstimationError,
    ParameterError,
    ScenarioError,
)
from sancdyn.io import (
    RunReport,
    atomic_write,
    comparison_dict,
    growth_dict,
    montecarlo_dict,
    trajectory_summary,
    write_grid_csv,
    write_mean_squares_csv,
    write_report_json,
    write_trajectory_csv,
)
from sancdyn.noise import Distribution, NoiseSpec, RandomSource
from sancdyn.scenario import Scenario, parse_scenario
from sancdyn.stochastic import (
    averaged_gain,
    classify_mean_square,
    min_achievable_gain,
    monte_carlo_ms_growth,
    simulate_stochastic,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(sub, fmt_default):
    sub.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
    sub.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    sub.add_argument("--seed", type=int, metavar="N", help="override the scenario seed")
    sub.add_argument("--steps", type=int, metavar="N", help="override the scenario step count")
    sub.add_argument("--format", choices=("csv", "json"), default=fmt_default)
    sub.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE,
                     help="half-width of the marginal band around gain 1")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sancdyn", description="Sanctions / counter-sanctions dynamics.")
    subs = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    subs.required = True

    p = subs.add_parser("simulate", help="simulate one trajectory")
    _common(p, "csv")
    p.add_argument("--report", metavar="PATH", help="also write the JSON run report here")

    p = subs.add_parser("montecarlo", help="estimate mean-square growth by Monte Carlo")
    _common(p, "json")
    p.add_argument("--trajectories", type=int, metavar="N")
    p.add_argument("--workers", type=int, default=1, metavar="N")

    p = subs.add_parser("sweep", help="classify stability over an (alpha, beta) grid")
    _common(p, "csv")
    p.add_argument("--alpha", default="0.01:2:101", metavar="START:STOP:COUNT")
    p.add_argument("--beta", default="0.01:2:101", metavar="START:STOP:COUNT")
    p.add_argument("--mode", choices=[m.value for m in SweepMode], default=SweepMode.DETERMINISTIC.value)
    p.add_argument("--sigma-x", type=float)
    p.add_argument("--sigma-y", type=float)
    p.add_argument("--distribution", choices=[d.value for d in Distribution])
    p.add_argument("--report", metavar="PATH", help="also write the JSON run report here")

    p = subs.add_parser("analyze", help="growth rate and analytic-vs-empirical comparison")
    _common(p, "json")
    p.add_argument("--trajectories", type=int, metavar="N")
    p.add_argument("--workers", type=int, default=1, metavar="N")
    return parser


def _load_scenario(args, required=True) -> Scenario | None:
    if args.scenario is None:
        if required:
            raise UsageError("--scenario is required")
        return None
    try:
        with open(args.scenario, "rb") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read scenario: {exc}") from None
    scenario = parse_scenario(text)
    overrides = {"steps": args.steps, "seed": args.seed,
                 "trajectories": getattr(args, "trajectories", None)}
    return scenario.with_overrides(**overrides)


def _base_report(command, scenario, tolerance) -> RunReport:
    report = RunReport(command, scenario=scenario.to_dict() if scenario else None)
    if scenario is None:
        return report
    q = total_gain(scenario.model_params())
    report.gains["q"] = q
    if scenario.model == "lanchester":
        return report
    det = classify_stability(q, tolerance).stability.value
    report.verdicts["deterministic"] = det
    report.verdict = det
    if scenario.model == "stochastic":
        params = scenario.stochastic_params()
        report.gains["qbar"] = averaged_gain(params)
        report.gains["noise_floor"] = min_achievable_gain(params.noise)
        ms = classify_mean_square(params, tolerance).stability.value
        report.verdicts["mean_square"] = ms
        report.verdict = ms
    report.sections["tolerance"] = tolerance
    return report


def _simulate_path(scenario: Scenario):
    if scenario.model == "deterministic":
        return simulate_deterministic(scenario.pressure_state(), scenario.model_params(), scenario.steps)
    if scenario.model == "stochastic":
        return simulate_stochastic(scenario.pressure_state(), scenario.stochastic_params(),
                                   scenario.steps, RandomSource(scenario.seed, 0))
    return simulate_lanchester(scenario.lanchester_state(), scenario.model_params(), scenario.steps)


def _mc_horizon(scenario: Scenario) -> int:
    if scenario.steps % 2:
        raise UsageError("Monte Carlo needs an even step count (horizon = steps + 1 stages, odd)")
    return scenario.steps + 1


def _render(payload) -> str:
    buf = io.StringIO()
    payload(buf)
    return buf.getvalue()


def _emit(args, text: str, report_text: str | None = None) -> None:
    # Everything is rendered before the first file is touched.
    if args.out:
        atomic_write(args.out, lambda sink: sink.write(text))
    else:
        sys.stdout.write(text)
        if args.format == "json":
            sys.stdout.write("\n")
    if report_text is not None:
        atomic_write(args.report, lambda sink: sink.write(report_text))


def _summary(args, line) -> None:
    print(line, file=sys.stdout if args.out else sys.stderr)


def cmd_simulate(args) -> None:
    scenario = _load_scenario(args)
    report = _base_report("simulate", scenario, args.tolerance)
    trajectory = _simulate_path(scenario)
    report.sections["trajectory"] = trajectory_summary(trajectory)
    if args.out:
        report.outputs[args.format] = args.out
    if args.report:
        report.outputs["report"] = args.report

    report_text = _render(lambda sink: write_report_json(report, sink))
    if args.format == "csv":
        text = _render(lambda sink: write_trajectory_csv(trajectory, sink))
    else:
        text = report_text
    _emit(args, text, report_text if args.report else None)

    parts = [f"simulate: model={scenario.model}", f"q={report.gains['q']!r}"]
    if "qbar" in report.gains:
        parts.append(f"qbar={report.gains['qbar']!r}")
    if report.verdict:
        parts.append(f"verdict={report.verdict}")
    parts.append(f"stages={len(trajectory)}")
    if trajectory.overflow_stage is not None:
        parts.append(f"truncated_at={trajectory.overflow_stage}")
    _summary(args, " ".join(parts))


def cmd_montecarlo(args) -> None:
    scenario = _load_scenario(args)
    if scenario.model != "stochastic":
        raise UsageError("montecarlo requires a stochastic scenario")
    if scenario.trajectories is None:
        raise UsageError("trajectory count missing: set 'trajectories' or pass --trajectories")
    if scenario.trajectories < 2:
        raise UsageError("trajectories must be >= 2")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    horizon = _mc_horizon(scenario)
    report = _base_report("montecarlo", scenario, args.tolerance)

    mc = monte_carlo_ms_growth(scenario.stochastic_params(), scenario.trajectories, horizon,
                               RandomSource(scenario.seed), scenario.pressure_state().increments(),
                               workers=args.workers)
    report.sections["montecarlo"] = montecarlo_dict(mc)
    if args.out:
        report.outputs[args.format] = args.out

    if args.format == "json":
        _emit(args, _render(lambda sink: write_report_json(report, sink)))
    else:
        _emit(args, _render(lambda sink: write_mean_squares_csv(mc, sink)))
    _summary(args, f"montecarlo: qbar={mc.analytic_qbar!r} empirical={mc.empirical_ms_ratio!r} "
                   f"ci99=[{mc.ci_low!r}, {mc.ci_high!r}] verdict={mc.verdict.stability.value}")


def cmd_sweep(args) -> None:
    scenario = _load_scenario(args, required=False)
    if args.seed is not None or args.steps is not None:
        raise UsageError("--seed and --steps do not apply to sweep")
    alpha_axis = parse_axis(args.alpha)
    beta_axis = parse_axis(args.beta)
    mode = SweepMode(args.mode)
    noise = None
    if mode is SweepMode.MEAN_SQUARE:
        base = scenario.noise() if scenario is not None and scenario.model == "stochastic" else NoiseSpec()
        sx = base.sigma_x if args.sigma_x is None else args.sigma_x
        sy = base.sigma_y if args.sigma_y is None else args.sigma_y
        dist = base.distribution if args.distribution is None else args.distribution
        if scenario is None and (args.sigma_x is None or args.sigma_y is None):
            raise UsageError("mean-square sweep needs --sigma-x and --sigma-y (or a stochastic scenario)")
        noise = NoiseSpec(sx, sy, dist)
    elif args.sigma_x is not None or args.sigma_y is not None:
        raise UsageError("--sigma-x/--sigma-y only apply to --mode mean-square")

    grid = sweep_stability_region(alpha_axis, beta_axis, mode, noise, args.tolerance)
    report = RunReport("sweep")
    grid_info = {"mode": mode.value, "alpha_axis": args.alpha, "beta_axis": args.beta,
                 "shape": list(grid.shape), "counts": grid.counts(), "tolerance": args.tolerance}
    if noise is not None:
        grid_info["noise"] = {"sigma_x": noise.sigma_x, "sigma_y": noise.sigma_y,
                              "distribution": noise.distribution.value}
        report.gains["noise_floor"] = min_achievable_gain(noise)
    report.sections["grid"] = grid_info
    if args.out:
        report.outputs[args.format] = args.out
    if args.report:
        report.outputs["report"] = args.report

    report_text = _render(lambda sink: write_report_json(report, sink))
    if args.format == "csv":
        text = _render(lambda sink: write_grid_csv(grid, sink))
    else:
        text = report_text
    _emit(args, text, report_text if args.report else None)
    counts = grid.counts()
    _summary(args, f"sweep: mode={mode.value} cells={grid.gains.size} stable={counts['stable']} "
                   f"marginal={counts['marginal']} unstable={counts['unstable']}")


def cmd_analyze(args) -> None:
    if args.format != "json":
        raise UsageError("analyze writes JSON only")
    scenario = _load_scenario(args)
    if scenario.model == "lanchester":
        raise UsageError("analyze applies to deterministic and stochastic scenarios")
    report = _base_report("analyze", scenario, args.tolerance)
    comparison_wanted = scenario.model == "stochastic" and scenario.trajectories is not None
    if comparison_wanted:
        horizon = _mc_horizon(scenario)
        if scenario.trajectories < 2 or args.workers < 1:
            raise UsageError("trajectories must be >= 2 and --workers >= 1")

    trajectory = _simulate_path(scenario)
    report.sections["trajectory"] = trajectory_summary(trajectory)
    growth = estimate_growth_rate(trajectory)
    report.sections["growth"] = growth_dict(growth)
    if scenario.model == "deterministic" and report.gains["q"] < 1.0:
        x_inf, y_inf = cumulative_limit(scenario.pressure_state(), scenario.model_params())
        report.sections["cumulative_limit"] = {"x": x_inf, "y": y_inf}
    if comparison_wanted:
        config = MonteCarloConfig(scenario.trajectories, horizon, scenario.seed,
                                  scenario.pressure_state().increments(), args.workers)
        comparison = compare_empirical_analytic(scenario.stochastic_params(), config)
        report.sections["comparison"] = comparison_dict(comparison)
        report.sections["montecarlo"] = montecarlo_dict(comparison.report)
    if args.out:
        report.outputs["json"] = args.out

    _emit(args, _render(lambda sink: write_report_json(report, sink)))
    line = f"analyze: model={scenario.model} lyapunov={growth.lyapunov!r} reference={growth.analytic!r}"
    if comparison_wanted:
        line += f" agreement={str(comparison.agreement).lower()}"
    _summary(args, line)


COMMANDS = {"simulate": cmd_simulate, "montecarlo": cmd_montecarlo,
            "sweep": cmd_sweep, "analyze": cmd_analyze}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except (UsageError, ScenarioError, ParameterError, ConfigurationError) as exc:
        print(f"sancdyn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (EstimationError, DivergenceError, OSError) as exc:
        print(f"sancdyn {args.command}: runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
