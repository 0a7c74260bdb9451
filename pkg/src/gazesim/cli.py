"""Command-line surface.

Subcommands:
  simulate    one trial, JSONL trace on stdout
  experiment  the crossed design; writes results.csv, summary.csv, stats.json
  calibrate   print the response probabilities derived from the built-in rates
  track-demo  body-tracker error statistics on synthetic motion
  report      recompute summary/stats/chart files from an existing results.csv

Exit codes: 0 success, 1 invalid arguments or config, 2 runtime abort.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .body_tracker import BodyTracker, FilterConfig
from .config import ConfigError, RunConfig, parse_config
from .controller import METHODS, Method
from .geometry import Pose2, normalize_angle
from .harness import (
    TrialAbortError,
    TRIAL_MODES,
    format_record_row,
    read_records_csv,
    run_experiment,
    run_trial,
    write_records_csv,
)
from .human import (
    CAPTURE_ACTIONS,
    REFERENCE_SUCCESS_RATES,
    derive_response_table,
    escalation_success,
)
from .laser import EllipseBody, synthesize_scan
from .scenario import default_scenario
from .seeding import STREAM_FILTER, STREAM_INIT, STREAM_LASER, derive_seed
from .situation import SITUATIONS, ViewingSituation
from .stats import (
    anova_two_way,
    bonferroni_pairwise,
    gaze_stats,
    overall_ratio,
    records_to_cells,
    success_ratio,
    to_jsonable,
    write_summary_csv,
)
from .trace import TraceWriter


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gazesim", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    simulate = sub.add_parser("simulate", help="run one trial, trace to stdout")
    simulate.add_argument("--config", type=str, default=None)
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument(
        "--method", choices=[m.value for m in METHODS], default="M4"
    )
    simulate.add_argument(
        "--situation", choices=[s.value for s in SITUATIONS], default="CFOV"
    )
    simulate.add_argument("--mode", choices=TRIAL_MODES, default="full")

    experiment = sub.add_parser("experiment", help="run the crossed design")
    experiment.add_argument("--config", type=str, default=None)
    experiment.add_argument("--seed", type=int, default=None)
    experiment.add_argument("--out", type=str, default=None)
    experiment.add_argument("--jobs", type=int, default=1)
    experiment.add_argument("--trace", action="store_true")
    experiment.add_argument("--mode", choices=TRIAL_MODES, default="event")

    calibrate = sub.add_parser(
        "calibrate", help="print derived response probabilities"
    )
    calibrate.add_argument("--json", action="store_true", dest="as_json")

    demo = sub.add_parser("track-demo", help="body-tracker error statistics")
    demo.add_argument("--seed", type=int, default=42)
    demo.add_argument("--runs", type=int, default=20)
    demo.add_argument("--frames", type=int, default=100)
    demo.add_argument("--motion", choices=("static", "turn"), default="static")

    report = sub.add_parser("report", help="summaries from an existing results.csv")
    report.add_argument("results_csv", type=str)
    report.add_argument("--out", type=str, default=None)

    return parser


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=file_path.parent)


def _stats_payload(records) -> dict:
    overall = {}
    for method in METHODS:
        try:
            overall[method.value] = overall_ratio(records, method)
        except ValueError:
            continue
    try:
        anova = anova_two_way(records_to_cells(records))
    except ValueError:
        anova = None
    try:
        bonferroni = bonferroni_pairwise(records)
    except ValueError:
        bonferroni = None
    return {"overall": overall, "anova": anova, "bonferroni": bonferroni}


def _chart_payload(records) -> dict:
    cells = success_ratio(records)
    by_method: dict[str, list] = {}
    for cell in cells:
        by_method.setdefault(cell.method.value, []).append(
            {
                "situation": cell.situation.value,
                "mean": cell.mean_success,
                "sd": cell.sd_success,
                "n": cell.n,
            }
        )
    overall = []
    for method in METHODS:
        try:
            overall.append(
                {"method": method.value, "ratio": overall_ratio(records, method)}
            )
        except ValueError:
            continue
    gaze = []
    for method in METHODS:
        try:
            mean, variance = gaze_stats(records, method)
        except ValueError:
            continue
        gaze.append({"method": method.value, "mean": mean, "variance": variance})
    return {
        "success_by_cell": [
            {"method": name, "points": points} for name, points in by_method.items()
        ],
        "overall": overall,
        "gaze": gaze,
    }


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(to_jsonable(payload), indent=2) + "\n", encoding="utf-8"
    )


def _write_report_files(out_dir: Path, records, include_chart: bool) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    summary_path = out_dir / "summary.csv"
    write_summary_csv(summary_path, success_ratio(records))
    written.append(summary_path)
    stats_path = out_dir / "stats.json"
    _write_json(stats_path, _stats_payload(records))
    written.append(stats_path)
    if include_chart:
        chart_path = out_dir / "chart.json"
        _write_json(chart_path, _chart_payload(records))
        written.append(chart_path)
    return written


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = args.seed if args.seed is not None else config.base_seed
    method = Method(args.method)
    situation = ViewingSituation(args.situation)
    trace = TraceWriter(sys.stdout)
    record = run_trial(
        config.scenario, method, situation, seed, mode=args.mode, trace=trace
    )
    print(
        f"trial: method={record.method.value} situation={record.situation.value} "
        f"responded={str(record.responded).lower()} "
        f"action={record.responding_action.value if record.responding_action else '-'} "
        f"latency={record.response_latency_s if record.response_latency_s is not None else '-'} "
        f"gaze={record.gaze_time_s if record.gaze_time_s is not None else '-'} "
        f"seed={record.seed}",
        file=sys.stderr,
    )
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    out_dir = Path(args.out if args.out is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_dir = out_dir / "traces" if (args.trace or config.trace) else None
    records = run_experiment(config, mode=args.mode, jobs=args.jobs, trace_dir=trace_dir)
    results_path = out_dir / "results.csv"
    write_records_csv(results_path, records)
    written = [results_path]
    written += _write_report_files(out_dir, records, include_chart=False)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    table = derive_response_table()
    reproduced = {
        method.value: {
            situation.value: escalation_success(table, method, situation)
            for situation in SITUATIONS
        }
        for method in METHODS
    }
    if args.as_json:
        payload = {
            "response_probabilities": {
                action.value: {
                    situation.value: table.probability(action, situation)
                    for situation in SITUATIONS
                }
                for action in CAPTURE_ACTIONS
            },
            "reproduced_success_rates": reproduced,
        }
        print(json.dumps(to_jsonable(payload), indent=2))
        return 0
    header = "          " + "".join(f"{s.value:>10}" for s in SITUATIONS)
    print("response probability per prompt")
    print(header)
    for action in CAPTURE_ACTIONS:
        row = "".join(
            f"{table.probability(action, s):>10.6f}" for s in SITUATIONS
        )
        print(f"{action.value:<10}{row}")
    print()
    print("reproduced cumulative success per method")
    print(header)
    for method in METHODS:
        row = "".join(f"{reproduced[method.value][s.value]:>10.6f}" for s in SITUATIONS)
        reference = REFERENCE_SUCCESS_RATES[method]
        ref_row = "".join(f"{reference[s]:>10.2f}" for s in SITUATIONS)
        print(f"{method.value:<10}{row}")
        print(f"{'  target':<10}{ref_row}")
    return 0


def _cmd_track_demo(args: argparse.Namespace) -> int:
    if args.runs < 1 or args.frames < 31:
        raise ConfigError("track-demo needs --runs >= 1 and --frames >= 31")
    scenario = default_scenario()
    seat = scenario.human_seat
    sensor = scenario.sensor_pose
    config = FilterConfig(
        body_semi_major_m=scenario.body_semi_major_m,
        body_semi_minor_m=scenario.body_semi_minor_m,
    )
    theta_errors: list[float] = []
    position_errors: list[float] = []
    t0 = time.perf_counter()
    for run in range(args.runs):
        base = derive_seed(args.seed, run)
        tracker = BodyTracker(config, guess=seat, seed=derive_seed(base, STREAM_INIT))
        heading = seat.heading_deg
        for frame in range(args.frames):
            if args.motion == "turn" and frame >= 30:
                heading = normalize_angle(heading + 60.0 / 30.0)
            body = EllipseBody(
                Pose2(seat.x, seat.y, heading),
                semi_major_m=scenario.body_semi_major_m,
                semi_minor_m=scenario.body_semi_minor_m,
            )
            scan = synthesize_scan(
                sensor,
                body,
                seed=derive_seed(base, STREAM_LASER, frame),
                timestamp_s=frame / 30.0,
            )
            estimate = tracker.step(scan, seed=derive_seed(base, STREAM_FILTER, frame))
            if frame >= 30:
                theta_errors.append(
                    abs(normalize_angle(estimate.theta_deg - heading))
                )
                position_errors.append(
                    float(np.hypot(estimate.x - seat.x, estimate.y - seat.y))
                )
    elapsed = time.perf_counter() - t0
    frames_total = args.runs * args.frames
    theta = np.asarray(theta_errors)
    position = np.asarray(position_errors)
    print(f"runs={args.runs} frames={args.frames} motion={args.motion}")
    print(
        f"orientation error: median {np.median(theta):.2f} deg, "
        f"p95 {np.percentile(theta, 95):.2f} deg, max {theta.max():.2f} deg, "
        f"share under 6 deg {np.mean(theta < 6.0):.3f}"
    )
    print(
        f"position error: median {np.median(position):.3f} m, "
        f"p95 {np.percentile(position, 95):.3f} m, max {position.max():.3f} m"
    )
    print(f"throughput: {frames_total / elapsed:.0f} frames/s")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    csv_path = Path(args.results_csv)
    try:
        records = read_records_csv(csv_path)
    except OSError as exc:
        raise ConfigError(f"cannot read {csv_path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{csv_path}: {exc}") from exc
    if not records:
        raise ConfigError(f"{csv_path}: no records")
    out_dir = Path(args.out) if args.out is not None else csv_path.parent
    for path in _write_report_files(out_dir, records, include_chart=True):
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "experiment": _cmd_experiment,
    "calibrate": _cmd_calibrate,
    "track-demo": _cmd_track_demo,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"gazesim: {exc}", file=sys.stderr)
        return 1
    except TrialAbortError as exc:
        print(f"gazesim: aborted: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
