"""Command-line entry point: simulate, calibrate, compare and plot.

Examples:
  smartpack simulate --config scenarios/rt_salmon_smart --out output/rt
  smartpack calibrate --anchors anchors/paper_anchors.csv --out output/calibration
  smartpack compare --config-a scenarios/cold_salmon_control --config-b scenarios/cold_salmon_smart --out output/cold
  smartpack plot --trace output/rt/trace.csv --out output/rt/trace.svg --columns nh3_ppm temp_mat_c

Exit codes: 0 success, 1 validation error, 2 IO error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from smartpack.core.dependencies import (
    get_calibration_service,
    get_scenario_repo,
    get_settings,
    get_trace_repo,
)
from smartpack.core.error_handlers import EXIT_OK, EXIT_VALIDATION, exit_code_for
from smartpack.core.exceptions import AppError
from smartpack.core.logging_config import setup_logging
from smartpack.services import engine
from smartpack.services.plotting import DEFAULT_COLUMNS, TracePlotter

logger = logging.getLogger(__name__)


def _out_dir(value: Optional[str]) -> Path:
    return Path(value) if value else get_settings().output_dir


def cmd_simulate(args: argparse.Namespace) -> int:
    config = get_scenario_repo().load(Path(args.config))
    trace = engine.simulate(config)
    trace_path, events_path = get_trace_repo().save_trace(trace, _out_dir(args.out))
    print(f"{config.name}: {len(trace.frame) - 1} steps, {len(trace.events)} events")
    for event in trace.events:
        print(f"  {event.t_h:10.4f} h  {event.kind.value:<22} {event.detail}")
    print(f"wrote {trace_path}")
    print(f"wrote {events_path}")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    anchors = Path(args.anchors) if args.anchors else get_settings().anchors_path
    out_dir = _out_dir(args.out)
    _, results = get_calibration_service().run(anchors, out_dir)
    for result in results:
        flag = "" if result.converged and not result.at_bounds else "  [flagged]"
        print(f"{result.model_id:<18} residual={result.residual:.3e} iterations={result.iterations}{flag}")
    print(f"wrote {out_dir / 'params.json'}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    repo = get_scenario_repo()
    configs = [repo.load(Path(args.config_a)), repo.load(Path(args.config_b))]
    workers = args.workers if args.workers is not None else get_settings().workers
    traces = engine.run_many(configs, workers=workers)
    report = engine.compare(traces)
    comparison_path, shelf_path = get_trace_repo().save_comparison(report, _out_dir(args.out))
    for summary in report.summaries:
        limit = f"{summary.time_to_limit_h:.2f} h" if summary.time_to_limit_h is not None else "not reached"
        print(f"{summary.scenario}: TVB-N limit {limit}")
    for ext in report.shelf_life:
        if ext.extension_h is not None:
            bound = ">= " if ext.lower_bound else ""
            print(f"shelf-life extension {ext.scenario} vs {ext.reference}: {bound}{ext.extension_h:.2f} h")
    print(f"wrote {comparison_path}")
    print(f"wrote {shelf_path}")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    repo = get_trace_repo()
    trace = repo.load_trace(Path(args.trace))
    plotter = TracePlotter()
    fig = plotter.figure(trace, args.columns)
    path = repo.save_svg(Path(args.out), lambda fh: plotter.write_svg(fig, fh))
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smartpack",
        description="Closed-loop digital twin of NFC-powered smart food packaging",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("\n\n", 1)[1] if __doc__ else None,
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default: settings)")
    parser.add_argument("--plain-logs", action="store_true", help="Plain text logs instead of JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Run one scenario and write trace.csv and events.csv")
    p.add_argument("--config", required=True, help="Scenario JSON file or bundled scenario name")
    p.add_argument("--out", help="Output directory")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("calibrate", help="Fit model parameters to the anchor dataset")
    p.add_argument("--anchors", help="Anchor CSV (default: bundled reference anchors)")
    p.add_argument("--out", help="Output directory for params.json and residuals.csv")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("compare", help="Simulate two scenarios and report deltas and shelf life")
    p.add_argument("--config-a", required=True, help="Reference scenario")
    p.add_argument("--config-b", required=True, help="Scenario compared against the reference")
    p.add_argument("--out", help="Output directory")
    p.add_argument("--workers", type=int, default=None, help="Process pool size (default: settings)")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("plot", help="Render trace columns to SVG")
    p.add_argument("--trace", required=True, help="trace.csv written by simulate")
    p.add_argument("--out", required=True, help="SVG file to write")
    p.add_argument("--columns", nargs="+", default=DEFAULT_COLUMNS, help="Trace columns to plot")
    p.set_defaults(handler=cmd_plot)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION

    settings = get_settings()
    setup_logging(args.log_level or settings.log_level, json_format=settings.log_json and not args.plain_logs)
    try:
        return args.handler(args)
    except (AppError, OSError) as exc:
        code = exit_code_for(exc)
        print(f"error: {getattr(exc, 'message', exc)}", file=sys.stderr)
        return code


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
