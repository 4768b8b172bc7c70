"""Command-line front end."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import colorlog
import numpy as np

from .config import load_scenario, with_overrides
from .const import LOGGER, PROTOCOLS, VERSION
from .exceptions import ConvergenceError, VibeLabError
from .plant import calibrate_backbone
from .records import BACKBONE_COLUMNS, write_csv
from .report import write_report
from .runner import execute
from .selftest import run_selftest

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2

LOG_FORMAT = "%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(name)s: %(message)s"


def setup_logging(verbosity: int) -> None:
    """Colored console logging on the package logger."""
    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(LOG_FORMAT, datefmt="%H:%M:%S"))
    LOGGER.handlers[:] = [handler]
    levels = (logging.WARNING, logging.INFO, logging.DEBUG)
    LOGGER.setLevel(levels[min(verbosity, 2)])


def _protocols(choice: str | None) -> tuple[str, ...] | None:
    if choice is None:
        return None
    return PROTOCOLS if choice == "all" else (choice,)


def cmd_run(args: argparse.Namespace) -> int:
    """Run a scenario and write its records."""
    scenario = with_overrides(
        load_scenario(Path(args.config)),
        seed=args.seed,
        repeat=args.repeat,
        protocols=_protocols(args.protocol),
        output_dir=Path(args.out) if args.out else None,
    )
    runs = execute(scenario)
    for run in runs:
        print(f"run {run.run_index}: {len(run.files)} files in {scenario.run_dir}")
        for note in run.notes:
            print(f"  note: {note}")
    return EXIT_FAILED if any(run.flagged for run in runs) else EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    """Write the harmonic-balance backbone of a scenario's plant."""
    scenario = load_scenario(Path(args.config))
    grid = np.linspace(args.a_min, args.a_max, args.points)
    try:
        backbone = calibrate_backbone(scenario.plant, grid, harmonics=scenario.sampling.harmonics)
    except ConvergenceError as err:
        LOGGER.error("%s", err)  # noqa: TRY400
        return EXIT_FAILED
    out = Path(args.out) if args.out else scenario.run_dir / f"{scenario.configuration}_oracle.csv"
    write_csv(
        out,
        (p.to_row() for p in backbone.points),
        BACKBONE_COLUMNS,
        config_hash=scenario.config_hash,
        kind="oracle",
    )
    print(f"{len(backbone.points)} points written to {out}")
    if backbone.failures:
        print(f"not converged at a = {', '.join(f'{a:.4g}' for a in backbone.failures)}")
        return EXIT_FAILED
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    """Assemble report.json and summary.md from a run directory."""
    json_path, md_path = write_report(Path(args.dir), Path(args.out) if args.out else None)
    print(f"wrote {json_path} and {md_path}")
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    """Run the acceptance checks."""
    checks = run_selftest(quick=args.quick)
    failed = [c for c in checks if not c.passed]
    for check in failed:
        print(f"FAIL {check.suite} {check.name}: {check.detail}")
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="vibelab", description="Virtual nonlinear vibration testing lab."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run test protocols on a simulated specimen")
    run.add_argument("--config", required=True, help="scenario TOML file")
    run.add_argument("--out", help="output directory (overrides scenario.output_dir)")
    run.add_argument("--repeat", type=int, help="number of repetitions")
    run.add_argument("--seed", type=int, help="noise seed")
    run.add_argument("--protocol", choices=[*PROTOCOLS, "all"], help="protocol to run")
    run.set_defaults(func=cmd_run)

    cal = sub.add_parser("calibrate", help="harmonic-balance backbone of the plant")
    cal.add_argument("--config", required=True, help="scenario TOML file")
    cal.add_argument("--out", help="CSV path")
    cal.add_argument("--a-min", type=float, default=0.05e-3, help="smallest amplitude [m]")
    cal.add_argument("--a-max", type=float, default=3.0e-3, help="largest amplitude [m]")
    cal.add_argument("--points", type=int, default=60, help="grid size")
    cal.set_defaults(func=cmd_calibrate)

    rep = sub.add_parser("report", help="cross-protocol report of a run directory")
    rep.add_argument("dir", help="directory holding run manifests and records")
    rep.add_argument("--out", help="directory for report.json and summary.md")
    rep.set_defaults(func=cmd_report)

    st = sub.add_parser("selftest", help="acceptance checks")
    st.add_argument("--quick", action="store_true", help="trim the simulation-heavy suites")
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Entry point; invalid input exits with status 2."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.func(args)
    except VibeLabError as err:
        LOGGER.error("%s", err)  # noqa: TRY400
        return EXIT_INVALID


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nAborted.")
        sys.exit(EXIT_FAILED)
