"""
armbench CLI main entry point.
"""

import argparse
import sys

from pydantic import ValidationError

from armbench.explorer.strategy import StrategyVariant
from armbench.harness.config import ConfigOverrides, load_config
from armbench.harness.core import (
    ExitCode,
    cmd_calibrate,
    cmd_compare,
    cmd_explore,
    cmd_report,
    log_validation_error,
    setup_logging,
    show_config,
)
from common import armbench_version


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Benchmark configuration document (YAML or JSON)")
    parser.add_argument("--seed", type=int, help="Run this single seed instead of the configured seeds")
    parser.add_argument(
        "--strategy",
        dest="strategies",
        action="append",
        choices=[str(s) for s in StrategyVariant],
        help="Strategy to run; repeat for several. Default: the configured strategies",
    )
    parser.add_argument("--budget-steps", type=int, help="Step budget per run")
    parser.add_argument("--budget-seconds", type=float, help="Simulated-seconds budget per run")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument(
        "--show-config", action="store_true", help="Print the effective configuration and exit"
    )


def get_parser():
    parser = argparse.ArgumentParser(
        prog="armbench", description="armbench - robotic-arm GUI exploration testbench"
    )

    parser.add_argument(
        "--version", action="store_true", help="Show version information and exit"
    )
    parser.add_argument(
        "--quiet", action="store_true", help="Suppress output except for errors"
    )
    parser.add_argument("--verbose", action="store_true", help="Enable verbose output")
    parser.add_argument(
        "--output",
        choices=["text", "json", "yaml"],
        default="text",
        help="Set output format (text, json, yaml). Default is text.",
    )

    subparsers = parser.add_subparsers(
        title="commands", dest="command", help="Available commands"
    )

    calibrate_parser = subparsers.add_parser(
        "calibrate", help="Calibrate the camera from synthetic chessboard views"
    )
    _add_config_arguments(calibrate_parser)

    explore_parser = subparsers.add_parser(
        "explore", help="Run the app x strategy x seed exploration grid"
    )
    _add_config_arguments(explore_parser)
    explore_parser.add_argument(
        "--debug-overlays",
        action="store_true",
        help="Write the detected screen and widgets of every step as PNG overlays",
    )

    compare_parser = subparsers.add_parser(
        "compare", help="Compare irregular-screen devices against their references"
    )
    _add_config_arguments(compare_parser)

    report_parser = subparsers.add_parser(
        "report", help="Summarize a run directory as Markdown, HTML and CSV"
    )
    report_parser.add_argument("run_dir", help="Output directory of explore and/or compare")

    return parser


def main():
    parser = get_parser()
    args = parser.parse_args()

    if args.verbose and args.quiet:
        print("❌ Cannot use both --quiet and --verbose.")
        sys.exit(ExitCode.usage)

    if args.version:
        print(f"armbench version {armbench_version()}")
        sys.exit(ExitCode.ok)

    logging_args = {
        "disable_log": False,
        "quiet_log": args.quiet,
        "verbose_log": args.verbose,
        "output": args.output,
    }

    if args.command == "report":
        sys.exit(cmd_report(args.run_dir, **logging_args))

    if args.command not in ("calibrate", "explore", "compare"):
        parser.print_help()
        sys.exit(ExitCode.usage)

    setup_logging(disable=False, verbose=args.verbose, quiet=args.quiet, output=args.output)
    try:
        overrides = ConfigOverrides(
            seed=args.seed,
            strategies=args.strategies,
            budget_steps=args.budget_steps,
            budget_seconds=args.budget_seconds,
            out=args.out,
        )
        config = load_config(args.config, overrides)
    except ValidationError as e:
        log_validation_error(e, args.config)
        sys.exit(ExitCode.usage)
    except (OSError, ValueError) as e:
        print(f"❌ {e}")
        sys.exit(ExitCode.usage)

    if args.show_config:
        print(show_config(config, args.output), end="")
        sys.exit(ExitCode.ok)

    if args.command == "calibrate":
        sys.exit(cmd_calibrate(config, **logging_args))
    elif args.command == "explore":
        sys.exit(cmd_explore(config, debug_overlays=args.debug_overlays, **logging_args))
    else:
        sys.exit(cmd_compare(config, **logging_args))


if __name__ == "__main__":
    main()
