"""Command-line interface: one subcommand per pipeline stage

Exit codes: 0 success, 2 configuration error, 3 upstream-service error, 4 data error.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

from streetscore.common import ConfigurationError, StreetscoreError
from streetscore.config import CONFIG, load_run_config
from streetscore.models import MAP_STATISTICS
from streetscore.pipeline import (
    RunContext,
    cmd_aggregate,
    cmd_export_tasks,
    cmd_fetch,
    cmd_render,
    cmd_sample,
    cmd_score,
    cmd_validate,
)
from streetscore.utils import setup_logging


LOGGER = logging.getLogger("streetscore")


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted before and after the subcommand; SUPPRESS keeps a
    # subcommand from resetting a flag given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("-c", "--config", type=Path, help="Run configuration (JSON)")
    common.add_argument("--run-dir", type=Path, help="Run directory, overrides paths.run_dir")
    common.add_argument(
        "--force",
        action="store_true",
        help="Rerun completed stages and accept a changed configuration",
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="streetscore",
        description="Score street-level scenes along an OpenStreetMap street network.",
        parents=[common],
    )
    parser.set_defaults(config=None, run_dir=None, force=False, verbose=False, quiet=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {CONFIG.version}")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    commands.add_parser(
        "sample", parents=[common], help="Download the street network and sample points along it"
    )

    fetch = commands.add_parser("fetch", parents=[common], help="Download street-level images")
    fetch.add_argument("--limit", type=_positive_int, help="At most this many downloads")

    score = commands.add_parser("score", parents=[common], help="Score the images against a task")
    score.add_argument("--task", required=True, help="Task id, e.g. T1")
    score.add_argument("--limit", type=_positive_int, help="At most this many images")

    aggregate = commands.add_parser(
        "aggregate", parents=[common], help="Summarize scores by point and street segment"
    )
    aggregate.add_argument("--task", required=True)
    aggregate.add_argument("--gpkg", action="store_true", help="Also export a GeoPackage")

    render = commands.add_parser("render", parents=[common], help="Render the SVG maps of a task")
    render.add_argument("--task", required=True)
    render.add_argument(
        "--stat", choices=MAP_STATISTICS, help="Statistic to map (default: the task's own)"
    )
    render.add_argument("--coverage", action="store_true", help="Also map image availability")

    validate = commands.add_parser(
        "validate",
        parents=[common],
        help="Draw an annotation sample, or compute accuracy from a filled-in one",
    )
    validate.add_argument("--task", required=True)
    validate.add_argument("--annotations", type=Path, help="Filled-in annotation sheet (CSV)")
    validate.add_argument("--per-class", type=_positive_int, default=20)
    validate.add_argument("--seed", type=int, default=0)

    export = commands.add_parser(
        "export-tasks", parents=[common], help="Write the task documents to a directory"
    )
    export.add_argument("--out", type=Path, required=True)
    return parser


def run(args: argparse.Namespace, session: Any = None, http_client: Any = None) -> None:
    if args.command == "export-tasks":
        config = load_run_config(args.config) if args.config else None
        for path in cmd_export_tasks(args.out, config):
            print(path)
        return

    if args.config is None:
        raise ConfigurationError("--config is required")
    ctx = RunContext(
        load_run_config(args.config),
        run_dir=args.run_dir,
        force=args.force,
        session=session,
        http_client=http_client,
    )
    if args.command == "sample":
        cmd_sample(ctx)
    elif args.command == "fetch":
        cmd_fetch(ctx, limit=args.limit)
    elif args.command == "score":
        cmd_score(ctx, args.task, limit=args.limit)
    elif args.command == "aggregate":
        cmd_aggregate(ctx, args.task, gpkg=args.gpkg)
    elif args.command == "render":
        for path in cmd_render(ctx, args.task, statistic=args.stat, coverage=args.coverage).values():
            print(path)
    elif args.command == "validate":
        result = cmd_validate(
            ctx,
            args.task,
            annotations=args.annotations,
            per_class=args.per_class,
            seed=args.seed,
        )
        if isinstance(result, Path):
            print(result)


def main(argv: Optional[List[str]] = None, session: Any = None, http_client: Any = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(-1 if args.quiet else int(args.verbose))
    try:
        run(args, session=session, http_client=http_client)
    except StreetscoreError as exc:
        LOGGER.error("%s failed: %s", args.command, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
