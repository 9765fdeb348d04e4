"""
Command-line entry point.

This module configures logging, builds the argument parser from the command
modules and maps toolkit errors onto process exit codes.
"""

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

from app.commands import run, states, verify
from app.config import settings
from app.exceptions import SimulationError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(
    level: str | None = None, log_file: str | None = None, verbose: bool = False
) -> None:
    """
    Configure root logging for one process.

    Args:
        level: Level name; defaults to settings.log_level (INFO)
        log_file: Optional rotating log file (10MB per file, 5 backups)
        verbose: Log at DEBUG, including one line per injected atom
    """
    level = "DEBUG" if verbose else level or settings.log_level

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = log_file or settings.log_file
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(RotatingFileHandler(log_file, maxBytes=10485760, backupCount=5))

    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, handlers=handlers, force=True)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the run, verify and states subcommands."""
    parser = argparse.ArgumentParser(
        prog="micromaser",
        description="Micromaser pumping with f-deformed couplings and nonlinear coherent states",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-file", default=None, help="rotating log file")
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log at DEBUG (one line per atom)"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    run.register(subparsers)
    verify.register(subparsers)
    states.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Parse arguments and dispatch to a command handler.

    Args:
        argv: Arguments without the program name (defaults to sys.argv)

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_file, args.verbose)
    logger.debug("Environment: %s", settings.environment)

    try:
        return args.handler(args)
    except SimulationError as e:
        logger.error("%s: %s", type(e).__name__, e.detail)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Unhandled exception: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
