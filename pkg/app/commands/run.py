"""
``run`` command.

Runs the pumping experiment described by a JSON document and writes its
result files.
"""

import argparse
from pathlib import Path

from app.services.experiment import load_experiment, run_experiment


def register(subparsers) -> None:
    """Add the ``run`` subcommand."""
    parser = subparsers.add_parser("run", help="run a pumping experiment or sweep")
    parser.add_argument("--config", type=Path, required=True, help="experiment JSON document")
    parser.add_argument(
        "--out", type=Path, default=None, help="output directory (overrides the document)"
    )
    parser.add_argument(
        "--workers", type=int, default=None, help="parallel sweep workers (default: settings)"
    )
    parser.set_defaults(handler=handle_run)


def handle_run(args: argparse.Namespace) -> int:
    """
    Execute an experiment document.

    Args:
        args: Parsed arguments (config, out, workers)

    Returns:
        Exit status 0
    """
    config = load_experiment(args.config)
    summary = run_experiment(config, args.out, args.workers)
    for run in summary.runs:
        print(
            f"run {run.index:04d}: kind={run.kind.value} f={run.f} g_tau={run.g_tau:g} "
            f"K={run.num_atoms} fidelity={run.final_fidelity:.12f} "
            f"weak_coupling={'yes' if run.weak_coupling.passed else 'no'}"
        )
    return 0
