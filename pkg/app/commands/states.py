"""
``states`` command.

Writes the amplitudes of an analytic nonlinear coherent state as CSV.
"""

import argparse
import sys
from pathlib import Path

from pydantic import ValidationError

from app.exceptions import ConfigError
from app.schemas.algebra import parse_nonlinearity
from app.schemas.states import StateFamily, StateFamilyTag
from app.services.experiment import write_pure_state_csv, write_state_rows
from app.services.states import build_state


def register(subparsers) -> None:
    """Add the ``states`` subcommand."""
    parser = subparsers.add_parser("states", help="tabulate a nonlinear coherent state")
    parser.add_argument(
        "--family", required=True, choices=[tag.value for tag in StateFamilyTag]
    )
    parser.add_argument("--f", default="identity", help="identity, inverse_sqrt, power:p, table:...")
    parser.add_argument("--z", default="0", help="eigenvalue, e.g. 0.3 or 0.2-0.1j")
    parser.add_argument("--cutoff", type=int, default=32)
    parser.add_argument("--out", type=Path, default=None, help="CSV file (default: stdout)")
    parser.set_defaults(handler=handle_states)


def handle_states(args: argparse.Namespace) -> int:
    """
    Build the state and write it.

    Returns:
        Exit status 0

    Raises:
        InvalidNonlinearityError: If --f is malformed
        ConfigError: If --z or --cutoff is invalid
    """
    f = parse_nonlinearity(args.f)
    if args.cutoff < 0:
        raise ConfigError("cutoff must be non-negative")
    try:
        family = StateFamily.model_validate({"tag": args.family, "f": f, "z": args.z})
    except ValidationError as e:
        raise ConfigError(f"invalid state parameters: {e}") from e

    state = build_state(family, args.cutoff)
    if args.out is None:
        write_state_rows(sys.stdout, state.amps, abs(state.amps) ** 2)
    else:
        write_pure_state_csv(args.out, state)
    return 0
