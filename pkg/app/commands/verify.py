"""
``verify`` command.

Runs the invariant suite and prints a pass/fail table.
"""

import argparse

from app.exceptions import ConfigError
from app.schemas.verification import CheckResult
from app.services.verification import run_verification

MIN_CUTOFF = 4


def register(subparsers) -> None:
    """Add the ``verify`` subcommand."""
    parser = subparsers.add_parser("verify", help="run the invariant suite")
    parser.add_argument(
        "--fault-inject",
        action="store_true",
        help="perturb the lowering strengths by 1e-6 (the duality rows must fail)",
    )
    parser.add_argument("--cutoff", type=int, default=32, help="operator cutoff (default: 32)")
    parser.set_defaults(handler=handle_verify)


def format_table(rows: list[CheckResult]) -> str:
    """Fixed-width table, one line per check."""
    width = max(len(f"{row.group} / {row.name}") for row in rows)
    lines = []
    for row in rows:
        label = f"{row.group} / {row.name}"
        status = "PASS" if row.passed else "FAIL"
        line = f"{status}  {label:<{width}}  {row.value:.3e} <= {row.limit:.0e}"
        if row.detail:
            line += f"  ({row.detail})"
        lines.append(line)
    failed = sum(not row.passed for row in rows)
    lines.append(f"{len(rows) - failed}/{len(rows)} checks passed")
    return "\n".join(lines)


def handle_verify(args: argparse.Namespace) -> int:
    """
    Run the suite.

    Returns:
        0 when every check passes, 1 otherwise

    Raises:
        ConfigError: If the cutoff is too small for the two-photon operators
    """
    if args.cutoff < MIN_CUTOFF:
        raise ConfigError(f"verify needs a cutoff of at least {MIN_CUTOFF}")
    rows = run_verification(cutoff=args.cutoff, fault_inject=args.fault_inject)
    print(format_table(rows))
    return 0 if all(row.passed for row in rows) else 1
