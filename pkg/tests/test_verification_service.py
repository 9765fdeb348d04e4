"""
Unit tests for the invariant verification suite.
"""

import math

import pytest

from app.commands.verify import format_table
from app.schemas.verification import CheckResult
from app.services.verification import (
    bound_checks,
    cross_check_checks,
    duality_checks,
    run_verification,
    tilde_checks,
)


@pytest.fixture(scope="module")
def clean_rows() -> list[CheckResult]:
    """Full suite at the default cutoff."""
    return run_verification()


class TestRunVerification:
    """Test the complete suite."""

    def test_all_pass(self, clean_rows):
        """Test every row passes without fault injection."""
        failed = [f"{row.group} / {row.name}: {row.value}" for row in clean_rows if not row.passed]
        assert failed == []

    def test_groups_in_order(self, clean_rows):
        """Test rows come grouped in a fixed order."""
        groups = list(dict.fromkeys(row.group for row in clean_rows))
        assert groups == [
            "algebra",
            "duality",
            "cross-check",
            "trace",
            "hermiticity",
            "displacement",
            "eigenrelation",
            "convergence",
            "first-order",
        ]

    def test_fault_injection_hits_duality_only(self):
        """Test a 1e-6 perturbation fails exactly the duality rows."""
        rows = run_verification(cutoff=8, fault_inject=True)
        failed_groups = {row.group for row in rows if not row.passed}
        assert failed_groups == {"duality"}
        assert all(not row.passed for row in rows if row.group == "duality")


class TestCheckGroups:
    """Test individual check groups."""

    def test_duality_rows(self):
        """Test one row per family and dual pair."""
        rows = duality_checks(8)
        assert len(rows) == 4 * 4
        assert all(row.passed for row in rows)

    def test_cross_check_rows(self):
        """Test three rows per kind, family and coupling."""
        rows = cross_check_checks(6, atoms=3)
        assert len(rows) == 4 * 5 * 2 * 3
        assert all(row.passed for row in rows)

    def test_bounds(self):
        """Test the analytic convergence limits."""
        rows = bound_checks()
        assert len(rows) == 6
        assert all(row.passed for row in rows)

    def test_first_order_solution(self):
        """Test multinomial solution rows for both steps."""
        rows = tilde_checks(max_index=5, atoms=10)
        assert [row.name for row in rows] == ["step 1 K=10", "step 2 K=10"]
        assert all(row.passed for row in rows)


class TestFormatTable:
    """Test the printed table."""

    def test_pass_and_fail(self):
        """Test status words and the summary line."""
        rows = [
            CheckResult(group="algebra", name="one", value=1e-15, limit=1e-12, passed=True),
            CheckResult(group="duality", name="two", value=1e-6, limit=1e-12, passed=False),
        ]
        lines = format_table(rows).splitlines()
        assert lines[0].startswith("PASS  algebra / one")
        assert lines[1].startswith("FAIL  duality / two")
        assert lines[-1] == "1/2 checks passed"

    def test_detail(self):
        """Test the reason of a check that could not run."""
        row = CheckResult(
            group="convergence", name="x", value=math.inf, limit=0.01, passed=False, detail="no asymptotics"
        )
        assert format_table([row]).splitlines()[0].endswith("(no asymptotics)")
