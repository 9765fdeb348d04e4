"""
Verification-suite schemas.
"""

from pydantic import BaseModel


class CheckResult(BaseModel):
    """
    One row of the verification table.

    Attributes:
        group: Check family (algebra, duality, cross-check, ...)
        name: Row label
        value: Measured deviation; the row passes when value <= limit
        limit: Admissible deviation
        passed: Outcome
        detail: Error message when the check could not be evaluated
    """

    group: str
    name: str
    value: float
    limit: float
    passed: bool
    detail: str = ""
