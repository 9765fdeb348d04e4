"""
Analysis result schemas.

This module defines photon-statistics summaries and the weak-coupling report.
"""

from enum import Enum

from pydantic import BaseModel, Field


class ObservableSet(BaseModel):
    """Photon statistics of a cavity-field density matrix."""

    mean_n: float
    var_n: float
    mandel_q: float
    purity: float
    parity_even_weight: float = Field(..., ge=0.0, le=1.0)
    max_offdiag: float = Field(..., ge=0.0)


class WeakCouplingReport(BaseModel):
    """
    Validity margins of the first-order (weak-coupling) approximation.

    Attributes:
        g_tau: Rabi angle of one atom
        nbar: Mean photon number the margins are evaluated at
        margin1: g*tau
        margin2: g*tau * sqrt(lambda(nbar + step)) for the active kind
        threshold: Value both margins must stay below
        passed: True when both margins are below the threshold
    """

    g_tau: float
    nbar: float
    margin1: float
    margin2: float
    threshold: float
    passed: bool


class TransformDirection(str, Enum):
    """Direction of the phase-independent rescaling of matrix elements."""

    FORWARD = "forward"
    INVERSE = "inverse"
