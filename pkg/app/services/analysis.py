"""
Field-analysis service.

This module extracts photon statistics from cavity-field density matrices and
compares them with analytic pure target states.
"""

import numpy as np

from app.schemas.analysis import ObservableSet
from app.schemas.states import FieldState, PureState

# Mandel Q is reported as zero below this mean photon number.
MEAN_N_FLOOR = 1e-14


def fidelity(rho: FieldState, target: PureState) -> float:
    """
    Overlap <psi|rho|psi> of a density matrix with a pure target.

    The target is zero-padded (or cut) to the cutoff of rho.

    Args:
        rho: Cavity-field density matrix
        target: Pure target state

    Returns:
        Real part of <psi|rho|psi>
    """
    psi = target.padded(rho.cutoff)
    return float(np.real(np.vdot(psi, rho.rho @ psi)))


def observables(rho: FieldState) -> ObservableSet:
    """
    Photon statistics of a density matrix.

    Args:
        rho: Cavity-field density matrix

    Returns:
        ObservableSet with mean, variance, Mandel Q, purity, even-parity weight
        and the largest off-diagonal magnitude
    """
    matrix = rho.rho
    populations = np.real(np.diag(matrix))
    n = np.arange(rho.cutoff + 1, dtype=float)

    mean_n = float(np.sum(n * populations))
    var_n = float(np.sum(n**2 * populations)) - mean_n**2
    mandel_q = var_n / mean_n - 1.0 if mean_n >= MEAN_N_FLOOR else 0.0
    purity = float(np.real(np.sum(matrix * matrix.T)))

    even = float(np.sum(populations[0::2]))
    total = even + float(np.sum(populations[1::2]))
    parity_even_weight = min(1.0, max(0.0, even / total)) if total > 0 else 0.0

    off_diagonal = np.abs(matrix - np.diag(np.diag(matrix)))
    return ObservableSet(
        mean_n=mean_n,
        var_n=var_n,
        mandel_q=mandel_q,
        purity=purity,
        parity_even_weight=parity_even_weight,
        max_offdiag=float(np.max(off_diagonal)),
    )
