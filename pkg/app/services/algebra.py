"""
Deformed-oscillator algebra service.

This module evaluates nonlinearity functions, builds the strength tables and
truncated matrices of the five deformed ladder operators, and measures how
well the deformed commutation relations hold on the interior of the
truncated Fock space.
"""

import logging
import math

import numpy as np

from app.exceptions import (
    IncompatibleKindsError,
    InsufficientCutoffError,
    InvalidNonlinearityError,
)
from app.schemas.algebra import DeformedLadder, LadderKind, NonlinearityFamily, NonlinearityFn

logger = logging.getLogger(__name__)

# Named family set that spans the normalizability regimes.
TEST_FAMILIES: tuple[NonlinearityFn, ...] = (
    NonlinearityFn(family="identity"),
    NonlinearityFn(family="inverse_sqrt"),
    NonlinearityFn(family="power", params=(1.0,)),
    NonlinearityFn(family="power", params=(-1.0,)),
)


def eval_f(f: NonlinearityFn, n: int) -> float:
    """
    Evaluate f(n) on a non-negative integer.

    Families singular at the origin use the convention f(0) = 1.

    Args:
        f: Nonlinearity function
        n: Fock index

    Returns:
        f(n), never zero

    Raises:
        InvalidNonlinearityError: If n is negative or outside a table
    """
    if n < 0:
        raise InvalidNonlinearityError(f"f is defined on n >= 0, got n = {n}")

    if f.family == NonlinearityFamily.IDENTITY:
        return 1.0
    if f.family == NonlinearityFamily.POWER:
        return 1.0 if n == 0 else float(n) ** f.params[0]
    if f.family == NonlinearityFamily.INVERSE_SQRT:
        return 1.0 if n == 0 else 1.0 / math.sqrt(n)

    if n >= len(f.params):
        raise InvalidNonlinearityError(
            f"n = {n} outside the table range 0..{len(f.params) - 1}"
        )
    value = f.params[n]
    if value == 0.0:
        raise InvalidNonlinearityError(f"table entry f({n}) is zero")
    return value


def eval_f_real(f: NonlinearityFn, x: float) -> float:
    """
    Continuous extension of f to real x >= 0 (tables round to the nearest index).

    Args:
        f: Nonlinearity function
        x: Real argument

    Returns:
        f(x)
    """
    if f.is_tabulated:
        return eval_f(f, int(round(x)))
    if x < 0:
        raise InvalidNonlinearityError(f"f is defined on x >= 0, got x = {x}")
    if x == 0:
        return 1.0
    if f.family == NonlinearityFamily.IDENTITY:
        return 1.0
    if f.family == NonlinearityFamily.POWER:
        return float(x) ** f.params[0]
    return 1.0 / math.sqrt(x)


def _strength_formula(kind: LadderKind, x: float, fx: float) -> float:
    if kind == LadderKind.A:
        return x * fx**2
    if kind == LadderKind.B:
        return x / fx**2
    if kind == LadderKind.C:
        return x * (x - 1.0) * fx**2
    if kind == LadderKind.B0:
        return 0.25 * x / (x - 1.0) / fx**2
    return 0.25 * (x - 1.0) / x / fx**2


def ladder_strength(kind: LadderKind, f: NonlinearityFn, n: int) -> float:
    """
    Strength lambda(n) of L|n> = sqrt(lambda(n)) |n - s>.

    Args:
        kind: Ladder operator kind
        f: Nonlinearity function
        n: Fock index

    Returns:
        lambda(n); exactly 0 when n is below the step
    """
    if n < 0:
        raise InvalidNonlinearityError(f"ladder strength needs n >= 0, got {n}")
    if n < kind.step:
        return 0.0
    return _strength_formula(kind, float(n), eval_f(f, n))


def ladder_strength_real(kind: LadderKind, f: NonlinearityFn, x: float) -> float:
    """lambda evaluated at a real argument through the continuous extension of f."""
    if x < kind.step:
        return 0.0
    return _strength_formula(kind, float(x), eval_f_real(f, x))


def strength_table(kind: LadderKind, f: NonlinearityFn, size: int) -> np.ndarray:
    """lambda(n) for n = 0..size - 1."""
    return np.array([ladder_strength(kind, f, n) for n in range(size)], dtype=float)


def build_ladder(
    kind: LadderKind, f: NonlinearityFn, cutoff: int, extra: int = 0
) -> DeformedLadder:
    """
    Build a ladder operator with strengths tabulated up to cutoff + extra.

    Args:
        kind: Ladder operator kind
        f: Nonlinearity function
        cutoff: Largest Fock index of the matrix representation
        extra: Additional table entries past the cutoff

    Returns:
        DeformedLadder
    """
    strengths = strength_table(kind, f, cutoff + extra + 1)
    logger.debug("Built %s ladder for f=%s up to n=%d", kind.value, f, cutoff + extra)
    return DeformedLadder(kind=kind, f=f, cutoff=cutoff, strengths=strengths)


def ladder_to_matrix(ladder: DeformedLadder) -> np.ndarray:
    """Lowering matrix with <n - s|L|n> = sqrt(lambda(n)) on 0..cutoff."""
    dim = ladder.cutoff + 1
    step = ladder.step
    matrix = np.zeros((dim, dim), dtype=float)
    n = np.arange(step, dim)
    matrix[n - step, n] = np.sqrt(ladder.strengths[step:dim])
    return matrix


def ladder_matrix(kind: LadderKind, f: NonlinearityFn, cutoff: int) -> np.ndarray:
    """
    Truncated lowering matrix of a deformed ladder operator.

    The raising matrix is its transpose (the entries are real).

    Args:
        kind: Ladder operator kind
        f: Nonlinearity function
        cutoff: Largest Fock index

    Returns:
        (cutoff + 1) x (cutoff + 1) array

    Raises:
        InsufficientCutoffError: If cutoff < step
    """
    if cutoff < kind.step:
        raise InsufficientCutoffError(
            f"cutoff {cutoff} below the step {kind.step} of kind {kind.value}"
        )
    return ladder_to_matrix(build_ladder(kind, f, cutoff))


def number_matrix(cutoff: int) -> np.ndarray:
    """Photon-number operator on 0..cutoff."""
    return np.diag(np.arange(cutoff + 1, dtype=float))


def _interior_indices(cutoff: int, step: int, sector: int | None) -> np.ndarray:
    idx = np.arange(cutoff - step + 1)
    if sector is not None:
        idx = idx[idx % 2 == sector]
    return idx


def dual_deviation(
    lower: DeformedLadder, partner: DeformedLadder, sector: int | None = None
) -> float:
    """
    Interior deviation of [L, R^dagger] from the identity for explicit ladders.

    Args:
        lower: Ladder L
        partner: Ladder R whose adjoint pairs with L
        sector: Restrict to even (0) or odd (1) Fock indices

    Returns:
        max |<n|[L, R^dagger]|n'> - delta_nn'| over the interior block
    """
    if lower.step != partner.step:
        raise IncompatibleKindsError(
            f"kinds {lower.kind.value} and {partner.kind.value} have different steps"
        )
    if lower.cutoff != partner.cutoff:
        raise IncompatibleKindsError("ladders have different cutoffs")
    step = lower.step
    if lower.cutoff < 2 * step:
        raise InsufficientCutoffError(f"cutoff must be at least {2 * step}")

    low = ladder_to_matrix(lower)
    raise_adj = ladder_to_matrix(partner).T
    commutator = low @ raise_adj - raise_adj @ low
    idx = _interior_indices(lower.cutoff, step, sector)
    block = commutator[np.ix_(idx, idx)] - np.eye(idx.size)
    return float(np.max(np.abs(block)))


def commutator_deviation(
    lower_kind: LadderKind,
    raise_kind: LadderKind,
    f: NonlinearityFn,
    cutoff: int,
    sector: int | None = None,
) -> float:
    """
    Check a dual pair [L, R^dagger] = 1 on the interior of the truncated space.

    Args:
        lower_kind: Kind of L
        raise_kind: Kind of R (its adjoint is used)
        f: Nonlinearity function
        cutoff: Largest Fock index
        sector: Restrict to even (0) or odd (1) Fock indices

    Returns:
        Largest elementwise deviation from the identity

    Raises:
        IncompatibleKindsError: If the two kinds have different steps
    """
    if lower_kind.step != raise_kind.step:
        raise IncompatibleKindsError(
            f"kinds {lower_kind.value} and {raise_kind.value} have different steps"
        )
    return dual_deviation(
        build_ladder(lower_kind, f, cutoff), build_ladder(raise_kind, f, cutoff), sector
    )


def deformed_algebra_deviation(kind: LadderKind, f: NonlinearityFn, cutoff: int) -> float:
    """
    Interior deviation of [L, L^dagger] from lambda(N + s) - lambda(N).

    Args:
        kind: Ladder operator kind
        f: Nonlinearity function
        cutoff: Largest Fock index

    Returns:
        Largest elementwise deviation over the interior block, relative to the
        largest strength involved
    """
    ladder = build_ladder(kind, f, cutoff, extra=kind.step)
    low = ladder_to_matrix(ladder)
    commutator = low @ low.T - low.T @ low
    idx = _interior_indices(cutoff, kind.step, None)
    lam = ladder.strengths
    expected = np.diag(lam[idx + kind.step] - lam[idx])
    # Relative to the largest strength: lambda grows like n^4 for C with f(n) = n.
    scale = max(1.0, float(np.max(lam[idx + kind.step])))
    return float(np.max(np.abs(commutator[np.ix_(idx, idx)] - expected))) / scale


def number_commutator_deviation(kind: LadderKind, f: NonlinearityFn, cutoff: int) -> float:
    """
    Interior deviation of [N, L] = -s L and [N, L^dagger] = s L^dagger.

    Args:
        kind: Ladder operator kind
        f: Nonlinearity function
        cutoff: Largest Fock index

    Returns:
        Larger of the two elementwise deviations, relative to cutoff * max|L|
    """
    low = ladder_matrix(kind, f, cutoff)
    number = number_matrix(cutoff)
    step = kind.step
    idx = _interior_indices(cutoff, step, None)
    block = np.ix_(idx, idx)
    lowering = (number @ low - low @ number + step * low)[block]
    raising = (number @ low.T - low.T @ number - step * low.T)[block]
    scale = max(1.0, cutoff * float(np.max(np.abs(low))))
    return float(max(np.max(np.abs(lowering)), np.max(np.abs(raising)))) / scale
