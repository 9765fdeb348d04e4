"""
Nonlinear coherent state service.

This module builds the six analytic nonlinear-coherent-state families on a
truncated Fock space, evaluates their normalizability limits, reproduces them
through displacement-type operators, and measures eigenvalue residuals.
"""

import cmath
import logging
import math
from enum import Enum

import numpy as np
from scipy.special import gammaln, logsumexp

from app.config import settings
from app.exceptions import (
    AsymptoticsUnavailableError,
    DivergentSeriesError,
    InsufficientCutoffError,
)
from app.schemas.algebra import LadderKind, NonlinearityFamily, NonlinearityFn
from app.schemas.states import PureState, StateFamily, StateFamilyTag
from app.services.algebra import build_ladder, eval_f, ladder_matrix, ladder_to_matrix

logger = logging.getLogger(__name__)

# |e| below this counts as a marginal (finite-radius) term ratio.
_EXPONENT_TOLERANCE = 1e-12


class DisplacementPair(str, Enum):
    """Displacement operators exp(z R^dagger - z* L) with [L, R^dagger] = 1."""

    D_F = "D_f"
    D_F_PRIME = "D'_f"
    D0 = "D0"
    D1 = "D1"
    D0_EVEN = "D0_even"
    D1_ODD = "D1_odd"


# pair -> (raising kind, lowering kind, family it produces, seed index)
DISPLACEMENT_PAIRS: dict[DisplacementPair, tuple[LadderKind, LadderKind, StateFamilyTag, int]] = {
    DisplacementPair.D_F: (LadderKind.B, LadderKind.A, StateFamilyTag.NLCS, 0),
    DisplacementPair.D_F_PRIME: (LadderKind.A, LadderKind.B, StateFamilyTag.NLCS_DUAL, 0),
    DisplacementPair.D0: (LadderKind.C, LadderKind.B0, StateFamilyTag.SQ_VAC, 0),
    DisplacementPair.D1: (LadderKind.C, LadderKind.B1, StateFamilyTag.SQ_FIRST, 1),
    DisplacementPair.D0_EVEN: (LadderKind.B0, LadderKind.C, StateFamilyTag.EVEN_NLCS, 0),
    DisplacementPair.D1_ODD: (LadderKind.B1, LadderKind.C, StateFamilyTag.ODD_NLCS, 1),
}

# family -> operator it is an eigenstate of
EIGEN_OPERATORS: dict[StateFamilyTag, LadderKind] = {
    StateFamilyTag.NLCS: LadderKind.A,
    StateFamilyTag.NLCS_DUAL: LadderKind.B,
    StateFamilyTag.SQ_VAC: LadderKind.B0,
    StateFamilyTag.SQ_FIRST: LadderKind.B1,
    StateFamilyTag.EVEN_NLCS: LadderKind.C,
    StateFamilyTag.ODD_NLCS: LadderKind.C,
}


def expected_target(kind: LadderKind, seed_parity: int = 0) -> StateFamilyTag:
    """
    Family the field approaches under weak-coupling pumping from |0> or |1>.

    Args:
        kind: Ladder operator in the interaction Hamiltonian
        seed_parity: 0 for a vacuum start, 1 for a first-excited start

    Returns:
        Target family tag
    """
    if kind == LadderKind.A:
        return StateFamilyTag.NLCS_DUAL
    if kind == LadderKind.B:
        return StateFamilyTag.NLCS
    if kind == LadderKind.C:
        return StateFamilyTag.SQ_FIRST if seed_parity else StateFamilyTag.SQ_VAC
    if kind == LadderKind.B0:
        return StateFamilyTag.EVEN_NLCS
    return StateFamilyTag.ODD_NLCS


def _fock_index(tag: StateFamilyTag, m: np.ndarray) -> np.ndarray:
    if tag.step == 1:
        return m
    return 2 * m + tag.parity


def _term_count(tag: StateFamilyTag, cutoff: int) -> int:
    """Number of series terms whose Fock index fits below the cutoff."""
    if tag.step == 1:
        return cutoff + 1
    return (cutoff - tag.parity) // 2 + 1


def _max_terms(tag: StateFamilyTag, f: NonlinearityFn, wanted: int) -> int:
    """Clip a term count to the range on which f is known."""
    if not f.is_tabulated:
        return wanted
    top = len(f.params) - 1
    available = top + 1 if tag.step == 1 else (top - tag.parity) // 2 + 1
    return max(0, min(wanted, available))


def series_log_terms(
    tag: StateFamilyTag, f: NonlinearityFn, count: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Log-magnitudes and signs of the z-independent series coefficients.

    The coefficient of |n(m)> is z^m * sign_m * exp(logmag_m).

    Args:
        tag: State family
        f: Nonlinearity function
        count: Number of terms m = 0..count - 1

    Returns:
        Tuple of (logmag, sign) arrays
    """
    m = np.arange(count)
    top = int(_fock_index(tag, m)[-1]) if count else 0
    fvals = np.array([eval_f(f, n) for n in range(top + 1)], dtype=float)
    logf = np.log(np.abs(fvals))
    signf = np.sign(fvals)

    if tag.step == 1:
        # f(n)! = f(1) f(2) ... f(n)
        log_fact = np.concatenate(([0.0], np.cumsum(logf[1:])))[:count]
        sign_fact = np.concatenate(([1.0], np.cumprod(signf[1:])))[:count]
        half_lgn = 0.5 * gammaln(m + 1.0)
        if tag == StateFamilyTag.NLCS:
            return -half_lgn - log_fact, sign_fact
        return -half_lgn + log_fact, sign_fact

    # f(2m)!! = f(2) f(4) ... f(2m);  f(2m+1)!! = f(3) f(5) ... f(2m+1)
    parity = tag.parity
    idx = 2 * np.arange(1, count) + parity
    log_dfact = np.concatenate(([0.0], np.cumsum(logf[idx])))
    sign_dfact = np.concatenate(([1.0], np.cumprod(signf[idx])))
    half_lg = 0.5 * gammaln(2.0 * m + 1.0 + parity)
    if tag in (StateFamilyTag.SQ_VAC, StateFamilyTag.SQ_FIRST):
        return -gammaln(m + 1.0) + half_lg + log_dfact, sign_dfact
    return -half_lg - log_dfact, sign_dfact


def _power_exponent(f: NonlinearityFn) -> float:
    """Exponent p of the named families, all of the form f(n) = n^p for n >= 1."""
    if f.family == NonlinearityFamily.IDENTITY:
        return 0.0
    if f.family == NonlinearityFamily.INVERSE_SQRT:
        return -0.5
    return float(f.params[0])


def _bound_asymptotics(tag: StateFamilyTag, p: float) -> tuple[float, float]:
    """Leading exponent e and coefficient c of the bound sequence, b(m) ~ c m^e."""
    if tag == StateFamilyTag.NLCS:
        return 1.0 + 2.0 * p, 1.0
    if tag == StateFamilyTag.NLCS_DUAL:
        return 1.0 - 2.0 * p, 1.0
    if tag in (StateFamilyTag.SQ_VAC, StateFamilyTag.SQ_FIRST):
        return -2.0 * p, 0.25 * 2.0 ** (-2.0 * p)
    return 2.0 + 2.0 * p, 4.0 * 2.0 ** (2.0 * p)


def convergence_bound(tag: StateFamilyTag, f: NonlinearityFn) -> float:
    """
    Largest |z|^2 for which the family's number-state series converges.

    Every named family is a power law f(n) = n^p, so the term-ratio sequence
    behaves as c m^e with e and c known in closed form: e > 0 leaves z
    unrestricted, e < 0 allows only z = 0, and e = 0 gives the bound c.

    Args:
        tag: State family
        f: Nonlinearity function (named families only)

    Returns:
        Finite bound or math.inf

    Raises:
        AsymptoticsUnavailableError: If f is tabulated
    """
    if f.is_tabulated:
        raise AsymptoticsUnavailableError(
            f"no large-n asymptotics for tabulated f ({tag.value})"
        )

    exponent, coefficient = _bound_asymptotics(tag, _power_exponent(f))
    if exponent > _EXPONENT_TOLERANCE:
        return math.inf
    if exponent < -_EXPONENT_TOLERANCE:
        return 0.0
    return coefficient


def check_convergence(family: StateFamily) -> None:
    """
    Reject z outside the convergence disc of the family.

    Raises:
        DivergentSeriesError: If |z|^2 is at or beyond a finite bound
    """
    if family.z == 0 or family.f.is_tabulated:
        return
    bound = convergence_bound(family.tag, family.f)
    radius2 = abs(family.z) ** 2
    if radius2 >= bound:
        raise DivergentSeriesError(
            f"|z|^2 = {radius2:g} >= convergence bound {bound:g} for {family.tag.value}"
        )


def _tail_bound(log_weights: np.ndarray, last: int, lookahead: int) -> float:
    """
    Ratio-test bound on the series weight beyond term index ``last``.

    Args:
        log_weights: log |term_m|^2 for m = 0..len - 1
        last: Index of the final retained term
        lookahead: Number of ratios past ``last`` available in log_weights

    Returns:
        Bound relative to the retained weight, or math.inf when the ratios
        have not dropped below one
    """
    if lookahead > 0:
        window = np.diff(log_weights[last : last + lookahead + 1])
    else:
        start = max(0, last - 8)
        window = np.diff(log_weights[start : last + 1])
        if window.size == 0:
            return math.inf
    log_r = float(np.max(window))
    if log_r >= 0.0:
        return math.inf
    r = math.exp(log_r)
    kept = logsumexp(log_weights[: last + 1])
    return math.exp(log_weights[last] - kept) * r / (1.0 - r)


def build_state(
    family: StateFamily, cutoff: int, tail_tolerance: float | None = None
) -> PureState:
    """
    Build a normalized nonlinear coherent state on 0..cutoff.

    Coefficients are evaluated in log space; the dropped tail is bounded by a
    geometric series once the term ratios fall below one.

    Args:
        family: Family tag, nonlinearity and eigenvalue z
        cutoff: Largest Fock index
        tail_tolerance: Largest admissible tail (defaults to settings)

    Returns:
        PureState

    Raises:
        DivergentSeriesError: If |z|^2 is outside the convergence region
        InsufficientCutoffError: If the tail exceeds the tolerance
    """
    tolerance = settings.tail_tolerance if tail_tolerance is None else tail_tolerance
    tag, f, z = family.tag, family.f, family.z
    kept = _term_count(tag, cutoff)
    if kept < 1:
        raise InsufficientCutoffError(f"cutoff {cutoff} holds no term of {tag.value}")

    amps = np.zeros(cutoff + 1, dtype=complex)
    if z == 0:
        amps[int(_fock_index(tag, np.array([0]))[0])] = 1.0
        return PureState(cutoff=cutoff, amps=amps, tail_bound=0.0)

    check_convergence(family)

    total = _max_terms(tag, f, kept + settings.lookahead_terms)
    if total < kept:
        # tabulated f shorter than the cutoff: eval_f reports the range error
        eval_f(f, int(_fock_index(tag, np.array([kept - 1]))[0]))
    logmag, sign = series_log_terms(tag, f, total)
    m = np.arange(total)
    log_abs = m * math.log(abs(z)) + logmag
    tail = _tail_bound(2.0 * log_abs, kept - 1, total - kept)
    if tail > tolerance:
        raise InsufficientCutoffError(
            f"cutoff {cutoff} leaves a tail bound {tail:.3g} > {tolerance:g} for {tag.value}"
        )

    phase = np.exp(1j * m[:kept] * cmath.phase(z)) * sign[:kept]
    coeffs = np.exp(log_abs[:kept] - np.max(log_abs[:kept])) * phase
    coeffs /= np.linalg.norm(coeffs)
    amps[_fock_index(tag, m[:kept])] = coeffs
    logger.debug("Built %s (f=%s, z=%s) at cutoff %d, tail %.3g", tag.value, f, z, cutoff, tail)
    return PureState(cutoff=cutoff, amps=amps, tail_bound=tail)


def _exp_series(matrix: np.ndarray, scale: complex, vector: np.ndarray, max_terms: int):
    """Sum exp(scale * matrix) vector for a nilpotent matrix; also return the last two terms."""
    total = vector.astype(complex).copy()
    term = total.copy()
    previous = np.zeros_like(term)
    for k in range(1, max_terms + 1):
        nxt = (scale / k) * (matrix @ term)
        if not np.any(nxt):
            break
        previous, term = term, nxt
        total += term
    return total, previous, term


def displacement_apply(
    pair: DisplacementPair,
    f: NonlinearityFn,
    z: complex,
    seed: PureState,
    cutoff: int,
    tail_tolerance: float | None = None,
) -> PureState:
    """
    Apply exp(z R^dagger - z* L) to a seed through its disentangled form.

    Uses exp(-|z|^2/2) exp(z R^dagger) exp(-z* L), valid because [L, R^dagger] = 1
    on the sector of the seed; the series are summed on an extended space and
    the weight past the cutoff is reported as the tail bound.

    Args:
        pair: Displacement operator
        f: Nonlinearity function
        z: Displacement amplitude
        seed: Initial state
        cutoff: Largest Fock index of the result

    Returns:
        Normalized PureState

    Raises:
        InsufficientCutoffError: If the series has not converged by the
            extended cutoff or the tail exceeds the tolerance
    """
    tolerance = settings.tail_tolerance if tail_tolerance is None else tail_tolerance
    raise_kind, lower_kind, _, _ = DISPLACEMENT_PAIRS[pair]
    step = raise_kind.step
    extended = cutoff + settings.lookahead_terms
    if f.is_tabulated:
        extended = max(cutoff, min(extended, len(f.params) - 1))

    raising = ladder_to_matrix(build_ladder(raise_kind, f, extended)).T
    lowering = ladder_to_matrix(build_ladder(lower_kind, f, extended))
    max_terms = extended // step + 1

    vector, _, _ = _exp_series(lowering, -z.conjugate(), seed.padded(extended), max_terms)
    vector, previous, last = _exp_series(raising, z, vector, max_terms)
    vector *= math.exp(-abs(z) ** 2 / 2.0)

    weights = np.abs(vector) ** 2
    total = float(np.sum(weights))
    if total == 0.0:
        raise InsufficientCutoffError(f"{pair.value} annihilated the seed")
    tail = float(np.sum(weights[cutoff + 1 :])) / total
    prev_norm = float(np.linalg.norm(previous))
    last_norm = float(np.linalg.norm(last))
    if z != 0 and prev_norm > 0.0 and last_norm > 0.0:
        r = (last_norm / prev_norm) ** 2
        if r >= 1.0:
            raise InsufficientCutoffError(
                f"{pair.value} series still growing at n = {extended}"
            )
        tail += last_norm**2 / total * r / (1.0 - r)
    if tail > tolerance:
        raise InsufficientCutoffError(
            f"{pair.value} leaves a tail bound {tail:.3g} > {tolerance:g} at cutoff {cutoff}"
        )

    amps = vector[: cutoff + 1]
    amps = amps / np.linalg.norm(amps)
    return PureState(cutoff=cutoff, amps=amps, tail_bound=tail)


def eigenrelation_residual(
    lower_kind: LadderKind, state: PureState, z: complex, f: NonlinearityFn
) -> float:
    """
    Residual ||L psi - z psi|| over the components n <= cutoff - step.

    Args:
        lower_kind: Lowering operator L
        state: Candidate eigenstate
        z: Expected eigenvalue
        f: Nonlinearity function

    Returns:
        Euclidean norm of the restricted residual
    """
    low = ladder_matrix(lower_kind, f, state.cutoff)
    residual = low @ state.amps - z * state.amps
    return float(np.linalg.norm(residual[: state.cutoff - lower_kind.step + 1]))
