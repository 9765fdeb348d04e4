"""
Weak-coupling approximation service.

This module holds the analytic side of the pumping problem: validity margins
of the first-order expansion, the phase-independent rescaling of the field
matrix elements, the multinomial solution of the first-order recursion and
the closed-form propagators that map an initial field onto its weak-coupling
limit.
"""

import logging
import math

import numpy as np
from scipy.special import gammaln

from app.config import settings
from app.exceptions import (
    ConfigError,
    DivergentSeriesError,
    IncompatibleKindsError,
    InsufficientCutoffError,
    SingularTransformError,
)
from app.schemas.algebra import LadderKind, NonlinearityFn
from app.schemas.analysis import TransformDirection, WeakCouplingReport
from app.schemas.pumping import AtomPreparation, PumpConfig
from app.schemas.states import FieldState, PureState
from app.services.algebra import ladder_strength_real, strength_table
from app.services.engine import rabi_angles, shift_matrix

logger = logging.getLogger(__name__)

# |sin(g tau sqrt(lambda))| below this makes the forward rescaling singular.
SINE_FLOOR = 1e-15

_DEFAULT_KIND = {1: LadderKind.A, 2: LadderKind.C}


def weak_coupling_check(
    config: PumpConfig, nbar: float, threshold: float | None = None
) -> WeakCouplingReport:
    """
    Evaluate the two smallness conditions of the first-order expansion.

    Args:
        config: Pumping configuration (kind, f, g_tau)
        nbar: Mean photon number of the field
        threshold: Bound both margins must stay below (defaults to settings)

    Returns:
        WeakCouplingReport

    Raises:
        ConfigError: If nbar is negative
    """
    if nbar < 0:
        raise ConfigError(f"nbar must be non-negative, got {nbar}")
    limit = settings.weak_coupling_threshold if threshold is None else threshold
    step = config.kind.step
    margin1 = config.g_tau
    margin2 = config.g_tau * math.sqrt(ladder_strength_real(config.kind, config.f, nbar + step))
    return WeakCouplingReport(
        g_tau=config.g_tau,
        nbar=nbar,
        margin1=margin1,
        margin2=margin2,
        threshold=limit,
        passed=margin1 < limit and margin2 < limit,
    )


def dominance_margin(n: int, n_prime: int, rho_bb: float, num_atoms: int) -> float:
    """
    Margin (n + n' + n n' / rho_bb) / K of the p = 0 term in the multinomial sum.

    Values well below one mean the p = 0 term dominates.

    Raises:
        ConfigError: If rho_bb is not positive or K < 1
    """
    if rho_bb <= 0:
        raise ConfigError("dominance margin needs rho_bb > 0")
    if num_atoms < 1:
        raise ConfigError("dominance margin needs K >= 1")
    return (n + n_prime + n * n_prime / rho_bb) / num_atoms


def _log_multinomial(num_atoms: int, k: int, k_prime: int, p: int) -> float:
    return float(
        gammaln(num_atoms + 1)
        - gammaln(p + 1)
        - gammaln(k - p + 1)
        - gammaln(k_prime - p + 1)
        - gammaln(num_atoms - k - k_prime + p + 1)
    )


def tilde_solution(
    rho0_tilde: np.ndarray,
    num_atoms: int,
    rho_bb: float,
    n: int,
    n_prime: int,
    step: int = 1,
    truncated: bool = True,
) -> complex:
    """
    Multinomial solution of the first-order recursion after K atoms.

    Args:
        rho0_tilde: Rescaled initial matrix elements
        num_atoms: Number K of atoms
        rho_bb: Lower-level population
        n: Row index
        n_prime: Column index
        step: Photon step of the interaction
        truncated: Limit k to n // step (and k' to n' // step) instead of K

    Returns:
        Rescaled matrix element after K atoms

    Raises:
        ConfigError: If K is negative
    """
    if num_atoms < 0:
        raise ConfigError("K must be non-negative")
    table = np.asarray(rho0_tilde, dtype=complex)
    rows, cols = table.shape
    k_max = n // step if truncated else num_atoms
    k_prime_max = n_prime // step if truncated else num_atoms
    log_bb = math.log(rho_bb) if rho_bb > 0 else -math.inf

    total = 0j
    for k in range(k_max + 1):
        row = n - step * k
        if row < 0:
            break
        for k_prime in range(k_prime_max + 1):
            col = n_prime - step * k_prime
            if col < 0:
                break
            if row >= rows or col >= cols or table[row, col] == 0:
                continue
            coefficient = 0.0
            for p in range(min(k, k_prime) + 1):
                if num_atoms - k - k_prime + p < 0:
                    continue
                power = k + k_prime - 2 * p
                if power and rho_bb <= 0:
                    continue
                log_term = _log_multinomial(num_atoms, k, k_prime, p)
                if power:
                    log_term += 0.5 * power * log_bb
                coefficient += math.exp(log_term)
            total += coefficient * table[row, col]
    return complex(total)


def iterate_first_order(
    rho0_tilde: np.ndarray, num_atoms: int, rho_bb: float, step: int = 1
) -> np.ndarray:
    """
    Iterate the first-order recursion for the rescaled matrix elements K times.

    Args:
        rho0_tilde: Rescaled initial matrix elements (square)
        num_atoms: Number K of atoms
        rho_bb: Lower-level population
        step: Photon step of the interaction

    Returns:
        Rescaled matrix after K atoms
    """
    table = np.array(rho0_tilde, dtype=complex)
    if table.ndim != 2 or table.shape[0] != table.shape[1]:
        raise ConfigError("first-order iteration needs a square table")
    root_bb = math.sqrt(rho_bb)
    for _ in range(num_atoms):
        table = (
            table
            + shift_matrix(table, -step, -step)
            + root_bb * (shift_matrix(table, 0, -step) + shift_matrix(table, -step, 0))
        )
    return table


def _resolve_kind(step: int, kind: LadderKind | None) -> LadderKind:
    if kind is None:
        if step not in _DEFAULT_KIND:
            raise IncompatibleKindsError(f"step must be 1 or 2, got {step}")
        return _DEFAULT_KIND[step]
    if kind.step != step:
        raise IncompatibleKindsError(f"kind {kind.value} has step {kind.step}, not {step}")
    return kind


def _log_lambda_factorial(kind: LadderKind, f: NonlinearityFn, size: int) -> np.ndarray:
    """log of lambda(n) lambda(n - s) ... down to the step; 0 below the step."""
    step = kind.step
    lam = strength_table(kind, f, size)
    out = np.zeros(size)
    with np.errstate(divide="ignore"):
        log_lam = np.log(lam)
    for n in range(step, size):
        out[n] = out[n - step] + log_lam[n]
    return out


def closed_form_propagator(
    z: complex, f: NonlinearityFn, kind: LadderKind, size: int
) -> np.ndarray:
    """
    Matrix of the weak-coupling propagator on 0..size - 1.

    Entry (m + k s, m) is z^k / k! * sqrt(Lambda(m + k s) / Lambda(m)), with
    Lambda the product of the kind's strengths in steps of s.

    Raises:
        DivergentSeriesError: If an entry overflows
    """
    step = kind.step
    matrix = np.zeros((size, size), dtype=complex)
    if z == 0:
        np.fill_diagonal(matrix, 1.0)
        return matrix

    log_fact = _log_lambda_factorial(kind, f, size)
    log_z, arg_z = math.log(abs(z)), np.angle(z)
    for k in range((size - 1) // step + 1):
        m = np.arange(size - k * step)
        n = m + k * step
        log_mag = k * log_z - gammaln(k + 1) + 0.5 * (log_fact[n] - log_fact[m])
        matrix[n, m] = np.exp(log_mag + 1j * k * arg_z)
    if not np.all(np.isfinite(matrix)):
        raise DivergentSeriesError(f"propagator entries overflow for |z| = {abs(z):g}")
    return matrix


def _extended_size(f: NonlinearityFn, cutoff: int) -> int:
    extended = cutoff + settings.lookahead_terms
    if f.is_tabulated:
        extended = max(cutoff, min(extended, len(f.params) - 1))
    return extended + 1


def _truncation_tail(weights: np.ndarray, cutoff: int, tolerance: float, z: complex) -> float:
    total = float(np.sum(weights))
    if not math.isfinite(total) or total <= 0:
        raise DivergentSeriesError(f"propagated state is not normalizable for z = {z}")
    tail = float(np.sum(weights[cutoff + 1 :])) / total
    if tail >= 0.5:
        raise DivergentSeriesError(
            f"propagated state keeps growing past cutoff {cutoff} for z = {z}"
        )
    if tail > tolerance:
        raise InsufficientCutoffError(
            f"weight {tail:.3g} beyond cutoff {cutoff} exceeds tolerance {tolerance:g}"
        )
    return tail


def closed_form_state(
    psi0: PureState,
    z: complex,
    f: NonlinearityFn,
    step: int = 1,
    cutoff: int | None = None,
    kind: LadderKind | None = None,
    tail_tolerance: float | None = None,
) -> PureState:
    """
    Weak-coupling limit of a pure initial field after many atoms.

    Args:
        psi0: Initial field
        z: Drive amplitude
        f: Nonlinearity function
        step: Photon step (kind defaults to A for 1 and C for 2)
        cutoff: Cutoff of the result (defaults to that of psi0)
        kind: Ladder kind whose strengths build the propagator
        tail_tolerance: Admissible weight beyond the cutoff

    Returns:
        Normalized PureState

    Raises:
        DivergentSeriesError: If the propagated state does not converge
        InsufficientCutoffError: If too much weight lies past the cutoff
    """
    kind = _resolve_kind(step, kind)
    cutoff = psi0.cutoff if cutoff is None else cutoff
    tolerance = settings.tail_tolerance if tail_tolerance is None else tail_tolerance
    size = _extended_size(f, cutoff)

    vector = closed_form_propagator(z, f, kind, size) @ psi0.padded(size - 1)
    tail = _truncation_tail(np.abs(vector) ** 2, cutoff, tolerance, z)
    amps = vector[: cutoff + 1]
    return PureState(cutoff=cutoff, amps=amps / np.linalg.norm(amps), tail_bound=tail)


def closed_form_density(
    rho0: FieldState,
    z: complex,
    f: NonlinearityFn,
    kind: LadderKind = LadderKind.A,
    cutoff: int | None = None,
    tail_tolerance: float | None = None,
) -> FieldState:
    """
    Weak-coupling limit of a mixed initial field (p = 0 dominance).

    rho = M rho0 M^dagger with M the closed-form propagator, renormalized to
    unit trace.

    Args:
        rho0: Initial field
        z: Drive amplitude
        f: Nonlinearity function
        kind: Ladder kind of the interaction
        cutoff: Cutoff of the result (defaults to that of rho0)
        tail_tolerance: Admissible weight beyond the cutoff

    Returns:
        FieldState
    """
    cutoff = rho0.cutoff if cutoff is None else cutoff
    tolerance = settings.tail_tolerance if tail_tolerance is None else tail_tolerance
    size = _extended_size(f, cutoff)

    padded = np.zeros((size, size), dtype=complex)
    keep = min(size, rho0.cutoff + 1)
    padded[:keep, :keep] = rho0.rho[:keep, :keep]
    propagator = closed_form_propagator(z, f, kind, size)
    evolved = propagator @ padded @ propagator.conj().T

    _truncation_tail(np.real(np.diag(evolved)), cutoff, tolerance, z)
    rho = evolved[: cutoff + 1, : cutoff + 1]
    return FieldState(cutoff=cutoff, rho=rho / np.real(np.trace(rho)))


def _log_sine_products(sines: np.ndarray, step: int) -> tuple[np.ndarray, np.ndarray]:
    """log|P(n)| and sign P(n) for P(n) = sin(n) sin(n - s) ... down to the step."""
    size = sines.size
    log_p = np.zeros(size)
    sign_p = np.ones(size)
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(sines))
    for n in range(step, size):
        log_p[n] = log_p[n - step] + log_abs[n]
        sign_p[n] = sign_p[n - step] * np.sign(sines[n])
    return log_p, sign_p


def tilde_transform(
    state: FieldState | np.ndarray,
    atom: AtomPreparation,
    kind: LadderKind,
    f: NonlinearityFn,
    g_tau: float,
    direction: TransformDirection = TransformDirection.FORWARD,
) -> np.ndarray:
    """
    Phase-independent rescaling of the field matrix elements.

    rho(n, n') = exp(i (pi/2 - phi)(n' - n)/s) P(n) P(n') rho_aa^((n + n')/(2s))
    * rho_tilde(n, n'), where P(n) is the product of sin(g tau sqrt(lambda(l)))
    over l = n, n - s, ... down to the step. The forward direction divides this
    factor out, the inverse multiplies it back; both work in log space.

    Args:
        state: Field density matrix (forward) or rescaled table (inverse)
        atom: Atomic preparation
        kind: Ladder operator in the Hamiltonian
        f: Nonlinearity function
        g_tau: Rabi angle of one atom
        direction: FORWARD (rho -> rho_tilde) or INVERSE (rho_tilde -> rho)

    Returns:
        Transformed square matrix

    Raises:
        SingularTransformError: If rho_aa is zero or, going forward, a sine
            factor vanishes
    """
    matrix = state.rho if isinstance(state, FieldState) else np.asarray(state, dtype=complex)
    dim = matrix.shape[0]
    step = kind.step
    if atom.rho_aa <= 0:
        raise SingularTransformError("rescaling needs rho_aa > 0")

    sines = np.sin(rabi_angles(kind, f, g_tau, dim - 1)[:dim])
    if direction == TransformDirection.FORWARD:
        small = np.flatnonzero(np.abs(sines[step:]) < SINE_FLOOR)
        if small.size:
            n = int(small[0]) + step
            raise SingularTransformError(
                f"sin(g_tau * sqrt(lambda({n}))) vanishes; the rescaling is singular"
            )

    log_p, sign_p = _log_sine_products(sines, step)
    n = np.arange(dim, dtype=float)
    exponent = (n[:, None] + n[None, :]) / (2 * step)
    log_scale = log_p[:, None] + log_p[None, :] + exponent * math.log(atom.rho_aa)
    phase = np.exp(1j * (math.pi / 2 - atom.phi) * (n[None, :] - n[:, None]) / step)
    phase = phase * np.outer(sign_p, sign_p)

    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(matrix))
    if direction == TransformDirection.FORWARD:
        return np.exp(log_abs - log_scale) * np.exp(1j * np.angle(matrix)) * phase.conj()
    return np.exp(log_abs + log_scale) * np.exp(1j * np.angle(matrix)) * phase
