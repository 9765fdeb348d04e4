"""
Micromaser pumping engine.

This module advances the cavity-field density matrix atom by atom, either by
the closed recursion for the matrix elements or by conjugating the joint
atom-field state with the interaction unitary and tracing out the atom.
Both paths apply the same truncation: transitions that would raise the field
past the cutoff are dropped and the lost probability is booked as leakage.
"""

import cmath
import logging
import math
from functools import lru_cache

import numpy as np

from app.config import settings
from app.exceptions import ConfigError, CrossCheckMismatch, LeakageBudgetExceeded
from app.schemas.algebra import LadderKind, NonlinearityFn
from app.schemas.pumping import AtomPreparation, EvolutionMethod, PumpConfig, RunRecord
from app.schemas.states import FieldState, PureState
from app.services.algebra import strength_table
from app.services.analysis import fidelity, observables
from app.services.states import build_state

logger = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def rabi_angles(kind: LadderKind, f: NonlinearityFn, g_tau: float, cutoff: int) -> np.ndarray:
    """
    Rabi angles g*tau*sqrt(lambda(n)) for n = 0..cutoff + step.

    Args:
        kind: Ladder operator kind
        f: Nonlinearity function
        g_tau: Rabi angle of one atom
        cutoff: Largest Fock index

    Returns:
        Read-only array of angles
    """
    theta = g_tau * np.sqrt(strength_table(kind, f, cutoff + kind.step + 1))
    theta.setflags(write=False)
    return theta


def build_joint_unitary(
    kind: LadderKind, f: NonlinearityFn, g_tau: float, cutoff: int
) -> np.ndarray:
    """
    Interaction unitary on atom (x) field, atom index major (|a> = 0, |b> = 1).

    Blocks: cos(theta(n + s)) on |a><a|, cos(theta(n)) on |b><b|,
    -i sin(theta(n)) from |b, n> to |a, n - s>, and -i sin(theta(n + s)) from
    |a, n> to |b, n + s>; the last is dropped when n + s exceeds the cutoff.

    Args:
        kind: Ladder operator in the Hamiltonian
        f: Nonlinearity function
        g_tau: Rabi angle of one atom
        cutoff: Largest Fock index

    Returns:
        2(cutoff + 1) square complex matrix
    """
    dim = cutoff + 1
    step = kind.step
    theta = rabi_angles(kind, f, g_tau, cutoff)
    n = np.arange(dim)

    unitary = np.zeros((2 * dim, 2 * dim), dtype=complex)
    unitary[n, n] = np.cos(theta[n + step])
    unitary[dim + n, dim + n] = np.cos(theta[n])

    m = np.arange(step, dim)
    unitary[m - step, dim + m] = -1j * np.sin(theta[m])
    kept = np.arange(dim - step)
    unitary[dim + kept + step, kept] = -1j * np.sin(theta[kept + step])
    return unitary


def shift_matrix(rho: np.ndarray, dn: int, dn_prime: int) -> np.ndarray:
    """out[n, n'] = rho[n + dn, n' + dn'] with zeros outside the matrix."""
    dim = rho.shape[0]
    out = np.zeros_like(rho)
    rows_out = slice(max(0, -dn), min(dim, dim - dn))
    rows_in = slice(max(0, dn), min(dim, dim + dn))
    cols_out = slice(max(0, -dn_prime), min(dim, dim - dn_prime))
    cols_in = slice(max(0, dn_prime), min(dim, dim + dn_prime))
    out[rows_out, cols_out] = rho[rows_in, cols_in]
    return out


def truncation_loss(
    state: FieldState, atom: AtomPreparation, theta: np.ndarray, step: int
) -> float:
    """
    Probability carried past the cutoff by one atom.

    Only |a, n> -> |b, n + s> with n + s > cutoff leaves the space, with
    weight rho_aa sin^2(theta(n + s)) rho(n, n).

    Args:
        state: Field before the atom
        atom: Atomic preparation
        theta: Rabi angles from rabi_angles
        step: Photon step of the ladder kind

    Returns:
        Lost probability
    """
    dim = state.cutoff + 1
    top = np.arange(max(0, dim - step), dim)
    populations = np.real(np.diag(state.rho))[top]
    return float(atom.rho_aa * np.sum(np.sin(theta[top + step]) ** 2 * populations))


def _finish_step(
    previous: FieldState, rho: np.ndarray, free_phase: float, lost: float
) -> FieldState:
    """Apply the free-evolution phase and add the truncation loss to the leakage."""
    if free_phase:
        n = np.arange(previous.cutoff + 1)
        rho = rho * np.exp(1j * free_phase * (n[:, None] - n[None, :]))
    return FieldState(cutoff=previous.cutoff, rho=rho, leakage=previous.leakage + lost)


def step_atom_recursion(
    state: FieldState,
    atom: AtomPreparation,
    kind: LadderKind,
    f: NonlinearityFn,
    g_tau: float,
    free_phase: float = 0.0,
) -> FieldState:
    """
    Pass one atom through the cavity using the matrix-element recursion.

    Args:
        state: Field before the atom
        atom: Atomic preparation
        kind: Ladder operator in the Hamiltonian
        f: Nonlinearity function
        g_tau: Rabi angle of one atom
        free_phase: omega * delta_t applied after the interaction

    Returns:
        Field after the atom
    """
    dim = state.cutoff + 1
    step = kind.step
    theta = rabi_angles(kind, f, g_tau, state.cutoff)
    c, s = np.cos(theta[:dim]), np.sin(theta[:dim])
    c_up, s_up = np.cos(theta[step : dim + step]), np.sin(theta[step : dim + step])
    rho = state.rho
    rho_ab, rho_ba = atom.rho_ab, atom.rho_ba

    new = (atom.rho_aa * np.outer(c_up, c_up) + atom.rho_bb * np.outer(c, c)) * rho
    new += atom.rho_bb * np.outer(s_up, s_up) * shift_matrix(rho, step, step)
    new += atom.rho_aa * np.outer(s, s) * shift_matrix(rho, -step, -step)
    if rho_ab:
        new += 1j * rho_ab * np.outer(c_up, s_up) * shift_matrix(rho, 0, step)
        new += 1j * rho_ba * np.outer(c, s) * shift_matrix(rho, 0, -step)
        new -= 1j * rho_ba * np.outer(s_up, c_up) * shift_matrix(rho, step, 0)
        new -= 1j * rho_ab * np.outer(s, c) * shift_matrix(rho, -step, 0)
    return _finish_step(state, new, free_phase, truncation_loss(state, atom, theta, step))


def atom_density_matrix(atom: AtomPreparation) -> np.ndarray:
    """2x2 atomic density matrix in the (|a>, |b>) basis."""
    return np.array([[atom.rho_aa, atom.rho_ab], [atom.rho_ba, atom.rho_bb]], dtype=complex)


def step_atom_unitary(
    state: FieldState,
    atom: AtomPreparation,
    kind: LadderKind,
    f: NonlinearityFn,
    g_tau: float,
    free_phase: float = 0.0,
    unitary: np.ndarray | None = None,
) -> FieldState:
    """
    Pass one atom through the cavity by unitary conjugation and partial trace.

    Args:
        state: Field before the atom
        atom: Atomic preparation
        kind: Ladder operator in the Hamiltonian
        f: Nonlinearity function
        g_tau: Rabi angle of one atom
        free_phase: omega * delta_t applied after the interaction
        unitary: Precomputed build_joint_unitary result

    Returns:
        Field after the atom
    """
    dim = state.cutoff + 1
    if unitary is None:
        unitary = build_joint_unitary(kind, f, g_tau, state.cutoff)
    joint = np.kron(atom_density_matrix(atom), state.rho)
    evolved = unitary @ joint @ unitary.conj().T
    reduced = np.trace(evolved.reshape(2, dim, 2, dim), axis1=0, axis2=2)
    theta = rabi_angles(kind, f, g_tau, state.cutoff)
    return _finish_step(state, reduced, free_phase, truncation_loss(state, atom, theta, kind.step))


def initial_field_state(config: PumpConfig) -> FieldState:
    """
    Initial cavity field of a pumping run.

    Raises:
        ConfigError: If the initial field does not fit below the cutoff
    """
    initial = config.initial
    if initial.family is not None:
        return FieldState.from_pure(build_state(initial.family, config.cutoff))
    if initial.amplitudes is not None:
        amps = np.array(initial.amplitudes, dtype=complex)
        if amps.size > config.cutoff + 1:
            raise ConfigError(
                f"{amps.size} initial amplitudes do not fit below cutoff {config.cutoff}"
            )
        if not np.any(amps):
            raise ConfigError("initial amplitudes are all zero")
        psi = PureState(cutoff=amps.size - 1, amps=amps)
        return FieldState.from_pure(psi, config.cutoff)
    n = initial.fock or 0
    if n > config.cutoff:
        raise ConfigError(f"initial Fock state {n} lies above cutoff {config.cutoff}")
    return FieldState.fock(n, config.cutoff)


def target_z(config: PumpConfig) -> complex:
    """
    Weak-coupling amplitude in the conventional form -i exp(-i phi) K g tau sqrt(rho_aa rho_bb).
    """
    atom = config.atom
    return (
        -1j
        * cmath.exp(-1j * atom.phi)
        * config.num_atoms
        * config.g_tau
        * math.sqrt(atom.rho_aa * atom.rho_bb)
    )


def drive_z(config: PumpConfig) -> complex:
    """
    Amplitude generated by the recursion, -i exp(+i phi) K g tau sqrt(rho_aa rho_bb).

    Equal to target_z for phi = 0 and phi = pi.
    """
    atom = config.atom
    return (
        -1j
        * cmath.exp(1j * atom.phi)
        * config.num_atoms
        * config.g_tau
        * math.sqrt(atom.rho_aa * atom.rho_bb)
    )


def minimum_eigenvalue(state: FieldState) -> float:
    """Smallest eigenvalue of the (Hermitian part of the) density matrix."""
    hermitian = 0.5 * (state.rho + state.rho.conj().T)
    return float(np.linalg.eigvalsh(hermitian)[0])


def _record(k: int, state: FieldState, target: PureState | None) -> RunRecord:
    obs = observables(state)
    return RunRecord(
        k=k,
        trace=state.trace,
        leakage=state.leakage,
        purity=obs.purity,
        mean_n=obs.mean_n,
        var_n=obs.var_n,
        mandel_q=obs.mandel_q,
        max_offdiag=obs.max_offdiag,
        fidelity_target=None if target is None else fidelity(state, target),
    )


def run_pumping(
    config: PumpConfig,
    target: PureState | None = None,
    leak_budget: float | None = None,
    cross_check_tolerance: float | None = None,
) -> tuple[FieldState, list[RunRecord]]:
    """
    Inject K identically prepared atoms one after another.

    Args:
        config: Pumping configuration
        target: Optional analytic state recorded as fidelity_target
        leak_budget: Largest admissible leakage (defaults to settings)
        cross_check_tolerance: Agreement required when method is "both"

    Returns:
        Tuple of (final field, records for k = 0..K)

    Raises:
        LeakageBudgetExceeded: If the leakage exceeds the budget
        CrossCheckMismatch: If the two evolution paths disagree
    """
    budget = settings.leak_budget if leak_budget is None else leak_budget
    tolerance = (
        settings.cross_check_tolerance if cross_check_tolerance is None else cross_check_tolerance
    )
    kind, f, g_tau, atom = config.kind, config.f, config.g_tau, config.atom
    method = config.method

    state = initial_field_state(config)
    records = [_record(0, state, target)]
    unitary = None
    if method != EvolutionMethod.RECURSION:
        unitary = build_joint_unitary(kind, f, g_tau, config.cutoff)

    logger.info(
        "Pumping %d atoms: kind=%s f=%s g_tau=%g cutoff=%d method=%s",
        config.num_atoms, kind.value, f, g_tau, config.cutoff, method.value,
    )
    for k in range(1, config.num_atoms + 1):
        if method == EvolutionMethod.UNITARY:
            state = step_atom_unitary(state, atom, kind, f, g_tau, config.free_phase, unitary)
        else:
            stepped = step_atom_recursion(state, atom, kind, f, g_tau, config.free_phase)
            if method == EvolutionMethod.BOTH:
                check = step_atom_unitary(state, atom, kind, f, g_tau, config.free_phase, unitary)
                deviation = float(np.max(np.abs(stepped.rho - check.rho)))
                if deviation > tolerance:
                    logger.error("Recursion and unitary paths disagree at atom %d", k)
                    raise CrossCheckMismatch(
                        f"recursion and unitary paths differ by {deviation:.3g} at atom k={k}"
                    )
            state = stepped

        logger.debug("Atom %d: trace=%.15f leakage=%.3g", k, state.trace, state.leakage)
        if state.leakage > budget:
            logger.error("Leakage budget exceeded at atom %d", k)
            raise LeakageBudgetExceeded(
                f"leakage {state.leakage:.3g} exceeds budget {budget:g} at atom k={k}; "
                f"raise the cutoff above {config.cutoff}"
            )
        records.append(_record(k, state, target))

    logger.info("Pumping finished: trace=%.12f leakage=%.3g", state.trace, state.leakage)
    return state, records
