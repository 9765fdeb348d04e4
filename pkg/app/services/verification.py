"""
Invariant verification suite.

This module runs the self-checks behind the ``verify`` command: deformed
algebra identities, dual commutators, recursion-vs-unitary agreement with
trace and Hermiticity conservation, displacement-vs-series equivalence,
eigenrelation residuals, convergence bounds and the multinomial solution of
the first-order recursion.
"""

import logging
import math
from collections.abc import Callable

import numpy as np

from app.exceptions import SimulationError
from app.schemas.algebra import DeformedLadder, LadderKind, NonlinearityFn
from app.schemas.pumping import AtomPreparation
from app.schemas.states import FieldState, PureState, StateFamily, StateFamilyTag
from app.schemas.verification import CheckResult
from app.services.algebra import (
    TEST_FAMILIES,
    build_ladder,
    deformed_algebra_deviation,
    dual_deviation,
    number_commutator_deviation,
)
from app.services.analysis import fidelity
from app.services.approx import iterate_first_order, tilde_solution
from app.services.engine import build_joint_unitary, step_atom_recursion, step_atom_unitary
from app.services.states import (
    DISPLACEMENT_PAIRS,
    EIGEN_OPERATORS,
    build_state,
    convergence_bound,
    displacement_apply,
    eigenrelation_residual,
)

logger = logging.getLogger(__name__)

ALGEBRA_TOLERANCE = 1e-12
CROSS_CHECK_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-10
HERMITICITY_TOLERANCE = 1e-12
EIGEN_TOLERANCE = 1e-10
DISPLACEMENT_TOLERANCE = 1e-10
BOUND_TOLERANCE = 0.01
TILDE_TOLERANCE = 1e-12

FAULT_SIZE = 1e-6
CROSS_CHECK_ATOMS = 50
CROSS_CHECK_G_TAU = (1e-3, 0.3)
SERIES_Z = 0.3
SERIES_F = NonlinearityFn(family="inverse_sqrt")
SERIES_MIN_CUTOFF = 32

# (lowering kind, raising kind, sector) for [L, R^dagger] = 1
DUAL_PAIRS: tuple[tuple[LadderKind, LadderKind, int | None], ...] = (
    (LadderKind.A, LadderKind.B, None),
    (LadderKind.B, LadderKind.A, None),
    (LadderKind.C, LadderKind.B0, 0),
    (LadderKind.C, LadderKind.B1, 1),
)

# (family, f, expected bound)
BOUND_CASES: tuple[tuple[StateFamilyTag, NonlinearityFn, float], ...] = (
    (StateFamilyTag.NLCS, NonlinearityFn(family="inverse_sqrt"), 1.0),
    (StateFamilyTag.NLCS, NonlinearityFn(family="identity"), math.inf),
    (StateFamilyTag.NLCS_DUAL, NonlinearityFn(family="inverse_sqrt"), math.inf),
    (StateFamilyTag.SQ_VAC, NonlinearityFn(family="identity"), 0.25),
    (StateFamilyTag.NLCS, NonlinearityFn(family="power", params=(-0.45,)), math.inf),
    (StateFamilyTag.EVEN_NLCS, NonlinearityFn(family="power", params=(-1.0,)), 1.0),
)

CROSS_CHECK_ATOM = AtomPreparation(rho_aa=0.6, rho_bb=0.4, coh_mag=math.sqrt(0.24), phi=0.7)


def _row(group: str, name: str, limit: float, measure: Callable[[], float]) -> CheckResult:
    """Evaluate one check, turning toolkit errors into a failed row."""
    try:
        value = float(measure())
    except SimulationError as e:
        logger.warning("Check %s / %s could not run: %s", group, name, e.detail)
        return CheckResult(
            group=group, name=name, value=math.inf, limit=limit, passed=False, detail=e.detail
        )
    passed = math.isfinite(value) and value <= limit
    return CheckResult(group=group, name=name, value=value, limit=limit, passed=passed)


def perturbed_ladder(ladder: DeformedLadder, size: float = FAULT_SIZE) -> DeformedLadder:
    """Copy of a ladder with every strength scaled by 1 + size."""
    return DeformedLadder(
        kind=ladder.kind, f=ladder.f, cutoff=ladder.cutoff, strengths=ladder.strengths * (1 + size)
    )


def algebra_checks(cutoff: int) -> list[CheckResult]:
    """Deformed commutators and number-operator relations for every kind and family."""
    rows = []
    for f in TEST_FAMILIES:
        for kind in LadderKind:
            rows.append(
                _row(
                    "algebra",
                    f"[L, L+] {kind.value} f={f}",
                    ALGEBRA_TOLERANCE,
                    lambda kind=kind, f=f: deformed_algebra_deviation(kind, f, cutoff),
                )
            )
            rows.append(
                _row(
                    "algebra",
                    f"[N, L] {kind.value} f={f}",
                    ALGEBRA_TOLERANCE,
                    lambda kind=kind, f=f: number_commutator_deviation(kind, f, cutoff),
                )
            )
    return rows


def duality_checks(cutoff: int, fault_inject: bool = False) -> list[CheckResult]:
    """Dual commutators [L, R+] = 1, optionally with a perturbed strength table."""
    rows = []
    for f in TEST_FAMILIES:
        for lower_kind, raise_kind, sector in DUAL_PAIRS:

            def measure(lower_kind=lower_kind, raise_kind=raise_kind, sector=sector, f=f):
                lower = build_ladder(lower_kind, f, cutoff)
                if fault_inject:
                    lower = perturbed_ladder(lower)
                return dual_deviation(lower, build_ladder(raise_kind, f, cutoff), sector)

            label = "" if sector is None else (" even" if sector == 0 else " odd")
            rows.append(
                _row(
                    "duality",
                    f"[{lower_kind.value}, {raise_kind.value}+]{label} f={f}",
                    ALGEBRA_TOLERANCE,
                    measure,
                )
            )
    return rows


def _cross_check_run(
    kind: LadderKind, f: NonlinearityFn, g_tau: float, cutoff: int, atoms: int
) -> tuple[float, float, float]:
    """Largest path disagreement, trace drift and Hermiticity deviation over a run."""
    seed = 1 if kind == LadderKind.B1 else 0
    start = FieldState.fock(seed, cutoff)
    recursion, unitary_path = start, start
    unitary = build_joint_unitary(kind, f, g_tau, cutoff)
    mismatch = drift = hermiticity = 0.0
    for _ in range(atoms):
        recursion = step_atom_recursion(recursion, CROSS_CHECK_ATOM, kind, f, g_tau)
        unitary_path = step_atom_unitary(
            unitary_path, CROSS_CHECK_ATOM, kind, f, g_tau, unitary=unitary
        )
        mismatch = max(mismatch, float(np.max(np.abs(recursion.rho - unitary_path.rho))))
        for path in (recursion, unitary_path):
            drift = max(drift, abs(path.trace + path.leakage - 1.0))
        hermiticity = max(hermiticity, recursion.hermiticity_deviation)
    return mismatch, drift, hermiticity


def cross_check_checks(cutoff: int, atoms: int = CROSS_CHECK_ATOMS) -> list[CheckResult]:
    """Recursion against unitary conjugation, with conservation checks."""
    rows = []
    for f in TEST_FAMILIES:
        for kind in LadderKind:
            for g_tau in CROSS_CHECK_G_TAU:
                label = f"{kind.value} f={f} g_tau={g_tau:g}"
                try:
                    mismatch, drift, hermiticity = _cross_check_run(kind, f, g_tau, cutoff, atoms)
                except SimulationError as e:
                    rows.append(
                        CheckResult(
                            group="cross-check", name=label, value=math.inf,
                            limit=CROSS_CHECK_TOLERANCE, passed=False, detail=e.detail,
                        )
                    )
                    continue
                rows.append(_row("cross-check", label, CROSS_CHECK_TOLERANCE, lambda m=mismatch: m))
                rows.append(_row("trace", label, TRACE_TOLERANCE, lambda d=drift: d))
                rows.append(_row("hermiticity", label, HERMITICITY_TOLERANCE, lambda h=hermiticity: h))
    return rows


def displacement_checks(cutoff: int) -> list[CheckResult]:
    """Displacement operators on their seeds against the series construction."""
    rows = []
    for pair, (_, _, tag, seed_index) in DISPLACEMENT_PAIRS.items():

        def measure(pair=pair, tag=tag, seed_index=seed_index):
            seed = PureState.fock(seed_index, cutoff)
            displaced = displacement_apply(pair, SERIES_F, SERIES_Z, seed, cutoff)
            series = build_state(StateFamily(tag=tag, f=SERIES_F, z=SERIES_Z), cutoff)
            return 1.0 - fidelity(FieldState.from_pure(displaced), series)

        rows.append(_row("displacement", f"{pair.value} -> {tag.value}", DISPLACEMENT_TOLERANCE, measure))
    return rows


def eigenrelation_checks(cutoff: int) -> list[CheckResult]:
    """Residuals of L psi = z psi for every family and its operator."""
    rows = []
    for tag, kind in EIGEN_OPERATORS.items():

        def measure(tag=tag, kind=kind):
            state = build_state(StateFamily(tag=tag, f=SERIES_F, z=SERIES_Z), cutoff)
            return eigenrelation_residual(kind, state, SERIES_Z, SERIES_F)

        rows.append(_row("eigenrelation", f"{kind.value} {tag.value}", EIGEN_TOLERANCE, measure))
    return rows


def bound_checks() -> list[CheckResult]:
    """Convergence bounds against their analytic limits."""
    rows = []
    for tag, f, expected in BOUND_CASES:

        def measure(tag=tag, f=f, expected=expected):
            bound = convergence_bound(tag, f)
            if math.isinf(expected):
                return 0.0 if math.isinf(bound) else math.inf
            return abs(bound - expected) / expected

        rows.append(_row("convergence", f"{tag.value} f={f}", BOUND_TOLERANCE, measure))
    return rows


def tilde_checks(max_index: int = 8, atoms: int = 30, rho_bb: float = 0.4) -> list[CheckResult]:
    """Multinomial solution against K-fold iteration of the first-order recursion."""
    rows = []
    for step in (1, 2):

        def measure(step=step):
            seed = np.zeros((max_index + 1, max_index + 1), dtype=complex)
            seed[0, 0] = 1.0
            if step == 2:
                seed[1, 1] = 0.5
            iterated = iterate_first_order(seed, atoms, rho_bb, step)
            solved = np.array(
                [
                    [tilde_solution(seed, atoms, rho_bb, n, m, step) for m in range(max_index + 1)]
                    for n in range(max_index + 1)
                ]
            )
            return float(np.max(np.abs(solved - iterated)) / np.max(np.abs(iterated)))

        rows.append(_row("first-order", f"step {step} K={atoms}", TILDE_TOLERANCE, measure))
    return rows


def run_verification(cutoff: int = 32, fault_inject: bool = False) -> list[CheckResult]:
    """
    Run the full suite.

    Args:
        cutoff: Cutoff of the operator and pumping checks
        fault_inject: Scale the lowering strengths of the duality checks by 1 + 1e-6

    Returns:
        All rows, in group order
    """
    series_cutoff = max(cutoff, SERIES_MIN_CUTOFF)
    logger.info("Running verification at cutoff %d (series cutoff %d)", cutoff, series_cutoff)
    if fault_inject:
        logger.warning("Fault injection enabled: strengths perturbed by %g", FAULT_SIZE)

    rows = []
    rows += algebra_checks(cutoff)
    rows += duality_checks(cutoff, fault_inject)
    rows += cross_check_checks(cutoff)
    rows += displacement_checks(series_cutoff)
    rows += eigenrelation_checks(series_cutoff)
    rows += bound_checks()
    rows += tilde_checks()

    failed = sum(not row.passed for row in rows)
    logger.info("Verification finished: %d of %d checks passed", len(rows) - failed, len(rows))
    return rows
