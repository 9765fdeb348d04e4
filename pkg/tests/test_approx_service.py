"""
Unit tests for the weak-coupling approximation service.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from app.exceptions import ConfigError, IncompatibleKindsError, SingularTransformError
from app.schemas.algebra import LadderKind, NonlinearityFn
from app.schemas.analysis import TransformDirection
from app.schemas.pumping import AtomPreparation, PumpConfig
from app.schemas.states import FieldState, PureState, StateFamily
from app.services.analysis import fidelity
from app.services.approx import (
    closed_form_density,
    closed_form_state,
    dominance_margin,
    iterate_first_order,
    tilde_solution,
    tilde_transform,
    weak_coupling_check,
)
from app.services.engine import run_pumping
from app.services.states import build_state


def pump(**overrides) -> PumpConfig:
    data = {
        "kind": "A",
        "f": "identity",
        "g_tau": 1e-3,
        "num_atoms": 10,
        "atom": {"rho_aa": 0.5, "rho_bb": 0.5, "coh_mag": 0.5},
        "cutoff": 32,
    }
    data.update(overrides)
    return PumpConfig.model_validate(data)


def positive_table(size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.1, 1.0, (size, size)) + 1j * rng.uniform(0.1, 1.0, (size, size))


class TestWeakCoupling:
    """Test the smallness conditions of the first-order expansion."""

    def test_passes(self):
        """Test g tau = 1e-3 near the vacuum."""
        report = weak_coupling_check(pump(), 0.25)
        assert report.margin1 == pytest.approx(1e-3)
        assert report.margin2 == pytest.approx(1e-3 * math.sqrt(1.25))
        assert report.passed

    def test_fails_for_strong_coupling(self):
        """Test g tau = 1 is outside the regime."""
        report = weak_coupling_check(pump(g_tau=1.0), 0.25)
        assert not report.passed

    def test_two_photon_margin(self):
        """Test the margin uses lambda(nbar + 2) for kind C."""
        report = weak_coupling_check(pump(kind="C"), 4.0)
        assert report.margin2 == pytest.approx(1e-3 * math.sqrt(30.0))

    def test_threshold_override(self):
        """Test an explicit threshold."""
        report = weak_coupling_check(pump(), 0.25, threshold=1e-4)
        assert report.threshold == 1e-4
        assert not report.passed

    def test_negative_nbar(self):
        """Test a negative mean photon number."""
        with pytest.raises(ConfigError):
            weak_coupling_check(pump(), -1.0)


class TestDominance:
    """Test the p = 0 dominance margin."""

    @pytest.mark.parametrize(
        ("n", "n_prime", "rho_bb", "num_atoms", "expected"),
        [(0, 0, 0.5, 100, 0.0), (1, 0, 0.5, 100, 0.01), (2, 2, 0.5, 1, 12.0), (3, 2, 0.25, 10, 2.9)],
    )
    def test_examples(self, n, n_prime, rho_bb, num_atoms, expected):
        """Test (n + n' + n n'/rho_bb)/K."""
        assert dominance_margin(n, n_prime, rho_bb, num_atoms) == pytest.approx(expected)

    def test_zero_lower_population(self):
        """Test rho_bb = 0 is rejected."""
        with pytest.raises(ConfigError):
            dominance_margin(1, 1, 0.0, 10)

    def test_no_atoms(self):
        """Test K = 0 is rejected."""
        with pytest.raises(ConfigError):
            dominance_margin(1, 1, 0.5, 0)


class TestTildeSolution:
    """Test the multinomial solution of the rescaled recursion."""

    def test_vacuum_single_atom(self):
        """Test the vacuum element is untouched by one atom."""
        table = np.zeros((4, 4), dtype=complex)
        table[0, 0] = 1.0
        assert tilde_solution(table, 1, 0.5, 0, 0) == pytest.approx(1.0)

    def test_first_coherence(self):
        """Test (1, 0) after ten atoms is K sqrt(rho_bb)."""
        table = np.zeros((4, 4), dtype=complex)
        table[0, 0] = 1.0
        assert tilde_solution(table, 10, 0.25, 1, 0) == pytest.approx(5.0)

    @pytest.mark.parametrize("step", [1, 2])
    @pytest.mark.parametrize("num_atoms", [0, 1, 7, 30])
    def test_matches_iteration(self, step, num_atoms):
        """Test agreement with direct iteration for n, n' <= 8."""
        table = positive_table(9, seed=num_atoms + step)
        iterated = iterate_first_order(table, num_atoms, 0.4, step)
        for n in range(9):
            for n_prime in range(9):
                value = tilde_solution(table, num_atoms, 0.4, n, n_prime, step)
                assert value == pytest.approx(iterated[n, n_prime], rel=1e-12)

    def test_untruncated_sum(self):
        """Test the full k range gives the same element."""
        table = positive_table(6, seed=3)
        truncated = tilde_solution(table, 12, 0.3, 5, 4)
        full = tilde_solution(table, 12, 0.3, 5, 4, truncated=False)
        assert full == pytest.approx(truncated, rel=1e-12)

    def test_zero_lower_population(self):
        """Test rho_bb = 0 keeps only diagonal shifts."""
        table = np.eye(5, dtype=complex)
        assert tilde_solution(table, 3, 0.0, 2, 1) == 0
        assert tilde_solution(table, 3, 0.0, 2, 2) == pytest.approx(1 + 3 + 3)

    def test_negative_atoms(self):
        """Test K < 0 is rejected."""
        with pytest.raises(ConfigError):
            tilde_solution(np.eye(2), -1, 0.5, 0, 0)

    def test_iteration_needs_square_table(self):
        """Test a non-square table."""
        with pytest.raises(ConfigError):
            iterate_first_order(np.zeros((2, 3)), 1, 0.5)


class TestClosedForm:
    """Test the weak-coupling propagator against the series families."""

    def test_one_photon_from_vacuum(self, inverse_sqrt_f):
        """Test step 1 from the vacuum is nlcs_dual."""
        z = 0.3 - 0.1j
        state = closed_form_state(PureState.fock(0, 32), z, inverse_sqrt_f, 1)
        series = build_state(StateFamily(tag="nlcs_dual", f=inverse_sqrt_f, z=z), 32)
        np.testing.assert_allclose(state.amps, series.amps, atol=1e-12)

    @pytest.mark.parametrize(
        ("kind", "seed", "tag"),
        [
            (LadderKind.B, 0, "nlcs"),
            (LadderKind.C, 0, "sq_vac"),
            (LadderKind.C, 1, "sq_first"),
            (LadderKind.B0, 0, "even_nlcs"),
            (LadderKind.B1, 1, "odd_nlcs"),
        ],
    )
    def test_kinds_match_families(self, inverse_sqrt_f, kind, seed, tag):
        """Test each kind propagates its seed onto its family."""
        z = 0.3j
        state = closed_form_state(
            PureState.fock(seed, 40), z, inverse_sqrt_f, kind.step, kind=kind
        )
        series = build_state(StateFamily(tag=tag, f=inverse_sqrt_f, z=z), 40)
        assert fidelity(FieldState.from_pure(state), series) == pytest.approx(1.0, abs=1e-10)

    def test_zero_amplitude(self, identity_f):
        """Test z = 0 returns the initial state."""
        psi0 = PureState(cutoff=8, amps=np.array([0.6, 0, 0.8j, 0, 0, 0, 0, 0, 0]))
        state = closed_form_state(psi0, 0, identity_f, 2)
        np.testing.assert_allclose(state.amps, psi0.amps, atol=1e-15)

    def test_mismatched_kind(self, identity_f):
        """Test a kind whose step differs from the requested step."""
        with pytest.raises(IncompatibleKindsError):
            closed_form_state(PureState.fock(0, 8), 0.1, identity_f, 1, kind=LadderKind.C)

    def test_density_of_pure_state(self, identity_f):
        """Test the mixed-state form reproduces the pure projector."""
        psi0 = PureState(cutoff=32, amps=np.r_[[0.8, 0.6], np.zeros(31)])
        pure = closed_form_state(psi0, 0.4j, identity_f)
        mixed = closed_form_density(FieldState.from_pure(psi0), 0.4j, identity_f)
        np.testing.assert_allclose(mixed.rho, np.outer(pure.amps, pure.amps.conj()), atol=1e-12)

    def test_engine_approaches_closed_form(self, identity_f):
        """Test pumping from a Fock state converges as g tau shrinks."""
        psi0 = PureState.fock(1, 32)
        target = closed_form_state(psi0, -0.3j, identity_f)
        fidelities = []
        for g_tau in (1e-2, 1e-3, 1e-4):
            config = pump(g_tau=g_tau, num_atoms=round(0.6 / g_tau), initial={"fock": 1})
            _, records = run_pumping(config, target)
            fidelities.append(records[-1].fidelity_target)
        assert fidelities[0] < fidelities[1] < fidelities[2]
        assert fidelities[2] >= 0.999


class TestTildeTransform:
    """Test the phase-independent rescaling."""

    atom = AtomPreparation(rho_aa=0.6, rho_bb=0.4, coh_mag=math.sqrt(0.24), phi=0.7)

    @settings(max_examples=25, deadline=None)
    @given(
        real=arrays(np.float64, (9, 9), elements=st.floats(-1, 1)),
        imag=arrays(np.float64, (9, 9), elements=st.floats(-1, 1)),
    )
    def test_round_trip(self, real, imag):
        """Test inverse after forward is the identity on Hermitian input."""
        matrix = real + 1j * imag
        matrix = matrix + matrix.conj().T
        f = NonlinearityFn(family="identity")
        forward = tilde_transform(matrix, self.atom, LadderKind.A, f, 0.3)
        back = tilde_transform(
            forward, self.atom, LadderKind.A, f, 0.3, TransformDirection.INVERSE
        )
        np.testing.assert_allclose(back, matrix, rtol=1e-12, atol=1e-15)

    def test_vacuum_element(self, identity_f, vacuum):
        """Test the (0, 0) element is not rescaled."""
        forward = tilde_transform(vacuum, self.atom, LadderKind.C, identity_f, 0.2)
        assert forward[0, 0] == pytest.approx(1.0)

    def test_zero_coupling(self, identity_f, vacuum):
        """Test g tau = 0 makes the forward rescaling singular."""
        with pytest.raises(SingularTransformError):
            tilde_transform(vacuum, self.atom, LadderKind.A, identity_f, 0.0)

    def test_ground_state_atoms(self, identity_f, vacuum):
        """Test rho_aa = 0 is singular."""
        atom = AtomPreparation(rho_aa=0.0, rho_bb=1.0)
        with pytest.raises(SingularTransformError):
            tilde_transform(vacuum, atom, LadderKind.A, identity_f, 0.1)

    def test_two_photon_support(self, identity_f):
        """Test the rescaled step-2 field from a vacuum start lives on even/even elements."""
        atom = self.atom.model_dump()
        state, _ = run_pumping(pump(kind="C", g_tau=0.05, num_atoms=20, atom=atom, cutoff=24))
        forward = tilde_transform(state, self.atom, LadderKind.C, identity_f, 0.05)

        assert np.all(forward[1::2, :] == 0)
        assert np.all(forward[:, 1::2] == 0)
        assert abs(forward[2, 0]) > 0
        assert np.all(np.isfinite(forward))
