"""
Unit tests for the field-analysis service.
"""

import cmath

import numpy as np
import pytest

from app.schemas.algebra import NonlinearityFn
from app.schemas.states import FieldState, PureState, StateFamily
from app.services.analysis import fidelity, observables
from app.services.states import build_state


def mixture(weights: dict[int, float], cutoff: int = 8) -> FieldState:
    populations = np.zeros(cutoff + 1)
    for n, weight in weights.items():
        populations[n] = weight
    return FieldState(cutoff=cutoff, rho=np.diag(populations))


class TestFidelity:
    """Test overlaps with pure targets."""

    def test_same_state(self):
        """Test a projector onto its own vector."""
        target = PureState.fock(2, 6)
        assert fidelity(FieldState.from_pure(target), target) == pytest.approx(1.0)

    def test_orthogonal_state(self):
        """Test orthogonal Fock states."""
        assert fidelity(FieldState.fock(1, 6), PureState.fock(0, 6)) == 0.0

    def test_equal_mixture(self):
        """Test a 50/50 mixture against one component."""
        assert fidelity(mixture({0: 0.5, 1: 0.5}), PureState.fock(0, 8)) == pytest.approx(0.5)

    def test_global_phase(self, identity_f):
        """Test the overlap ignores a global phase of the target."""
        target = build_state(StateFamily(tag="nlcs", f=identity_f, z=0.4j), 20)
        rotated = PureState(cutoff=20, amps=target.amps * cmath.exp(1.3j))
        rho = FieldState.from_pure(target)
        assert fidelity(rho, rotated) == pytest.approx(fidelity(rho, target))

    def test_target_with_smaller_cutoff(self):
        """Test a target padded up to the cutoff of rho."""
        assert fidelity(FieldState.fock(0, 10), PureState.fock(0, 3)) == pytest.approx(1.0)


class TestObservables:
    """Test photon statistics."""

    def test_coherent_state(self, identity_f):
        """Test Poissonian statistics for |alpha|^2 = 0.25."""
        state = build_state(StateFamily(tag="nlcs", f=identity_f, z=0.5), 40)
        result = observables(FieldState.from_pure(state))
        assert result.mean_n == pytest.approx(0.25, abs=1e-12)
        assert abs(result.mandel_q) <= 1e-10
        assert result.purity == pytest.approx(1.0)

    def test_fock_state(self):
        """Test a number state is maximally sub-Poissonian."""
        result = observables(FieldState.fock(3, 8))
        assert result.mean_n == pytest.approx(3.0)
        assert result.var_n == pytest.approx(0.0)
        assert result.mandel_q == pytest.approx(-1.0)
        assert result.parity_even_weight == 0.0
        assert result.max_offdiag == 0.0

    def test_vacuum(self):
        """Test Q is reported as zero without photons."""
        result = observables(FieldState.fock(0, 8))
        assert result.mean_n == 0.0
        assert result.mandel_q == 0.0
        assert result.parity_even_weight == 1.0

    def test_mixed_state(self):
        """Test purity and parity weight of a diagonal mixture."""
        result = observables(mixture({0: 0.5, 1: 0.25, 2: 0.25}))
        assert result.purity == pytest.approx(0.375)
        assert result.parity_even_weight == pytest.approx(0.75)
        assert result.mean_n == pytest.approx(0.75)

    def test_coherences(self):
        """Test the largest off-diagonal magnitude."""
        psi = PureState(cutoff=4, amps=np.array([0.6, 0.8j, 0, 0, 0]))
        result = observables(FieldState.from_pure(psi))
        assert result.max_offdiag == pytest.approx(0.48)

    @pytest.mark.parametrize(
        "tag", ["nlcs", "nlcs_dual", "sq_vac", "sq_first", "even_nlcs", "odd_nlcs"]
    )
    def test_matches_amplitude_sums(self, tag):
        """Test the statistics against direct sums over the state amplitudes."""
        f = NonlinearityFn(family="inverse_sqrt")
        state = build_state(StateFamily(tag=tag, f=f, z=0.3 * cmath.exp(0.25j)), 40)
        probabilities = np.abs(state.amps) ** 2
        n = np.arange(41)
        mean_n = np.sum(n * probabilities)
        var_n = np.sum(n**2 * probabilities) - mean_n**2

        result = observables(FieldState.from_pure(state))
        assert result.mean_n == pytest.approx(mean_n, rel=1e-12)
        assert result.mandel_q == pytest.approx(var_n / mean_n - 1.0, rel=1e-9, abs=1e-12)
        assert result.parity_even_weight == pytest.approx(np.sum(probabilities[0::2]), abs=1e-14)

    def test_even_family_small_amplitude(self):
        """Test Q -> 1 for even_nlcs with f = 1 as z -> 0."""
        f = NonlinearityFn(family="identity")
        state = build_state(StateFamily(tag="even_nlcs", f=f, z=1e-3), 16)
        result = observables(FieldState.from_pure(state))
        assert result.mandel_q == pytest.approx(1.0, abs=1e-5)
        assert result.parity_even_weight == 1.0
