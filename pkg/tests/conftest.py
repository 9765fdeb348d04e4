"""
Pytest configuration and shared fixtures.

This module provides the named nonlinearity families, atomic preparations,
small field states and a temporary output directory used across the suite.
"""

import math

import numpy as np
import pytest

from app.schemas.algebra import NonlinearityFn
from app.schemas.pumping import AtomPreparation
from app.schemas.states import FieldState
from app.services.algebra import TEST_FAMILIES


@pytest.fixture(params=TEST_FAMILIES, ids=str)
def family_f(request) -> NonlinearityFn:
    """Each nonlinearity of the named test set."""
    return request.param


@pytest.fixture
def identity_f() -> NonlinearityFn:
    """f(n) = 1."""
    return NonlinearityFn(family="identity")


@pytest.fixture
def inverse_sqrt_f() -> NonlinearityFn:
    """f(n) = 1 / sqrt(n)."""
    return NonlinearityFn(family="inverse_sqrt")


@pytest.fixture
def coherent_atom() -> AtomPreparation:
    """Coherently prepared atom used by the recursion cross-checks."""
    return AtomPreparation(rho_aa=0.6, rho_bb=0.4, coh_mag=math.sqrt(0.24), phi=0.7)


@pytest.fixture
def balanced_atom() -> AtomPreparation:
    """Equal superposition with phi = 0."""
    return AtomPreparation.polarized(0.5)


@pytest.fixture
def unpolarized_atom() -> AtomPreparation:
    """Atom without coherence."""
    return AtomPreparation(rho_aa=0.5, rho_bb=0.5)


@pytest.fixture
def vacuum() -> FieldState:
    """Vacuum field at cutoff 32."""
    return FieldState.fock(0, 32)


@pytest.fixture
def thermal_like() -> FieldState:
    """Diagonal mixed field at cutoff 32."""
    populations = np.zeros(33)
    populations[:6] = [0.4, 0.25, 0.15, 0.1, 0.06, 0.04]
    return FieldState(cutoff=32, rho=np.diag(populations))


@pytest.fixture
def output_dir(tmp_path):
    """Temporary directory for result files."""
    directory = tmp_path / "results"
    directory.mkdir()
    return directory
