"""
Pumping-run schemas.

This module defines the atomic preparation, the pumping configuration and the
per-atom run records.
"""

import cmath
import math
from enum import Enum

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, model_validator

from app.schemas.algebra import LadderKind, NonlinearityFn
from app.schemas.states import ComplexValue, StateFamily

PREPARATION_TOLERANCE = 1e-14


class AtomPreparation(BaseModel):
    """
    Density matrix of every injected atom.

    Attributes:
        rho_aa: Upper-level population
        rho_bb: Lower-level population
        coh_mag: Magnitude of the coherence rho_ab
        phi: Phase of rho_ab = coh_mag * exp(i phi)
    """

    model_config = ConfigDict(frozen=True)

    rho_aa: float = Field(..., ge=0.0)
    rho_bb: float = Field(..., ge=0.0)
    coh_mag: float = Field(default=0.0, ge=0.0)
    phi: float = 0.0

    @model_validator(mode="after")
    def check_density_matrix(self) -> "AtomPreparation":
        """Populations sum to one and the coherence obeys the positivity bound."""
        if abs(self.rho_aa + self.rho_bb - 1.0) > PREPARATION_TOLERANCE:
            raise ValueError("rho_aa + rho_bb must equal 1")
        if self.coh_mag > math.sqrt(self.rho_aa * self.rho_bb) + PREPARATION_TOLERANCE:
            raise ValueError("coh_mag must not exceed sqrt(rho_aa * rho_bb)")
        return self

    @classmethod
    def polarized(cls, rho_aa: float, phi: float = 0.0) -> "AtomPreparation":
        """Pure superposition with maximal coherence sqrt(rho_aa * rho_bb)."""
        rho_bb = 1.0 - rho_aa
        return cls(
            rho_aa=rho_aa, rho_bb=rho_bb, coh_mag=math.sqrt(rho_aa * rho_bb), phi=phi
        )

    @property
    def rho_ab(self) -> complex:
        """Coefficient of |a><b|."""
        return self.coh_mag * cmath.exp(1j * self.phi)

    @property
    def rho_ba(self) -> complex:
        """Coefficient of |b><a|."""
        return self.rho_ab.conjugate()


class EvolutionMethod(str, Enum):
    """How a pumping run advances the field."""

    RECURSION = "recursion"
    UNITARY = "unitary"
    BOTH = "both"


class InitialField(BaseModel):
    """
    Initial cavity field: a Fock state, explicit amplitudes, or an analytic family.

    Exactly one of ``fock``, ``amplitudes`` or ``family`` may be given; with
    none the field starts in the vacuum.
    """

    model_config = ConfigDict(frozen=True)

    fock: int | None = Field(default=None, ge=0)
    amplitudes: tuple[ComplexValue, ...] | None = None
    family: StateFamily | None = None

    @model_validator(mode="after")
    def check_single_source(self) -> "InitialField":
        """At most one description of the initial field."""
        given = [v for v in (self.fock, self.amplitudes, self.family) if v is not None]
        if len(given) > 1:
            raise ValueError("give only one of fock, amplitudes, family")
        return self

    @property
    def parity(self) -> int | None:
        """Fock parity of the initial state when it has a definite one."""
        if self.family is not None:
            return self.family.tag.parity
        if self.amplitudes is not None:
            support = [n for n, c in enumerate(self.amplitudes) if c != 0]
            parities = {n % 2 for n in support}
            return parities.pop() if len(parities) == 1 else None
        return (self.fock or 0) % 2


class PumpConfig(BaseModel):
    """
    One micromaser pumping run.

    Attributes:
        kind: Ladder operator in the interaction Hamiltonian
        f: Nonlinearity function
        g_tau: Rabi angle g*tau of one atom
        num_atoms: Number K of injected atoms
        atom: Preparation of every atom
        initial: Initial cavity field
        cutoff: Largest Fock index kept
        free_phase: omega * delta_t between atoms (modulo 2 pi)
        method: Evolution path
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    kind: LadderKind = LadderKind.A
    f: NonlinearityFn = Field(default_factory=lambda: NonlinearityFn(family="identity"))
    g_tau: float = Field(..., ge=0.0)
    num_atoms: int = Field(..., ge=0, validation_alias=AliasChoices("num_atoms", "K"))
    atom: AtomPreparation
    initial: InitialField = Field(default_factory=InitialField)
    cutoff: int = Field(default=32, ge=0)
    free_phase: float = 0.0
    method: EvolutionMethod = EvolutionMethod.RECURSION

    @model_validator(mode="after")
    def check_cutoff(self) -> "PumpConfig":
        """Cutoff must leave an interior block beyond two steps."""
        minimum = 2 * self.kind.step + 4
        if self.cutoff < minimum:
            raise ValueError(f"cutoff must be at least {minimum} for kind {self.kind.value}")
        return self


class RunRecord(BaseModel):
    """Observables recorded after each injected atom."""

    k: int
    trace: float
    leakage: float
    purity: float
    mean_n: float
    var_n: float
    mandel_q: float
    max_offdiag: float
    fidelity_target: float | None = None
