"""
Field-state schemas.

This module defines the analytic target-state families, truncated pure states
and truncated cavity-field density matrices.
"""

from enum import Enum
from typing import Annotated

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    field_validator,
    model_validator,
)

from app.schemas.algebra import NonlinearityFn


def _parse_complex(value) -> complex:
    """Accept numbers, ``[re, im]`` pairs and strings such as ``"0.3-0.1j"``."""
    if isinstance(value, complex | float | int) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list | tuple) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        return complex(float(value["re"]), float(value["im"]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as e:
            raise ValueError(f"cannot parse complex number {value!r}") from e
    raise ValueError(f"cannot parse complex number {value!r}")


ComplexValue = Annotated[
    complex,
    PlainValidator(_parse_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=list),
]


class StateFamilyTag(str, Enum):
    """The six nonlinear-coherent-state families."""

    NLCS = "nlcs"
    NLCS_DUAL = "nlcs_dual"
    SQ_VAC = "sq_vac"
    SQ_FIRST = "sq_first"
    EVEN_NLCS = "even_nlcs"
    ODD_NLCS = "odd_nlcs"

    @property
    def step(self) -> int:
        """Photon step of the Hamiltonian that generates the family."""
        return 1 if self in (StateFamilyTag.NLCS, StateFamilyTag.NLCS_DUAL) else 2

    @property
    def parity(self) -> int | None:
        """Fock-parity sector the family lives on (None for both)."""
        if self in (StateFamilyTag.SQ_VAC, StateFamilyTag.EVEN_NLCS):
            return 0
        if self in (StateFamilyTag.SQ_FIRST, StateFamilyTag.ODD_NLCS):
            return 1
        return None


class StateFamily(BaseModel):
    """Analytic target state: family tag, nonlinearity and eigenvalue z."""

    model_config = ConfigDict(frozen=True)

    tag: StateFamilyTag
    f: NonlinearityFn
    z: ComplexValue = 0j


class PureState(BaseModel):
    """
    Truncated state vector.

    Attributes:
        cutoff: Largest Fock index represented
        amps: Complex amplitudes c_n, n = 0..cutoff
        tail_bound: Upper bound on the squared norm of the dropped remainder
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cutoff: int = Field(..., ge=0)
    amps: np.ndarray
    tail_bound: float = Field(default=0.0, ge=0.0)

    @field_validator("amps", mode="before")
    @classmethod
    def freeze_amps(cls, value) -> np.ndarray:
        """Store amplitudes as a read-only complex array."""
        amps = np.array(value, dtype=complex)
        amps.setflags(write=False)
        return amps

    @model_validator(mode="after")
    def check_shape(self) -> "PureState":
        """Amplitude vector length must match the cutoff."""
        if self.amps.shape != (self.cutoff + 1,):
            raise ValueError(
                f"expected {self.cutoff + 1} amplitudes, got shape {self.amps.shape}"
            )
        return self

    @classmethod
    def fock(cls, n: int, cutoff: int) -> "PureState":
        """Number state |n> on 0..cutoff."""
        if not 0 <= n <= cutoff:
            raise ValueError(f"Fock index {n} outside 0..{cutoff}")
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[n] = 1.0
        return cls(cutoff=cutoff, amps=amps)

    @property
    def norm(self) -> float:
        """Euclidean norm of the amplitude vector."""
        return float(np.linalg.norm(self.amps))

    def padded(self, cutoff: int) -> np.ndarray:
        """Amplitudes zero-padded (or cut) to 0..cutoff."""
        out = np.zeros(cutoff + 1, dtype=complex)
        size = min(cutoff, self.cutoff) + 1
        out[:size] = self.amps[:size]
        return out


class FieldState(BaseModel):
    """
    Truncated cavity-field density matrix.

    Attributes:
        cutoff: Largest Fock index represented
        rho: (cutoff + 1) x (cutoff + 1) complex density matrix
        leakage: Cumulative probability transferred past the cutoff
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cutoff: int = Field(..., ge=0)
    rho: np.ndarray
    leakage: float = Field(default=0.0, ge=0.0)

    @field_validator("rho", mode="before")
    @classmethod
    def freeze_rho(cls, value) -> np.ndarray:
        """Store the matrix as a read-only complex array."""
        rho = np.array(value, dtype=complex)
        rho.setflags(write=False)
        return rho

    @model_validator(mode="after")
    def check_shape(self) -> "FieldState":
        """Matrix must be square and match the cutoff."""
        dim = self.cutoff + 1
        if self.rho.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got shape {self.rho.shape}")
        return self

    @classmethod
    def from_pure(cls, state: PureState, cutoff: int | None = None) -> "FieldState":
        """Projector onto a (normalized) pure state."""
        cutoff = state.cutoff if cutoff is None else cutoff
        psi = state.padded(cutoff)
        psi = psi / np.linalg.norm(psi)
        return cls(cutoff=cutoff, rho=np.outer(psi, psi.conj()))

    @classmethod
    def fock(cls, n: int, cutoff: int) -> "FieldState":
        """Number-state projector |n><n|."""
        return cls.from_pure(PureState.fock(n, cutoff))

    @property
    def trace(self) -> float:
        """Real part of the trace."""
        return float(np.real(np.trace(self.rho)))

    @property
    def hermiticity_deviation(self) -> float:
        """Largest elementwise |rho - rho^dagger|."""
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))
