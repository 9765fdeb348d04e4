"""
Nonlinearity-function and ladder-operator schemas.

This module defines the deformation function f(n) and the five deformed
ladder-operator kinds built from it.
"""

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.exceptions import InvalidNonlinearityError


class NonlinearityFamily(str, Enum):
    """Named families of f(n)."""

    IDENTITY = "identity"
    POWER = "power"
    INVERSE_SQRT = "inverse_sqrt"
    TABLE = "table"


class NonlinearityFn(BaseModel):
    """
    Deformation function f(n) on the non-negative integers.

    Accepts either a mapping ``{"family": ..., "params": [...]}`` or one of the
    strings ``identity``, ``inverse_sqrt``, ``power:<p>``,
    ``table:<v0>,<v1>,...``.
    """

    model_config = ConfigDict(frozen=True)

    family: NonlinearityFamily
    params: tuple[float, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def parse_string(cls, data):
        """Expand the string form used in experiment documents."""
        if not isinstance(data, str):
            return data

        name, _, rest = data.strip().partition(":")
        name = name.strip().lower()
        if name in ("identity", "inverse_sqrt"):
            if rest.strip():
                raise ValueError(f"'{name}' takes no parameters")
            return {"family": name, "params": ()}
        if name in ("power", "table"):
            try:
                values = tuple(float(token) for token in rest.split(",") if token.strip())
            except ValueError as e:
                raise ValueError(f"malformed parameters in '{data}'") from e
            return {"family": name, "params": values}

        raise ValueError(f"unknown nonlinearity family '{name}'")

    @model_validator(mode="after")
    def check_params(self) -> "NonlinearityFn":
        """Enforce parameter counts and the nonzero-table invariant."""
        if self.family in (NonlinearityFamily.IDENTITY, NonlinearityFamily.INVERSE_SQRT):
            if self.params:
                raise ValueError(f"'{self.family.value}' takes no parameters")
        elif self.family == NonlinearityFamily.POWER:
            if len(self.params) != 1 or not math.isfinite(self.params[0]):
                raise ValueError("power family needs exactly one finite exponent")
        else:
            if not self.params:
                raise ValueError("table family needs at least one value")
            for n, value in enumerate(self.params):
                if not math.isfinite(value):
                    raise ValueError(f"table entry f({n}) is not finite")
                if value == 0.0:
                    raise ValueError(f"table entry f({n}) is zero")
        return self

    @property
    def is_tabulated(self) -> bool:
        """True when f is only known on a finite table."""
        return self.family == NonlinearityFamily.TABLE

    def __str__(self) -> str:
        if self.family == NonlinearityFamily.POWER:
            return f"power:{self.params[0]:g}"
        if self.family == NonlinearityFamily.TABLE:
            return "table:" + ",".join(f"{v:g}" for v in self.params)
        return self.family.value


def parse_nonlinearity(text: "str | dict | NonlinearityFn") -> NonlinearityFn:
    """
    Parse a nonlinearity given as a string, mapping or model.

    Args:
        text: String form, mapping, or an existing NonlinearityFn

    Returns:
        Validated NonlinearityFn

    Raises:
        InvalidNonlinearityError: If the description is malformed or a
            table contains a zero entry
    """
    if isinstance(text, NonlinearityFn):
        return text
    try:
        return NonlinearityFn.model_validate(text)
    except ValueError as e:
        raise InvalidNonlinearityError(f"invalid nonlinearity {text!r}: {e}") from e


class LadderKind(str, Enum):
    """Deformed lowering operators: A = a f, B = a / f, C = a^2 f and the sector duals."""

    A = "A"
    B = "B"
    C = "C"
    B0 = "B0"
    B1 = "B1"

    @property
    def step(self) -> int:
        """Number of photons removed by one application."""
        return 1 if self in (LadderKind.A, LadderKind.B) else 2


class DeformedLadder(BaseModel):
    """
    Step-s lowering operator L|n> = sqrt(lambda(n)) |n - s> on a truncated space.

    Attributes:
        kind: Operator family
        f: Nonlinearity the strengths are built from
        cutoff: Largest Fock index represented
        strengths: lambda(n) for n = 0..len(strengths) - 1 (at least cutoff + 1)
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: LadderKind
    f: NonlinearityFn
    cutoff: int = Field(..., ge=0)
    strengths: np.ndarray

    @field_validator("strengths", mode="before")
    @classmethod
    def freeze_strengths(cls, value) -> np.ndarray:
        """Store the table as a read-only float array."""
        table = np.array(value, dtype=float)
        table.setflags(write=False)
        return table

    @model_validator(mode="after")
    def check_strengths(self) -> "DeformedLadder":
        """Strength table must cover the cutoff and vanish below the step."""
        table = self.strengths
        if table.ndim != 1 or table.size < self.cutoff + 1:
            raise ValueError("strength table must cover 0..cutoff")
        if np.any(table[: self.kind.step] != 0.0):
            raise ValueError("strengths below the step must vanish")
        if np.any(table < 0.0):
            raise ValueError("strengths must be non-negative")
        return self

    @property
    def step(self) -> int:
        """Number of photons removed by one application."""
        return self.kind.step
