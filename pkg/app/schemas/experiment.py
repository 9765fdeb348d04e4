"""
Experiment-document schemas.

This module defines the JSON experiment document read by the ``run`` command
and the summary it writes back.
"""

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import settings
from app.schemas.algebra import LadderKind, NonlinearityFn
from app.schemas.analysis import ObservableSet, WeakCouplingReport
from app.schemas.pumping import PumpConfig
from app.schemas.states import ComplexValue, StateFamilyTag


class TargetSpec(BaseModel):
    """
    Analytic state a run is compared with.

    Missing fields are inferred per sweep point: the family from the pumping
    kind and the parity of the initial field, f from the pump, and z from the
    drive amplitude.
    """

    model_config = ConfigDict(frozen=True)

    tag: StateFamilyTag | None = None
    f: NonlinearityFn | None = None
    z: ComplexValue | None = None


class SweepAxes(BaseModel):
    """Lists of values replacing the matching pump fields; runs span their product."""

    model_config = ConfigDict(frozen=True)

    g_tau: list[float] | None = Field(default=None, min_length=1)
    num_atoms: list[int] | None = Field(default=None, min_length=1)
    f: list[NonlinearityFn] | None = Field(default=None, min_length=1)
    kind: list[LadderKind] | None = Field(default=None, min_length=1)

    @property
    def size(self) -> int:
        """Number of points in the cross product."""
        size = 1
        for axis in (self.g_tau, self.num_atoms, self.f, self.kind):
            if axis is not None:
                size *= len(axis)
        return size


class OutputPaths(BaseModel):
    """Where a run writes its files."""

    directory: Path = Path("results")
    runs_csv: str = "run_{index:04d}.csv"
    state_csv: str = "state_{index:04d}.csv"
    summary_json: str = "summary.json"


class ExperimentConfig(BaseModel):
    """
    One experiment document.

    Attributes:
        pump: Base pumping configuration
        target: Target state to track (inferred when omitted)
        output: Output file layout
        sweep: Optional sweep axes over g_tau, K, f and kind
    """

    pump: PumpConfig
    target: TargetSpec = Field(default_factory=TargetSpec)
    output: OutputPaths = Field(default_factory=OutputPaths)
    sweep: SweepAxes = Field(default_factory=SweepAxes)

    @model_validator(mode="after")
    def check_sweep(self) -> "ExperimentConfig":
        """Bound the sweep size and match target and Hamiltonian steps."""
        if self.sweep.size > settings.max_sweep_runs:
            raise ValueError(
                f"sweep has {self.sweep.size} runs, more than {settings.max_sweep_runs}"
            )
        if self.target.tag is not None:
            kinds = self.sweep.kind or [self.pump.kind]
            for kind in kinds:
                if kind.step != self.target.tag.step:
                    raise ValueError(
                        f"target {self.target.tag.value} has step {self.target.tag.step} "
                        f"but kind {kind.value} has step {kind.step}"
                    )
        return self


class RunSummary(BaseModel):
    """Summary of one sweep point."""

    index: int
    kind: LadderKind
    f: str
    g_tau: float
    num_atoms: int
    target_tag: StateFamilyTag
    target_z: ComplexValue
    drive_z: ComplexValue
    final_fidelity: float
    trace: float
    leakage: float
    min_eigenvalue: float
    observables: ObservableSet
    weak_coupling: WeakCouplingReport
    dominance_margin: float | None = None
    dominance_passed: bool | None = None
    runs_csv: str
    state_csv: str


class ExperimentSummary(BaseModel):
    """Summary JSON written by the run command."""

    runs: list[RunSummary]
