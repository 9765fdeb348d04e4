"""
Experiment orchestration service.

This module loads experiment documents, expands sweeps into pumping runs,
executes them and writes the per-run CSV files, final-state CSV files and the
summary JSON.
"""

import csv
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TextIO

import numpy as np
from pydantic import ValidationError

from app.config import settings
from app.exceptions import ConfigError
from app.schemas.experiment import (
    ExperimentConfig,
    ExperimentSummary,
    OutputPaths,
    RunSummary,
    TargetSpec,
)
from app.schemas.pumping import PumpConfig, RunRecord
from app.schemas.states import FieldState, PureState, StateFamily
from app.services.analysis import observables
from app.services.approx import dominance_margin, weak_coupling_check
from app.services.engine import drive_z, minimum_eigenvalue, run_pumping, target_z
from app.services.states import build_state, expected_target

logger = logging.getLogger(__name__)

RUN_COLUMNS = list(RunRecord.model_fields)


def load_experiment(path: str | Path) -> ExperimentConfig:
    """
    Read and validate an experiment document.

    Args:
        path: JSON file

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: If the file cannot be read or violates an invariant
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}: {e}") from e


def expand_sweep(config: ExperimentConfig) -> list[PumpConfig]:
    """
    Pump configurations of every sweep point, in a fixed order.

    Raises:
        ConfigError: If a sweep point is itself invalid
    """
    sweep = config.sweep
    base = config.pump.model_dump()
    axes = {
        name: values
        for name, values in (
            ("g_tau", sweep.g_tau),
            ("num_atoms", sweep.num_atoms),
            ("f", sweep.f),
            ("kind", sweep.kind),
        )
        if values is not None
    }
    points = []
    for combination in itertools.product(*axes.values()):
        update = dict(zip(axes, combination, strict=True))
        if "f" in update:
            update["f"] = update["f"].model_dump()
        try:
            points.append(PumpConfig.model_validate({**base, **update}))
        except ValidationError as e:
            raise ConfigError(f"invalid sweep point {update}: {e}") from e
    return points


def resolve_target(pump: PumpConfig, spec: TargetSpec) -> StateFamily:
    """
    Fill in the target family, nonlinearity and amplitude of one run.

    Raises:
        ConfigError: If a two-photon run starts without definite parity and
            no target family is named
    """
    tag = spec.tag
    if tag is None:
        parity = pump.initial.parity
        if pump.kind.step == 2 and parity is None:
            raise ConfigError("initial field has no definite parity; name the target family")
        tag = expected_target(pump.kind, parity or 0)
    f = spec.f if spec.f is not None else pump.f
    z = spec.z if spec.z is not None else drive_z(pump)
    return StateFamily(tag=tag, f=f, z=z)


def _format(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def write_run_csv(path: Path, records: list[RunRecord]) -> None:
    """Per-atom records, one row per k."""
    digits = settings.csv_significant_digits
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=RUN_COLUMNS)
        writer.writeheader()
        for record in records:
            row = {}
            for name, value in record.model_dump().items():
                if value is None:
                    row[name] = ""
                elif isinstance(value, float):
                    row[name] = _format(value, digits)
                else:
                    row[name] = value
            writer.writerow(row)


def write_state_rows(handle: TextIO, amplitudes: np.ndarray, populations: np.ndarray) -> None:
    """
    Rows n, re, im, probability.

    Args:
        handle: Open text stream
        amplitudes: Complex amplitudes (or the diagonal of a density matrix)
        populations: Occupation probabilities
    """
    digits = settings.csv_significant_digits
    writer = csv.writer(handle)
    writer.writerow(["n", "re", "im", "probability"])
    for n, (amp, prob) in enumerate(zip(amplitudes, populations, strict=True)):
        writer.writerow(
            [n, _format(amp.real, digits), _format(amp.imag, digits), _format(prob, digits)]
        )


def write_state_csv(path: Path, amplitudes: np.ndarray, populations: np.ndarray) -> None:
    """State CSV file, see write_state_rows."""
    with path.open("w", newline="", encoding="utf-8") as handle:
        write_state_rows(handle, amplitudes, populations)


def write_pure_state_csv(path: Path, state: PureState) -> None:
    """State CSV of a pure state."""
    write_state_csv(path, state.amps, np.abs(state.amps) ** 2)


def write_field_state_csv(path: Path, state: FieldState) -> None:
    """State CSV of a density matrix: diagonal elements and populations."""
    diagonal = np.diag(state.rho)
    write_state_csv(path, diagonal, np.real(diagonal))


def run_point(
    index: int, pump: PumpConfig, spec: TargetSpec, output: OutputPaths
) -> tuple[RunSummary, list[RunRecord], FieldState]:
    """
    Execute one sweep point.

    Args:
        index: Position in the sweep
        pump: Pumping configuration
        spec: Target description
        output: Output layout (only file names are used here)

    Returns:
        Tuple of (summary, per-atom records, final field)
    """
    family = resolve_target(pump, spec)
    target = build_state(family, pump.cutoff)
    state, records = run_pumping(pump, target)
    obs = observables(state)

    nbar = obs.mean_n
    report = weak_coupling_check(pump, nbar)
    margin, passed = None, None
    if pump.atom.rho_bb > 0 and pump.num_atoms >= 1:
        n = int(round(nbar))
        margin = dominance_margin(n, n, pump.atom.rho_bb, pump.num_atoms)
        passed = margin < settings.dominance_threshold
    if not report.passed:
        logger.warning("Run %d is outside the weak-coupling regime", index)

    summary = RunSummary(
        index=index,
        kind=pump.kind,
        f=str(pump.f),
        g_tau=pump.g_tau,
        num_atoms=pump.num_atoms,
        target_tag=family.tag,
        target_z=target_z(pump),
        drive_z=drive_z(pump),
        final_fidelity=records[-1].fidelity_target,
        trace=state.trace,
        leakage=state.leakage,
        min_eigenvalue=minimum_eigenvalue(state),
        observables=obs,
        weak_coupling=report,
        dominance_margin=margin,
        dominance_passed=passed,
        runs_csv=output.runs_csv.format(index=index),
        state_csv=output.state_csv.format(index=index),
    )
    return summary, records, state


def run_experiment(
    config: ExperimentConfig, out_dir: str | Path | None = None, workers: int | None = None
) -> ExperimentSummary:
    """
    Run every sweep point and write the result files.

    Points may run in parallel; files are written afterwards in sweep order.

    Args:
        config: Experiment document
        out_dir: Output directory (overrides the document)
        workers: Parallel workers (defaults to settings)

    Returns:
        ExperimentSummary
    """
    output = config.output
    directory = Path(out_dir) if out_dir is not None else output.directory
    directory.mkdir(parents=True, exist_ok=True)
    points = expand_sweep(config)
    workers = settings.workers if workers is None else workers
    logger.info("Running %d sweep point(s) with %d worker(s)", len(points), workers)

    def task(item: tuple[int, PumpConfig]):
        index, pump = item
        return run_point(index, pump, config.target, output)

    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(task, enumerate(points)))
    else:
        results = [task(item) for item in enumerate(points)]

    summaries = []
    for summary, records, state in results:
        write_run_csv(directory / summary.runs_csv, records)
        write_field_state_csv(directory / summary.state_csv, state)
        summaries.append(summary)

    experiment = ExperimentSummary(runs=summaries)
    summary_path = directory / output.summary_json
    summary_path.write_text(experiment.model_dump_json(indent=2), encoding="utf-8")
    logger.info("Wrote summary to %s", summary_path)
    return experiment
