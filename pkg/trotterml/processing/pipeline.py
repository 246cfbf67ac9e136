"""Observation pipeline: simulates and reads out one (initial state, time point) job."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from trotterml.core.errors import DegeneratePostSelectionError
from trotterml.core.seeding import derive_seed
from trotterml.simulation.circuits import (
    SpinModel,
    Stage,
    TrotterSchedule,
    build_circuit,
    preparation,
)
from trotterml.simulation.qsim import (
    Axis,
    DensityMatrix,
    NoiseModel,
    basis_state,
    expectation_from_counts,
    expectation_from_probabilities,
    measurement_probabilities,
    prerotation,
    run_circuit,
    sample_counts,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObservationJob:
    """Everything a worker needs to produce the records of one (l, t_i) point.

    ``shots`` is None in exact-expectation mode.
    """

    model: SpinModel
    schedule: TrotterSchedule
    stage: Stage
    noise: NoiseModel
    init_state: str
    time_index: int
    time: float
    axes: tuple[Axis, ...]
    shots: int | None
    master_seed: int
    post_select: bool = False
    target_excitations: int | None = None

    @property
    def key(self) -> tuple[str, int]:
        return (self.init_state, self.time_index)

    @property
    def target(self) -> int:
        if self.target_excitations is not None:
            return self.target_excitations
        return self.init_state.count("1")


def evolve(job: ObservationJob) -> DensityMatrix:
    """Prepare the initial state and run the stage circuit, all under the job's noise."""
    n = job.model.num_spins
    circuit = build_circuit(job.model, job.schedule, job.time, job.stage)
    gates = preparation(job.init_state) + circuit
    return run_circuit(basis_state(n, "0" * n), gates, job.noise)


def _exact_values(job: ObservationJob, rotated: DensityMatrix, filtered: bool) -> list[float]:
    from trotterml.processing.datasets import post_select_probabilities

    n = job.model.num_spins
    probs = measurement_probabilities(rotated, job.noise)
    if filtered:
        try:
            probs = post_select_probabilities(probs, n, job.target)
        except DegeneratePostSelectionError:
            logger.warning("Post-selection emptied %s, using unfiltered distribution", job.key)
    return [expectation_from_probabilities(probs, q, n) for q in range(n)]


def observe(job: ObservationJob) -> list[dict]:
    """Simulate one job and return its records as plain dicts, ordered by (axis, qubit).

    Shot mode draws one histogram per (axis, qubit) with the seed
    derive_seed(master, l, i, k, j, stage); the circuit itself is simulated
    once and pre-rotated once per axis.
    """
    from trotterml.processing.datasets import post_select

    n = job.model.num_spins
    rho = evolve(job)
    base = {
        "model": job.model.kind.value,
        "N1": job.schedule.N1,
        "c": job.schedule.c,
        "layout": job.schedule.layout.value,
        "role": job.stage.value,
        "init_state": job.init_state,
        "time_index": job.time_index,
        "time": job.time,
    }
    records: list[dict] = []
    for axis in job.axes:
        # Excitation number is a z-basis quantity; x and y shots stay unfiltered.
        filtered = job.post_select and axis is Axis.Z
        rotated = run_circuit(rho, prerotation(axis, range(n)), job.noise)
        if job.shots is None:
            for q, value in enumerate(_exact_values(job, rotated, filtered)):
                records.append({**base, "axis": axis.value, "qubit": q, "value": value,
                                "shots": None, "seed": None})
            continue
        for q in range(n):
            seed = derive_seed(job.master_seed, job.init_state, job.time_index, axis.value, q,
                               job.stage.value)
            hist = sample_counts(rotated, job.shots, job.noise, seed)
            if filtered:
                try:
                    hist = post_select(hist, job.target)
                except DegeneratePostSelectionError:
                    logger.warning(
                        "Post-selection left no shots for %s on %s%d, keeping raw counts",
                        job.key, axis.value, q,
                    )
            value = expectation_from_counts(hist, axis, q, prerotated=True)
            records.append({**base, "axis": axis.value, "qubit": q, "value": value,
                            "shots": hist.shots, "seed": seed})
    return records
