"""Dataset roles: generation, post-selection, training pairs and reference datasets."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from trotterml.core.errors import (
    AlignmentError,
    DataError,
    DegeneratePostSelectionError,
    InvalidArgumentError,
)
from trotterml.core.seeding import derive_seed, make_rng
from trotterml.processing.pipeline import ObservationJob
from trotterml.processing.worker_pool import WorkerPool, WorkerResult
from trotterml.schemas.models import (
    DatasetHeader,
    ObservationRecord,
    Role,
    RunConfig,
    lineage_hash,
    model_section,
    noise_section,
    schedule_section,
)
from trotterml.simulation.circuits import ModelKind, SpinModel, Stage, TrotterSchedule, time_grid
from trotterml.simulation.qsim import Axis, NoiseModel, ShotHistogram
from trotterml.simulation.reference import exact_expectations, ideal_trotter_expectations

logger = logging.getLogger(__name__)

RecordKey = tuple[str, int, Axis, int]


@dataclass(eq=False)
class ObservationDataset:
    """Header plus records; (init_state, time_index, axis, qubit) is unique."""

    header: DatasetHeader
    records: list[ObservationRecord]
    _index: dict[RecordKey, float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        index: dict[RecordKey, float] = {}
        for record in self.records:
            if record.key in index:
                raise DataError(f"duplicate record {record.key} in {self.header.role} dataset")
            if record.role is not self.header.role:
                raise DataError(f"record role {record.role} in a {self.header.role} dataset")
            index[record.key] = record.value
        self._index = index

    def __len__(self) -> int:
        return len(self.records)

    @property
    def role(self) -> Role:
        return self.header.role

    @property
    def num_spins(self) -> int:
        return self.header.model.Nq

    @property
    def axes(self) -> list[Axis]:
        return list(self.header.axes)

    @property
    def init_states(self) -> list[str]:
        return list(self.header.init_states)

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.header.time_grid)

    def keys(self) -> set[RecordKey]:
        return set(self._index)

    def value(self, init: str, time_index: int, axis: Axis | str, qubit: int) -> float:
        key = (init, time_index, Axis(axis), qubit)
        try:
            return self._index[key]
        except KeyError:
            raise AlignmentError(f"{self.role} dataset lacks a record", [key]) from None

    def values(self, init: str, axis: Axis | str) -> np.ndarray:
        """(K, Nq) array of one initial state's values on one axis."""
        axis = Axis(axis)
        k = len(self.header.time_grid)
        missing = [
            (init, i, axis, q)
            for i in range(1, k + 1)
            for q in range(self.num_spins)
            if (init, i, axis, q) not in self._index
        ]
        if missing:
            raise AlignmentError(f"{self.role} dataset does not cover {init} on {axis}", missing)
        return np.array(
            [
                [self._index[(init, i, axis, q)] for q in range(self.num_spins)]
                for i in range(1, k + 1)
            ]
        )


def expected_size(num_spins: int, num_states: int, num_times: int, num_axes: int) -> int:
    """D = (number of initial states) * Nq * K * B."""
    return num_states * num_spins * num_times * num_axes


def full_basis(num_spins: int) -> list[str]:
    return [format(i, f"0{num_spins}b") for i in range(2**num_spins)]


def select_init_states(config: RunConfig) -> list[str]:
    """Explicit list, else a seeded random subset of size init_sample, else the full basis."""
    sampling = config.sampling
    if sampling.init_states:
        return list(dict.fromkeys(sampling.init_states))
    basis = full_basis(config.model.Nq)
    if sampling.init_sample is None:
        return basis
    rng = make_rng(config.seeds.master, "init_sample")
    chosen = rng.choice(len(basis), size=sampling.init_sample, replace=False)
    return [basis[i] for i in sorted(chosen)]


# ── Post-selection ────────────────────────────────────────────────────────────


def _check_target(target: int, num_qubits: int) -> None:
    if not 0 <= target <= num_qubits:
        raise InvalidArgumentError(f"target excitations {target} outside [0, {num_qubits}]")


def post_select(h: ShotHistogram, target_excitations: int) -> ShotHistogram:
    """Keep only bitstrings with ``target_excitations`` ones; shots shrink to the kept total."""
    _check_target(target_excitations, h.num_qubits)
    kept = {bits: c for bits, c in h.counts.items() if bits.count("1") == target_excitations}
    total = sum(kept.values())
    if total == 0:
        raise DegeneratePostSelectionError(
            f"no shot of {h.shots} has {target_excitations} excitations"
        )
    return ShotHistogram(counts=kept, shots=total, num_qubits=h.num_qubits)


def post_select_probabilities(
    probs: np.ndarray, num_qubits: int, target_excitations: int
) -> np.ndarray:
    """Exact-mode post-selection: zero the wrong-popcount outcomes and renormalize."""
    _check_target(target_excitations, num_qubits)
    popcount = np.array([bin(i).count("1") for i in range(probs.size)])
    kept = np.where(popcount == target_excitations, probs, 0.0)
    total = kept.sum()
    if total <= 0.0:
        raise DegeneratePostSelectionError(f"no outcome with {target_excitations} excitations")
    return kept / total


# ── Generation ────────────────────────────────────────────────────────────────


def _default_axes(model: SpinModel) -> list[Axis]:
    return [Axis.X, Axis.Y, Axis.Z] if model.kind is ModelKind.TFIM else [Axis.Z]


def generate(
    model: SpinModel,
    schedule: TrotterSchedule,
    stage: Stage | str,
    noise: NoiseModel,
    shots: int | None,
    init_states: Sequence[str],
    seed: int,
    *,
    axes: Sequence[Axis | str] | None = None,
    post_select_enabled: bool = False,
    target_excitations: int | None = None,
    config_hash: str = "",
    workers: int | None = None,
) -> ObservationDataset:
    """Simulate every (l, t_i, k, j) of one stage and collect the estimates.

    Args:
        model: Chain to simulate.
        schedule: Trotter schedule; fixes the time grid and the stage circuits.
        stage: Which of the three circuit stages to run.
        noise: Gate and readout noise applied throughout.
        shots: Shots per (axis, qubit) histogram. None selects exact-expectation
               mode, where readout confusion and post-selection act on the
               outcome distribution instead of samples.
        init_states: Computational-basis labels, one job per label and time.
        seed: Master seed; every histogram derives its own seed from it.
        axes: Measurement bases (default x,y,z for tfim, z for xy).
        post_select_enabled: Keep only z-basis outcomes with the target
                             excitation number. x and y records are never filtered.
        target_excitations: Excitation number to keep (default: popcount of the
                            initial state).
        config_hash: Stamped on the dataset header.
        workers: Pool size (default from settings).

    Returns:
        The dataset, records ordered by (state, time, axis, qubit).
    """
    stage = Stage(stage)
    init_states = list(init_states)
    if not init_states:
        raise InvalidArgumentError("init_states must not be empty")
    n = model.num_spins
    for label in init_states:
        if len(label) != n or set(label) - {"0", "1"}:
            raise InvalidArgumentError(f"{label!r} is not a {n}-spin basis label")
    if shots is not None and shots <= 0:
        raise InvalidArgumentError(f"shots must be positive, got {shots}")
    axes = [Axis(a) for a in axes] if axes else _default_axes(model)
    if post_select_enabled and set(axes) - {Axis.Z}:
        logger.warning("Post-selection applies to z records only; x/y records stay unfiltered")
    grid = time_grid(schedule)
    jobs = [
        ObservationJob(
            model=model,
            schedule=schedule,
            stage=stage,
            noise=noise,
            init_state=label,
            time_index=i,
            time=t,
            axes=tuple(axes),
            shots=shots,
            master_seed=seed,
            post_select=post_select_enabled,
            target_excitations=target_excitations,
        )
        for label in init_states
        for i, t in enumerate(grid, start=1)
    ]
    logger.info(
        "Generating %s dataset: %d states x %d times x %d axes (%s)",
        stage.value, len(init_states), len(grid), len(axes),
        "exact" if shots is None else f"{shots} shots",
    )

    done = 0

    def _progress(result: WorkerResult) -> None:
        nonlocal done
        done += 1
        if done % 100 == 0 or done == len(jobs):
            logger.debug("%s: %d/%d jobs done", stage.value, done, len(jobs))

    results = WorkerPool(workers).process_batch(jobs, on_result=_progress)
    failed = [r for r in results if not r.success]
    if failed:
        names = ", ".join(f"{r.key}: {r.error}" for r in failed[:5])
        raise DataError(f"{len(failed)} of {len(jobs)} generation jobs failed ({names})")

    # Merge in record-key order regardless of completion order.
    order = {label: pos for pos, label in enumerate(init_states)}
    results.sort(key=lambda r: (order[r.key[0]], r.key[1]))
    records = [ObservationRecord.model_validate(row) for r in results for row in r.records]

    header = DatasetHeader(
        role=Role.of_stage(stage),
        model=model_section(model),
        schedule=schedule_section(schedule),
        noise=noise_section(noise),
        shots=shots,
        exact_mode=shots is None,
        axes=axes,
        init_states=init_states,
        time_grid=grid,
        master_seed=seed,
        post_select=post_select_enabled,
        target_excitations=target_excitations,
        config_hash=config_hash,
        lineage_hash=lineage_hash(model_section(model), schedule_section(schedule)),
        record_count=len(records),
    )
    logger.info("Generated %d %s records", len(records), stage.value)
    return ObservationDataset(header=header, records=records)


def generate_from_config(
    config: RunConfig, stage: Stage | str, post_select_enabled: bool | None = None
) -> ObservationDataset:
    """``generate`` with every argument taken from a validated run config."""
    enabled = config.post_select.enabled if post_select_enabled is None else post_select_enabled
    return generate(
        config.spin_model(),
        config.trotter_schedule(),
        stage,
        config.noise_model(),
        None if config.sampling.exact_mode else config.sampling.shots,
        select_init_states(config),
        config.seeds.master,
        axes=config.axes,
        post_select_enabled=enabled,
        target_excitations=config.post_select.target_excitations,
        config_hash=config.config_hash(),
        workers=config.output.workers,
    )


def reference_dataset(
    model: SpinModel,
    schedule: TrotterSchedule,
    role: Role | str,
    init_states: Sequence[str],
    axes: Sequence[Axis | str] | None = None,
    config_hash: str = "",
) -> ObservationDataset:
    """Noise-free exact or ideal-Trotter (N = N2) values on the schedule's grid.

    Exact Y values are negated to follow the circuit convention described in
    ``trotterml.simulation.circuits``; X and Z are unaffected.
    """
    role = Role(role)
    if role not in (Role.EXACT, Role.IDEAL_TROTTER):
        raise InvalidArgumentError(f"reference role must be exact or ideal_trotter, got {role}")
    axes = [Axis(a) for a in axes] if axes else [Axis.Z]
    n = model.num_spins
    grid = time_grid(schedule)
    observables = [(axis, q) for axis in axes for q in range(n)]
    records = []
    for label in init_states:
        if role is Role.EXACT:
            table = exact_expectations(model, label, grid, observables)
        else:
            table = ideal_trotter_expectations(model, label, schedule.N2, grid, observables)
        for i, t in enumerate(grid, start=1):
            for o, (axis, q) in enumerate(observables):
                value = float(table.values[i - 1, o])
                if role is Role.EXACT and axis is Axis.Y:
                    value = -value
                records.append(
                    ObservationRecord(
                        model=model.kind,
                        N1=schedule.N1,
                        c=schedule.c,
                        layout=schedule.layout,
                        role=role,
                        init_state=label,
                        time_index=i,
                        time=t,
                        axis=axis,
                        qubit=q,
                        value=float(np.clip(value, -1.0, 1.0)),
                    )
                )
    noiseless = NoiseModel.noiseless(n)
    header = DatasetHeader(
        role=role,
        model=model_section(model),
        schedule=schedule_section(schedule),
        noise=noise_section(noiseless),
        shots=None,
        exact_mode=True,
        axes=axes,
        init_states=list(init_states),
        time_grid=grid,
        config_hash=config_hash,
        lineage_hash=lineage_hash(model_section(model), schedule_section(schedule)),
        record_count=len(records),
    )
    return ObservationDataset(header=header, records=records)


# ── Training pairs ────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class TrainingPairs:
    """Row p: inputs[p] (noisy features) -> targets[p] (z-magnetizations) for keys[p]."""

    inputs: np.ndarray
    targets: np.ndarray
    keys: tuple[tuple[str, int], ...]
    feature_axes: tuple[Axis, ...]
    num_spins: int

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.targets.ndim != 2:
            raise InvalidArgumentError("pair tables must be 2-D")
        if not (len(self.inputs) == len(self.targets) == len(self.keys)):
            raise InvalidArgumentError("inputs, targets and keys differ in length")

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def shape(self) -> tuple[int, int]:
        """(K_in, K_out)."""
        return (self.inputs.shape[1], self.targets.shape[1])

    def subset(self, rows: Iterable[int]) -> TrainingPairs:
        rows = list(rows)
        return TrainingPairs(
            inputs=self.inputs[rows],
            targets=self.targets[rows],
            keys=tuple(self.keys[r] for r in rows),
            feature_axes=self.feature_axes,
            num_spins=self.num_spins,
        )


def feature_table(
    ds: ObservationDataset, axes: Sequence[Axis] | None = None
) -> tuple[np.ndarray, list[tuple[str, int]]]:
    """One row per (l, t_i): values of axis 0 on qubits 0..n-1, then axis 1, and so on."""
    axes = list(axes) if axes is not None else ds.axes
    keys = [(label, i) for label in ds.init_states for i in range(1, len(ds.times) + 1)]
    blocks = [[ds.values(label, axis) for axis in axes] for label in ds.init_states]
    rows = [
        np.concatenate([b[i] for b in per_state])
        for per_state in blocks
        for i in range(len(ds.times))
    ]
    width = len(axes) * ds.num_spins
    return np.array(rows).reshape(len(keys), width), keys


def pair_for_training(noisy: ObservationDataset, quasi_ideal: ObservationDataset) -> TrainingPairs:
    """Align noisy features with quasi-ideal z targets per (l, t_i)."""
    if noisy.role is not Role.TRAINING_NOISY or quasi_ideal.role is not Role.QUASI_IDEAL:
        logger.warning(
            "Pairing %s inputs with %s targets (expected training_noisy -> quasi_ideal)",
            noisy.role, quasi_ideal.role,
        )
    if Axis.Z not in quasi_ideal.axes:
        raise AlignmentError("target dataset has no z-axis records")
    if noisy.num_spins != quasi_ideal.num_spins:
        raise AlignmentError(f"datasets cover {noisy.num_spins} and {quasi_ideal.num_spins} spins")
    noisy_keys = {(l, i) for l, i, _, _ in noisy.keys()}
    target_keys = {(l, i) for l, i, _, _ in quasi_ideal.keys()}
    missing = sorted(noisy_keys ^ target_keys)
    if missing:
        raise AlignmentError(
            "noisy and quasi-ideal datasets cover different (state, time) keys", missing
        )
    if not np.allclose(noisy.times, quasi_ideal.times, rtol=0, atol=1e-12):
        raise AlignmentError("noisy and quasi-ideal datasets use different time grids")
    inputs, keys = feature_table(noisy)
    target_lookup = {label: quasi_ideal.values(label, Axis.Z) for label in quasi_ideal.init_states}
    targets = np.array([target_lookup[label][i - 1] for label, i in keys])
    return TrainingPairs(
        inputs=inputs,
        targets=targets,
        keys=tuple(keys),
        feature_axes=tuple(noisy.axes),
        num_spins=noisy.num_spins,
    )


def validation_rows(pairs: TrainingPairs, fraction: float, seed: int) -> list[int]:
    """Hold out ``fraction`` of each initial state's time indices, chosen per state by seed."""
    if fraction <= 0.0:
        return []
    by_state: dict[str, list[int]] = {}
    for row, (label, _) in enumerate(pairs.keys):
        by_state.setdefault(label, []).append(row)
    held: list[int] = []
    for label, rows in by_state.items():
        count = int(round(fraction * len(rows)))
        if count == 0 or count >= len(rows):
            continue
        rng = np.random.default_rng(derive_seed(seed, "validation", label))
        held.extend(rows[p] for p in sorted(rng.choice(len(rows), size=count, replace=False)))
    return sorted(held)
