"""Pydantic models for run configs and every artifact file trotterml writes."""

from __future__ import annotations

import math
import tomllib
from enum import StrEnum
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from trotterml.core.errors import ConfigError
from trotterml.core.storage import canonical_json, sha256_hex
from trotterml.simulation.circuits import Layout, ModelKind, SpinModel, Stage, TrotterSchedule
from trotterml.simulation.qsim import Axis, NoiseModel

FORMAT_VERSION = 1


class Role(StrEnum):
    QUASI_IDEAL = "quasi_ideal"
    TRAINING_NOISY = "training_noisy"
    EVAL_NOISY = "eval_noisy"
    MITIGATED = "mitigated"
    EXACT = "exact"
    IDEAL_TROTTER = "ideal_trotter"

    @classmethod
    def of_stage(cls, stage: Stage | str) -> Role:
        return cls(Stage(stage).value)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ── Run config ────────────────────────────────────────────────────────────────


class ModelSection(_Section):
    kind: ModelKind = ModelKind.TFIM
    Nq: int = Field(5, ge=1, le=6)
    J: float = 2.0
    h: float = 1.0


class ScheduleSection(_Section):
    N1: int = Field(2, ge=1)
    c: int = Field(2, ge=1)
    T: float | None = Field(None, gt=0)  # None -> 2 / J
    K: int = Field(20, ge=1)
    layout: Layout = Layout.INTERLEAVED
    custom_permutation: list[int] | None = None
    epsilon_angle: float = Field(0.0, ge=-1e-2, le=1e-2)

    @model_validator(mode="after")
    def _check_permutation(self) -> ScheduleSection:
        if self.layout is Layout.CUSTOM:
            n2 = self.N1 * self.c
            if self.custom_permutation is None or sorted(self.custom_permutation) != list(
                range(n2)
            ):
                raise ValueError(
                    f"custom layout needs custom_permutation = a permutation of 0..{n2 - 1}"
                )
        return self


class NoiseSection(_Section):
    p1: float = Field(5e-4, ge=0, le=1)
    p2: float = Field(1.2e-2, ge=0, le=1)
    eps01: float = Field(0.02, ge=0, le=1)
    eps10: float = Field(0.02, ge=0, le=1)
    enabled: bool = True


class SamplingSection(_Section):
    shots: int = Field(8192, gt=0)
    exact_mode: bool = False
    axes: list[Axis] | None = None  # None -> x,y,z for tfim, z for xy
    init_states: list[str] | None = None  # None -> full computational basis
    init_sample: int | None = Field(None, ge=1)


class TrainConfig(_Section):
    epochs: int = Field(50000, ge=1)
    checkpoint_every: int = Field(100, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon_adam: float = Field(1e-8, gt=0)
    batch_size: int | None = Field(None, ge=1)  # None -> full batch
    seed: int = 42
    validation_fraction: float = Field(0.2, ge=0, le=0.5)
    hidden_sizes: list[int] = Field(default_factory=lambda: [200, 200])

    @model_validator(mode="after")
    def _check_epochs(self) -> TrainConfig:
        if self.epochs < self.checkpoint_every:
            raise ValueError("epochs must be >= checkpoint_every")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ValueError("hidden_sizes must list positive layer widths")
        return self

    def config_hash(self) -> str:
        return sha256_hex(canonical_json(self.model_dump(mode="json")))


class PostSelectSection(_Section):
    enabled: bool = False
    target_excitations: int | None = Field(None, ge=0)  # None -> popcount of the initial state


class SeedsSection(_Section):
    master: int = 1234


class OutputSection(_Section):
    directory: Path = Path("runs/default")
    workers: int | None = Field(None, ge=1)


class ReportSection(_Section):
    focus_init: str | None = None  # None -> all-zero state for tfim, domain wall for xy
    agreement_tolerance: float = Field(0.05, gt=0)


class RunConfig(_Section):
    model: ModelSection = Field(default_factory=ModelSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    sampling: SamplingSection = Field(default_factory=SamplingSection)
    training: TrainConfig = Field(default_factory=TrainConfig)
    post_select: PostSelectSection = Field(default_factory=PostSelectSection)
    seeds: SeedsSection = Field(default_factory=SeedsSection)
    output: OutputSection = Field(default_factory=OutputSection)
    report: ReportSection = Field(default_factory=ReportSection)

    @model_validator(mode="after")
    def _cross_checks(self) -> RunConfig:
        nq = self.model.Nq
        problems = []
        for label in self.sampling.init_states or []:
            if len(label) != nq or set(label) - {"0", "1"}:
                problems.append(f"init state {label!r} is not a {nq}-bit label")
        if self.sampling.init_sample is not None and self.sampling.init_sample > 2**nq:
            problems.append(f"init_sample exceeds the {2**nq} basis states")
        if self.post_select.enabled and self.model.kind is not ModelKind.XY:
            problems.append("post-selection needs an excitation-conserving model (xy)")
        if self.post_select.enabled and set(self.axes) - {Axis.Z}:
            problems.append('post-selection needs sampling.axes = ["z"]')
        target = self.post_select.target_excitations
        if target is not None and target > nq:
            problems.append(f"target_excitations {target} exceeds Nq={nq}")
        focus = self.report.focus_init
        if focus is not None and (len(focus) != nq or set(focus) - {"0", "1"}):
            problems.append(f"focus_init {focus!r} is not a {nq}-bit label")
        if self.model.J == 0 and self.schedule.T is None:
            problems.append("T must be given explicitly when J = 0")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def total_time(self) -> float:
        return self.schedule.T if self.schedule.T is not None else 2.0 / abs(self.model.J)

    @property
    def axes(self) -> list[Axis]:
        if self.sampling.axes:
            return sorted(set(self.sampling.axes), key=list(Axis).index)
        return [Axis.X, Axis.Y, Axis.Z] if self.model.kind is ModelKind.TFIM else [Axis.Z]

    @property
    def focus_init(self) -> str:
        if self.report.focus_init:
            return self.report.focus_init
        nq = self.model.Nq
        if self.model.kind is ModelKind.TFIM:
            return "0" * nq
        ups = (nq + 1) // 2
        return "1" * ups + "0" * (nq - ups)

    def config_hash(self) -> str:
        payload = self.model_dump(mode="json", exclude={"output"})
        return sha256_hex(canonical_json(payload))

    def lineage_hash(self) -> str:
        return lineage_hash(self.model, self.resolved_schedule)

    @property
    def provenance(self) -> Provenance:
        return Provenance(config_hash=self.config_hash(), noise=self.noise)

    @property
    def resolved_schedule(self) -> ScheduleSection:
        return self.schedule.model_copy(update={"T": self.total_time})

    def with_c(self, c: int) -> RunConfig:
        """Copy with a different stretch factor (custom layouts cannot be re-stretched)."""
        if self.schedule.layout is Layout.CUSTOM and c != self.schedule.c:
            raise ConfigError("custom layout permutation is fixed to one value of c")
        return self.model_copy(update={"schedule": self.schedule.model_copy(update={"c": c})})

    def spin_model(self) -> SpinModel:
        return SpinModel(self.model.kind, self.model.Nq, self.model.J, self.model.h)

    def trotter_schedule(self) -> TrotterSchedule:
        s = self.schedule
        return TrotterSchedule(
            N1=s.N1,
            c=s.c,
            T=self.total_time,
            K=s.K,
            layout=s.layout,
            custom_permutation=tuple(s.custom_permutation) if s.custom_permutation else None,
            epsilon_angle=s.epsilon_angle,
        )

    def noise_model(self) -> NoiseModel:
        n = self.noise
        return NoiseModel.uniform(self.model.Nq, n.p1, n.p2, n.eps01, n.eps10, n.enabled)


def lineage_hash(model: ModelSection, schedule: ScheduleSection) -> str:
    """Hash of the physics an artifact describes; T must already be resolved."""
    payload = {"model": model.model_dump(mode="json"), "schedule": schedule.model_dump(mode="json")}
    return sha256_hex(canonical_json(payload))


def model_section(model: SpinModel) -> ModelSection:
    return ModelSection(kind=model.kind, Nq=model.num_spins, J=model.J, h=model.h)


def schedule_section(schedule: TrotterSchedule) -> ScheduleSection:
    return ScheduleSection(
        N1=schedule.N1,
        c=schedule.c,
        T=schedule.T,
        K=schedule.K,
        layout=schedule.layout,
        custom_permutation=(
            list(schedule.custom_permutation) if schedule.custom_permutation else None
        ),
        epsilon_angle=schedule.epsilon_angle,
    )


def noise_section(noise: NoiseModel) -> NoiseSection:
    eps01, eps10 = noise.readout[0] if noise.readout else (0.0, 0.0)
    return NoiseSection(p1=noise.p1, p2=noise.p2, eps01=eps01, eps10=eps10, enabled=noise.enabled)


def _flatten_errors(exc: ValidationError) -> list[tuple[str, str]]:
    return [(".".join(str(p) for p in err["loc"]) or "<root>", err["msg"]) for err in exc.errors()]


def load_run_config(path: Path | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read a TOML run config (or defaults when ``path`` is None) and validate it.

    ``overrides`` maps dotted keys ("seeds.master") to values applied before
    validation. Every violated field is listed in the raised ConfigError.
    """
    data: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML ({exc})") from exc
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        data.setdefault(section, {})[key] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        problems = _flatten_errors(exc)
        raise ConfigError(f"invalid run config {path or '<defaults>'}", problems) from exc


# ── Dataset files ─────────────────────────────────────────────────────────────


class ObservationRecord(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, protected_namespaces=())

    model: ModelKind
    N1: int
    c: int
    layout: Layout
    role: Role
    init_state: str
    time_index: int = Field(ge=0)
    time: float = Field(ge=0)
    axis: Axis
    qubit: int = Field(ge=0)
    value: float
    shots: int | None = None
    seed: int | None = None

    @field_validator("shots")
    @classmethod
    def _positive_shots(cls, shots: int | None) -> int | None:
        if shots is not None and shots <= 0:
            raise ValueError("shots must be positive (null for exact values)")
        return shots

    @model_validator(mode="after")
    def _value_in_range(self) -> ObservationRecord:
        slack = 3.0 / math.sqrt(self.shots) if self.shots else 1e-9
        if not math.isfinite(self.value) or abs(self.value) > 1.0 + slack:
            raise ValueError(f"value {self.value} outside [-1, 1] (slack {slack:.3g})")
        if set(self.init_state) - {"0", "1"} or self.qubit >= len(self.init_state):
            raise ValueError(f"bad init_state/qubit pair {self.init_state!r}/{self.qubit}")
        return self

    @property
    def key(self) -> tuple[str, int, Axis, int]:
        return (self.init_state, self.time_index, self.axis, self.qubit)


class DatasetHeader(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, protected_namespaces=())

    format: Literal["trotterml.dataset"] = "trotterml.dataset"
    format_version: int = FORMAT_VERSION
    role: Role
    model: ModelSection
    schedule: ScheduleSection
    noise: NoiseSection
    shots: int | None
    exact_mode: bool
    axes: list[Axis]
    init_states: list[str]
    time_grid: list[float]
    master_seed: int | None = None
    post_select: bool = False
    target_excitations: int | None = None
    config_hash: str
    lineage_hash: str
    record_count: int = Field(ge=0)
    sources: dict[str, str] = Field(default_factory=dict)

    @property
    def num_axes(self) -> int:
        return len(self.axes)

    @property
    def provenance(self) -> Provenance:
        return Provenance(config_hash=self.config_hash, noise=self.noise)


# ── Checkpoints ───────────────────────────────────────────────────────────────


class CheckpointEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    epoch: int
    train_loss: float
    validation_loss: float


class EncodingSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["affine"] = "affine"
    scale: float = 0.5
    offset: float = 0.5


class CheckpointFile(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, protected_namespaces=())

    format: Literal["trotterml.checkpoint"] = "trotterml.checkpoint"
    format_version: int = FORMAT_VERSION
    layer_sizes: list[int]
    weights: list[list[list[float]]]
    biases: list[list[float]]
    encoding: EncodingSpec = Field(default_factory=EncodingSpec)
    feature_axes: list[Axis]
    num_spins: int
    train_config: TrainConfig
    train_config_hash: str
    best_epoch: int
    initial_train_loss: float
    log: list[CheckpointEntry]
    config_hash: str
    lineage_hash: str
    noise: NoiseSection | None = None


# ── Reports ───────────────────────────────────────────────────────────────────


class CurveModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    times: list[float]
    values: list[float]


class ComparisonModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    a_role: Role
    b_role: Role
    a_path: str
    b_path: str
    axes: list[Axis]
    mse_by_axis: dict[str, float]
    mse_overall: float = Field(ge=0)
    scalars_compared: int
    observable: str
    label: str = ""
    curves: list[CurveModel] = Field(default_factory=list)
    agreement_horizons: dict[str, float | None] = Field(default_factory=dict)
    deviation_curves: list[CurveModel] = Field(default_factory=list)
    time_averaged_deviation: dict[str, float] = Field(default_factory=dict)


class MetricReportModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    format: Literal["trotterml.report"] = "trotterml.report"
    format_version: int = FORMAT_VERSION
    focus_init: str
    comparisons: list[ComparisonModel]
    config_hash: str
    lineage_hash: str
    noise: NoiseSection | None = None
    metadata: dict[str, Any] = Field(default_factory=dict)

    @property
    def provenance(self) -> Provenance:
        return Provenance(config_hash=self.config_hash, noise=self.noise)


class SweepRow(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    N1: int
    c: int
    N2: int
    raw_mse: float
    mitigated_mse: float
    mitigated_no_post_select_mse: float | None = None
    raw_post_selected_mse: float | None = None


class SweepFile(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    format: Literal["trotterml.sweep"] = "trotterml.sweep"
    format_version: int = FORMAT_VERSION
    config_hash: str
    noise: NoiseSection | None = None
    rows: list[SweepRow]


# ── Provenance ────────────────────────────────────────────────────────────────


class Provenance(BaseModel):
    """Config hash and noise calibration stamped on every written artifact."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    config_hash: str
    noise: NoiseSection | None = None

    def comment(self) -> str:
        """One-line ``#`` header for CSV files."""
        parts = [f"config_hash={self.config_hash}"]
        if self.noise is not None:
            parts += [f"{k}={v}" for k, v in self.noise.model_dump(mode="json").items()]
        return "# " + " ".join(parts)

    def footnote(self) -> str:
        """Short form for chart captions."""
        text = f"config {self.config_hash}"
        if self.noise is not None:
            n = self.noise
            text += f"  p1={n.p1:g} p2={n.p2:g} eps01={n.eps01:g} eps10={n.eps10:g}"
            if not n.enabled:
                text += " (noise off)"
        return text
