"""Adam training with periodic checkpoints, checkpoint selection and mitigation of datasets."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from trotterml.core.errors import InvalidArgumentError, TrainingDivergedError
from trotterml.core.seeding import derive_seed
from trotterml.mitigation.mlp import (
    Gradient,
    MlpModel,
    init_model,
    loss,
    loss_and_gradient,
    predict,
)
from trotterml.processing.datasets import (
    ObservationDataset,
    TrainingPairs,
    feature_table,
    validation_rows,
)
from trotterml.schemas.models import CheckpointEntry, ObservationRecord, Role, TrainConfig
from trotterml.simulation.qsim import Axis

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First and second moment estimates, one array per parameter tensor."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_model(cls, model: MlpModel) -> AdamState:
        tensors = [*model.weights, *model.biases]
        return cls(m=[np.zeros_like(t) for t in tensors], v=[np.zeros_like(t) for t in tensors])


def adam_step(model: MlpModel, grad: Gradient, state: AdamState, cfg: TrainConfig) -> MlpModel:
    state.step += 1
    params = [*model.weights, *model.biases]
    grads = [*grad.weights, *grad.biases]
    correction1 = 1.0 - cfg.beta1**state.step
    correction2 = 1.0 - cfg.beta2**state.step
    updated = []
    for idx, (p, g) in enumerate(zip(params, grads)):
        state.m[idx] = cfg.beta1 * state.m[idx] + (1.0 - cfg.beta1) * g
        state.v[idx] = cfg.beta2 * state.v[idx] + (1.0 - cfg.beta2) * g * g
        m_hat = state.m[idx] / correction1
        v_hat = state.v[idx] / correction2
        updated.append(p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon_adam))
    layers = len(model.weights)
    return MlpModel(tuple(updated[:layers]), tuple(updated[layers:]))


@dataclass
class TrainingResult:
    """Selected model plus everything needed to write its checkpoint file."""

    model: MlpModel
    log: list[CheckpointEntry]
    best_epoch: int
    initial_train_loss: float
    train_config: TrainConfig
    feature_axes: tuple[Axis, ...]
    num_spins: int
    validation_keys: list[tuple[str, int]] = field(default_factory=list)

    @property
    def best(self) -> CheckpointEntry:
        return next(e for e in self.log if e.epoch == self.best_epoch)


def _batches(rows: int, batch_size: int | None, seed: int, epoch: int) -> list[np.ndarray]:
    if batch_size is None or batch_size >= rows:
        return [np.arange(rows)]
    order = np.random.default_rng(derive_seed(seed, "batches", epoch)).permutation(rows)
    return [order[i : i + batch_size] for i in range(0, rows, batch_size)]


def train(
    pairs: TrainingPairs,
    cfg: TrainConfig,
    on_checkpoint: Callable[[CheckpointEntry], None] | None = None,
) -> TrainingResult:
    """Adam for cfg.epochs epochs; keep the checkpoint with minimum validation loss.

    Validation rows are a per-state share of time indices; with none held out
    the training loss selects the checkpoint instead.

    Args:
        pairs: Aligned noisy features and quasi-ideal z targets.
        cfg: Network shape, optimizer settings and seed.
        on_checkpoint: Called with each loss-log entry as it is recorded.

    Returns:
        The selected model with its loss log and validation keys.

    Raises:
        InvalidArgumentError: Fewer than two pairs.
        TrainingDivergedError: A loss or parameter update became non-finite.
    """
    if len(pairs) < 2:
        raise InvalidArgumentError(f"training needs at least 2 pairs, got {len(pairs)}")
    k_in, k_out = pairs.shape
    held = validation_rows(pairs, cfg.validation_fraction, cfg.seed)
    held_set = set(held)
    train_set = pairs.subset(r for r in range(len(pairs)) if r not in held_set)
    val_set = pairs.subset(held) if held else None

    model = init_model([k_in, *cfg.hidden_sizes, k_out], cfg.seed)
    state = AdamState.for_model(model)
    initial = loss(model, train_set)
    logger.info(
        "Training %s network on %d pairs (%d held out), %d epochs",
        "-".join(str(s) for s in model.layer_sizes), len(train_set), len(held), cfg.epochs,
    )

    log: list[CheckpointEntry] = []
    best: tuple[float, int, MlpModel] | None = None
    for epoch in range(1, cfg.epochs + 1):
        for rows in _batches(len(train_set), cfg.batch_size, cfg.seed, epoch):
            batch = train_set if len(rows) == len(train_set) else train_set.subset(rows)
            value, grad = loss_and_gradient(model, batch)
            if not np.isfinite(value):
                raise TrainingDivergedError(epoch)
            try:
                model = adam_step(model, grad, state, cfg)
            except InvalidArgumentError:
                raise TrainingDivergedError(epoch) from None
        if epoch % cfg.checkpoint_every:
            continue
        train_loss = loss(model, train_set)
        val_loss = loss(model, val_set) if val_set is not None else train_loss
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(epoch)
        entry = CheckpointEntry(epoch=epoch, train_loss=train_loss, validation_loss=val_loss)
        log.append(entry)
        if on_checkpoint:
            on_checkpoint(entry)
        if best is None or val_loss < best[0]:
            best = (val_loss, epoch, model)
        if epoch % (cfg.checkpoint_every * 10) == 0:
            logger.info("epoch %d: train %.3e, validation %.3e", epoch, train_loss, val_loss)

    assert best is not None  # epochs >= checkpoint_every
    logger.info("Selected epoch %d (validation loss %.3e)", best[1], best[0])
    return TrainingResult(
        model=best[2],
        log=log,
        best_epoch=best[1],
        initial_train_loss=initial,
        train_config=cfg,
        feature_axes=pairs.feature_axes,
        num_spins=pairs.num_spins,
        validation_keys=[pairs.keys[r] for r in held],
    )


def mitigate(
    model: MlpModel,
    noisy: ObservationDataset,
    feature_axes: tuple[Axis, ...] | None = None,
) -> ObservationDataset:
    """Run every (l, t_i) of a noisy dataset through the network; z records only.

    Args:
        model: Trained network.
        noisy: Evaluation (or training) noisy dataset.
        feature_axes: Input axes in network order; defaults to the dataset's axes.

    Returns:
        A mitigated dataset with one z record per (l, t_i, qubit).
    """
    if noisy.role not in (Role.EVAL_NOISY, Role.TRAINING_NOISY):
        raise InvalidArgumentError(f"cannot mitigate a {noisy.role} dataset")
    axes = tuple(feature_axes) if feature_axes is not None else tuple(noisy.axes)
    missing = [a for a in axes if a not in noisy.axes]
    if missing:
        raise InvalidArgumentError(f"dataset lacks feature axes {[a.value for a in missing]}")
    if len(axes) * noisy.num_spins != model.k_in or model.k_out != noisy.num_spins:
        raise InvalidArgumentError(
            f"{len(axes)} axes x {noisy.num_spins} spins do not fit a "
            f"{model.k_in} -> {model.k_out} network"
        )
    inputs, keys = feature_table(noisy, axes)
    outputs = predict(model, inputs)
    h = noisy.header
    times = h.time_grid
    records = [
        ObservationRecord(
            model=h.model.kind,
            N1=h.schedule.N1,
            c=h.schedule.c,
            layout=h.schedule.layout,
            role=Role.MITIGATED,
            init_state=label,
            time_index=i,
            time=times[i - 1],
            axis=Axis.Z,
            qubit=q,
            value=float(outputs[row, q]),
        )
        for row, (label, i) in enumerate(keys)
        for q in range(noisy.num_spins)
    ]
    header = h.model_copy(
        update={
            "role": Role.MITIGATED,
            "axes": [Axis.Z],
            "record_count": len(records),
            "sources": {**h.sources, "noisy": h.role.value},
        }
    )
    logger.info("Mitigated %d (state, time) points", len(keys))
    return ObservationDataset(header=header, records=records)
