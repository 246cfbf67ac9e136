"""Checkpoint files (JSON, bit-exact floats) and the training loss log."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

from pydantic import ValidationError

from trotterml.core.errors import DatasetParseError
from trotterml.core.storage import atomic_write, canonical_json
from trotterml.mitigation.mlp import MlpModel
from trotterml.mitigation.trainer import TrainingResult
from trotterml.schemas.models import FORMAT_VERSION, CheckpointFile, NoiseSection, Provenance

logger = logging.getLogger(__name__)


def save_checkpoint(
    result: TrainingResult,
    path: Path,
    config_hash: str,
    lineage_hash: str,
    noise: NoiseSection | None = None,
) -> Path:
    """Write the selected model; floats go through repr, so they reload bit-identical.

    Args:
        result: Output of ``train``.
        path: Destination JSON file.
        config_hash: Hash of the run config.
        lineage_hash: Hash of the physics the training data came from.
        noise: Calibration the training data was generated under.

    Returns:
        ``path``.
    """
    model = result.model
    payload = CheckpointFile(
        layer_sizes=model.layer_sizes,
        weights=[w.tolist() for w in model.weights],
        biases=[b.tolist() for b in model.biases],
        feature_axes=list(result.feature_axes),
        num_spins=result.num_spins,
        train_config=result.train_config,
        train_config_hash=result.train_config.config_hash(),
        best_epoch=result.best_epoch,
        initial_train_loss=result.initial_train_loss,
        log=result.log,
        config_hash=config_hash,
        lineage_hash=lineage_hash,
        noise=noise,
    )
    with atomic_write(Path(path)) as fh:
        fh.write(canonical_json(payload.model_dump(mode="json")) + "\n")
    logger.info("Wrote checkpoint (epoch %d) to %s", result.best_epoch, path)
    return Path(path)


def load_checkpoint(path: Path) -> tuple[MlpModel, CheckpointFile]:
    path = Path(path)
    if not path.is_file():
        raise DatasetParseError(path, None, "file not found")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetParseError(path, exc.lineno, f"invalid JSON ({exc.msg})") from exc
    if isinstance(raw, dict) and raw.get("format_version") not in (None, FORMAT_VERSION):
        raise DatasetParseError(path, 1, f"format version {raw.get('format_version')}")
    try:
        meta = CheckpointFile.model_validate(raw)
    except ValidationError as exc:
        raise DatasetParseError(path, 1, str(exc.errors()[0]["msg"])) from exc
    model = MlpModel(tuple(meta.weights), tuple(meta.biases))
    if model.layer_sizes != meta.layer_sizes:
        raise DatasetParseError(path, 1, f"layer sizes {meta.layer_sizes} do not match parameters")
    return model, meta


def write_loss_log(
    result: TrainingResult, output_path: Path, provenance: Provenance | None = None
) -> Path:
    """epoch, train_loss, validation_loss per checkpoint, under a ``#`` provenance line."""
    with atomic_write(Path(output_path)) as csvfile:
        if provenance is not None:
            csvfile.write(provenance.comment() + "\n")
        writer = csv.DictWriter(
            csvfile, fieldnames=["epoch", "train_loss", "validation_loss"], lineterminator="\n"
        )
        writer.writeheader()
        for entry in result.log:
            writer.writerow(entry.model_dump())
    return Path(output_path)
