"""mitigate: apply a trained checkpoint to an eval_noisy dataset."""

from __future__ import annotations

import logging
from pathlib import Path

from trotterml.cli.commands.common import RunPaths
from trotterml.core.errors import LineageError
from trotterml.mitigation.checkpoint import load_checkpoint
from trotterml.mitigation.trainer import mitigate
from trotterml.processing.dataset_io import load_dataset, save_dataset
from trotterml.schemas.models import Role, RunConfig

logger = logging.getLogger(__name__)


def cmd_mitigate(
    config: RunConfig,
    checkpoint_path: Path,
    eval_path: Path,
    paths: RunPaths | None = None,
    force: bool = False,
) -> list[Path]:
    paths = paths or RunPaths(config.output.directory)
    model, meta = load_checkpoint(checkpoint_path)
    noisy = load_dataset(eval_path)
    if meta.lineage_hash != noisy.header.lineage_hash:
        if not force:
            raise LineageError(
                f"checkpoint {checkpoint_path} was trained for different model/schedule settings"
            )
        logger.warning("Mitigating across lineage hashes (forced)")
    mitigated = mitigate(model, noisy, tuple(meta.feature_axes))
    header = mitigated.header.model_copy(
        update={
            "config_hash": config.config_hash(),
            "sources": {**mitigated.header.sources, "checkpoint": meta.config_hash},
        }
    )
    mitigated.header = header
    return [save_dataset(mitigated, paths.dataset(Role.MITIGATED))]
