"""train: fit the mitigation network on (training_noisy, quasi_ideal) pairs."""

from __future__ import annotations

import logging
from pathlib import Path

from trotterml.cli.commands.common import RunPaths
from trotterml.mitigation.checkpoint import save_checkpoint, write_loss_log
from trotterml.mitigation.trainer import train
from trotterml.processing.dataset_io import load_dataset
from trotterml.processing.datasets import pair_for_training
from trotterml.reports.generator import check_lineage
from trotterml.schemas.models import Provenance, RunConfig

logger = logging.getLogger(__name__)


def cmd_train(
    config: RunConfig,
    noisy_path: Path,
    quasi_path: Path,
    paths: RunPaths | None = None,
    force: bool = False,
) -> list[Path]:
    """Train, then write checkpoint.json and loss_log.csv."""
    paths = paths or RunPaths(config.output.directory)
    noisy = load_dataset(noisy_path)
    quasi = load_dataset(quasi_path)
    check_lineage(noisy, quasi, force)
    pairs = pair_for_training(noisy, quasi)
    logger.info("Training on %d pairs of shape %s", len(pairs), pairs.shape)
    result = train(pairs, config.training)
    provenance = Provenance(config_hash=config.config_hash(), noise=noisy.header.noise)
    checkpoint = save_checkpoint(
        result, paths.checkpoint, provenance.config_hash, noisy.header.lineage_hash,
        noise=provenance.noise,
    )
    return [checkpoint, write_loss_log(result, paths.loss_log, provenance)]
