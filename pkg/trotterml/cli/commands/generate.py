"""generate: simulate one or all stage datasets."""

from __future__ import annotations

import logging
from pathlib import Path

from trotterml.cli.commands.common import RunPaths
from trotterml.processing.dataset_io import save_dataset
from trotterml.processing.datasets import generate_from_config
from trotterml.schemas.models import Role, RunConfig
from trotterml.simulation.circuits import Stage

logger = logging.getLogger(__name__)

STAGE_NAMES = {
    "quasi-ideal": Stage.QUASI_IDEAL,
    "training-noisy": Stage.TRAINING_NOISY,
    "eval-noisy": Stage.EVAL_NOISY,
}


def parse_stage(name: str) -> list[Stage]:
    if name == "all":
        return list(Stage)
    key = name.replace("_", "-")
    if key not in STAGE_NAMES:
        raise ValueError(f"unknown stage {name!r}")
    return [STAGE_NAMES[key]]


def cmd_generate(
    config: RunConfig, stage: str, post_select: bool | None = None, paths: RunPaths | None = None
) -> list[Path]:
    """Write one dataset file per requested stage."""
    paths = paths or RunPaths(config.output.directory)
    written = []
    for s in parse_stage(stage):
        ds = generate_from_config(config, s, post_select_enabled=post_select)
        written.append(save_dataset(ds, paths.dataset(Role.of_stage(s))))
    return written
