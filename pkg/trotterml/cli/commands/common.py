"""Output layout of a run directory and config loading shared by all commands."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

from trotterml.schemas.models import Role, RunConfig, load_run_config

logger = logging.getLogger(__name__)


class RunPaths:
    """<out>/datasets/<role>.jsonl, <out>/model/, <out>/reports/, <out>/plots/."""

    def __init__(self, root: Path):
        self.root = Path(root)

    @property
    def datasets(self) -> Path:
        return self.root / "datasets"

    @property
    def model_dir(self) -> Path:
        return self.root / "model"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    @property
    def plots(self) -> Path:
        return self.root / "plots"

    def dataset(self, role: Role | str) -> Path:
        return self.datasets / f"{Role(role).value}.jsonl"

    @property
    def checkpoint(self) -> Path:
        return self.model_dir / "checkpoint.json"

    @property
    def loss_log(self) -> Path:
        return self.model_dir / "loss_log.csv"

    @property
    def report(self) -> Path:
        return self.reports / "report.json"

    def variant(self, name: str) -> RunPaths:
        return RunPaths(self.root / name)


def config_from_args(
    config_path: Path | None,
    *,
    seed: int | None = None,
    out: Path | None = None,
    exact_mode: bool = False,
    post_select: int | None = None,
    workers: int | None = None,
    epochs: int | None = None,
) -> RunConfig:
    """Load the run config with command-line overrides applied before validation.

    ``post_select`` = -1 enables post-selection on the initial-state popcount.
    """
    overrides: dict[str, Any] = {}
    if seed is not None:
        overrides["seeds.master"] = seed
    if out is not None:
        overrides["output.directory"] = str(out)
    if exact_mode:
        overrides["sampling.exact_mode"] = True
    if post_select is not None:
        overrides["post_select.enabled"] = True
        overrides["post_select.target_excitations"] = None if post_select < 0 else post_select
    if workers is not None:
        overrides["output.workers"] = workers
    if epochs is not None:
        overrides["training.epochs"] = epochs
    config = load_run_config(config_path, overrides)
    logger.debug("Config %s (hash %s)", config_path or "<defaults>", config.config_hash()[:12])
    return config
