"""evaluate: compare dataset pairs and write a metric report."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

from trotterml.cli.commands.common import RunPaths
from trotterml.core.errors import InvalidArgumentError
from trotterml.processing.dataset_io import load_dataset
from trotterml.reports.generator import build_report, compare, save_report
from trotterml.schemas.models import RunConfig
from trotterml.simulation.qsim import Axis

logger = logging.getLogger(__name__)


def cmd_evaluate(
    config: RunConfig,
    file_pairs: Sequence[tuple[Path, Path]],
    exact_path: Path | None = None,
    axes: Sequence[Axis | str] = (Axis.Z,),
    paths: RunPaths | None = None,
    output_path: Path | None = None,
    force: bool = False,
    metadata: dict | None = None,
    labels: Sequence[str] | None = None,
) -> list[Path]:
    """One comparison per (A, B) file pair, written as a single report.

    ``labels`` name the comparisons in exported file names, one per pair.
    """
    labels = list(labels) if labels else [""] * len(file_pairs)
    if len(labels) != len(file_pairs):
        raise InvalidArgumentError(f"{len(labels)} labels for {len(file_pairs)} pairs")
    paths = paths or RunPaths(config.output.directory)
    exact = load_dataset(exact_path) if exact_path else None
    comparisons = []
    lineage = None
    for (a_path, b_path), label in zip(file_pairs, labels):
        a = load_dataset(a_path)
        b = load_dataset(b_path)
        lineage = lineage or a.header.lineage_hash
        comparisons.append(
            compare(
                a,
                b,
                config.focus_init,
                axes=axes,
                exact=exact,
                tolerance=config.report.agreement_tolerance,
                a_path=Path(a_path).name,
                b_path=Path(b_path).name,
                force=force,
                label=label,
            )
        )
    meta = {
        "epochs": config.training.epochs,
        "shots": None if config.sampling.exact_mode else config.sampling.shots,
        "N1": config.schedule.N1,
        "c": config.schedule.c,
        "N2": config.schedule.N1 * config.schedule.c,
        **(metadata or {}),
    }
    report = build_report(
        comparisons,
        config.focus_init,
        config.config_hash(),
        lineage or config.lineage_hash(),
        meta,
        noise=config.noise,
    )
    return [save_report(report, output_path or paths.report)]
