"""pipeline: generate x3 -> train -> mitigate -> reference -> evaluate -> export."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

from trotterml.cli.commands.common import RunPaths
from trotterml.cli.commands.evaluate import cmd_evaluate
from trotterml.cli.commands.generate import cmd_generate
from trotterml.cli.commands.mitigate import cmd_mitigate
from trotterml.cli.commands.reference import cmd_reference
from trotterml.cli.commands.train import cmd_train
from trotterml.reports.generator import export_report, load_report, write_sweep
from trotterml.schemas.models import Role, RunConfig, SweepRow

logger = logging.getLogger(__name__)


def _train_and_mitigate(
    config: RunConfig, paths: RunPaths, post_select: bool, force: bool
) -> list[Path]:
    written = cmd_generate(config, "all", post_select=post_select, paths=paths)
    written += cmd_train(
        config, paths.dataset(Role.TRAINING_NOISY), paths.dataset(Role.QUASI_IDEAL), paths, force
    )
    written += cmd_mitigate(config, paths.checkpoint, paths.dataset(Role.EVAL_NOISY), paths, force)
    return written


def run_single(
    config: RunConfig, paths: RunPaths, force: bool = False
) -> tuple[list[Path], SweepRow]:
    """Full pipeline for one (N1, c); returns written files and the MSE summary row."""
    s = config.schedule
    logger.info("Pipeline N1=%d c=%d (N2=%d) -> %s", s.N1, s.c, s.N1 * s.c, paths.root)
    written = _train_and_mitigate(config, paths, config.post_select.enabled, force)
    written += cmd_reference(config, paths)

    ideal = paths.dataset(Role.IDEAL_TROTTER)
    pairs = [
        (paths.dataset(Role.MITIGATED), ideal),
        (paths.dataset(Role.EVAL_NOISY), ideal),
        (paths.dataset(Role.QUASI_IDEAL), ideal),
    ]
    labels = ["", "", ""]
    if config.post_select.enabled:
        # Same seeds without filtering: the unfiltered raw data and its own network.
        variant = paths.variant("no_post_select")
        written += _train_and_mitigate(config, variant, False, force)
        pairs += [
            (variant.dataset(Role.MITIGATED), ideal),
            (variant.dataset(Role.EVAL_NOISY), ideal),
        ]
        labels += [
            "mitigated_no_post_select_vs_ideal_trotter",
            "eval_noisy_no_post_select_vs_ideal_trotter",
        ]

    report_path = cmd_evaluate(
        config, pairs, exact_path=paths.dataset(Role.EXACT), paths=paths, force=force,
        labels=labels,
    )[0]
    written.append(report_path)
    report = load_report(report_path)
    for fmt in ("csv", "svg"):
        written += export_report(report, paths.plots, fmt)

    values = [c.mse_overall for c in report.comparisons]
    post_selected = config.post_select.enabled
    no_ps_mse = values[3] if post_selected else None
    row = SweepRow(
        N1=s.N1,
        c=s.c,
        N2=s.N1 * s.c,
        raw_mse=values[4] if post_selected else values[1],
        mitigated_mse=values[0],
        mitigated_no_post_select_mse=no_ps_mse,
        raw_post_selected_mse=values[1] if post_selected else None,
    )
    logger.info(
        "N2=%d: raw E=%.4e, mitigated E=%.4e%s",
        row.N2, row.raw_mse, row.mitigated_mse,
        "" if no_ps_mse is None else (
            f", post-selected raw {row.raw_post_selected_mse:.4e}"
            f", mitigated without post-selection {no_ps_mse:.4e}"
        ),
    )
    return written, row


def cmd_pipeline(
    config: RunConfig, c_values: Sequence[int] | None = None, force: bool = False
) -> list[Path]:
    """One network per (N1, c); several c values also produce an MSE-vs-N2 sweep summary."""
    root = RunPaths(config.output.directory)
    if not c_values:
        return run_single(config, root, force)[0]
    written: list[Path] = []
    rows = []
    for c in sorted(set(c_values)):
        variant = root.variant(f"N1_{config.schedule.N1}_c{c}")
        files, row = run_single(config.with_c(c), variant, force)
        written += files
        rows.append(row)
    written += write_sweep(rows, root.reports, config.provenance)
    return written
