"""export: CSV or SVG plot artifacts from a report or dataset file."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from trotterml.core.errors import DatasetParseError, InvalidArgumentError
from trotterml.processing.dataset_io import export_csv, load_dataset
from trotterml.reports.generator import default_observable, export_report, load_report
from trotterml.reports.metrics import observable_curve
from trotterml.reports.svg_plot import plot_curves

logger = logging.getLogger(__name__)

FORMATS = ("csv", "svg")


def _kind_of(path: Path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            first = json.loads(fh.readline())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetParseError(path, 1, f"not a trotterml artifact ({exc})") from exc
    kind = first.get("format") if isinstance(first, dict) else None
    if kind not in ("trotterml.dataset", "trotterml.report"):
        raise DatasetParseError(path, 1, f"cannot export artifact of format {kind!r}")
    return kind


def cmd_export(
    artifact: Path, fmt: str, output_dir: Path | None = None, focus_init: str | None = None
) -> list[Path]:
    if fmt not in FORMATS:
        raise InvalidArgumentError(f"format must be one of {FORMATS}, got {fmt!r}")
    artifact = Path(artifact)
    if not artifact.is_file():
        raise DatasetParseError(artifact, None, "file not found")
    output_dir = Path(output_dir) if output_dir else artifact.parent
    if _kind_of(artifact) == "trotterml.report":
        written = export_report(load_report(artifact), output_dir, fmt)
    else:
        ds = load_dataset(artifact)
        if fmt == "csv":
            written = [export_csv(ds, output_dir / f"{artifact.stem}.csv")]
        else:
            init = focus_init or ds.init_states[0]
            observable = default_observable(ds.header.model.kind, init)
            curve = observable_curve(ds, init, observable)
            written = [
                plot_curves([curve], f"{observable} for |{init}>",
                            output_dir / f"{artifact.stem}.svg", y_label=observable,
                            provenance=ds.header.provenance)
            ]
    logger.info("Exported %d file(s) to %s", len(written), output_dir)
    return written
