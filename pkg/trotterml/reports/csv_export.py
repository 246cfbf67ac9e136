"""CSV export: one row per curve point, one row per sweep entry.

Files open with a ``#`` provenance line (config hash, noise calibration); read
them with ``comment="#"`` in pandas or skip the first line.
"""

from __future__ import annotations

import csv
from collections.abc import Sequence
from pathlib import Path
from typing import TextIO

from trotterml.core.storage import atomic_write
from trotterml.reports.metrics import Curve
from trotterml.schemas.models import Provenance, SweepRow


def write_provenance(fh: TextIO, provenance: Provenance | None) -> None:
    if provenance is not None:
        fh.write(provenance.comment() + "\n")


def write_curve_csv(
    curve: Curve, output_path: Path, provenance: Provenance | None = None
) -> Path:
    """Columns t, value."""
    with atomic_write(Path(output_path)) as csvfile:
        write_provenance(csvfile, provenance)
        writer = csv.DictWriter(csvfile, fieldnames=["t", "value"], lineterminator="\n")
        writer.writeheader()
        for t, value in zip(curve.times.tolist(), curve.values.tolist()):
            writer.writerow({"t": repr(t), "value": repr(value)})
    return Path(output_path)


def write_sweep_csv(
    rows: Sequence[SweepRow], output_path: Path, provenance: Provenance | None = None
) -> Path:
    fieldnames = list(SweepRow.model_fields)
    with atomic_write(Path(output_path)) as csvfile:
        write_provenance(csvfile, provenance)
        writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            data = row.model_dump()
            writer.writerow({k: "" if data[k] is None else data[k] for k in fieldnames})
    return Path(output_path)
