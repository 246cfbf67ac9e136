"""Dataset files: JSON-lines (header line, then one record per line) and CSV export."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

from pydantic import ValidationError

from trotterml.core.errors import DatasetParseError
from trotterml.core.storage import atomic_write, canonical_json
from trotterml.processing.datasets import ObservationDataset
from trotterml.schemas.models import FORMAT_VERSION, DatasetHeader, ObservationRecord

logger = logging.getLogger(__name__)

RECORD_FIELDS = list(ObservationRecord.model_fields)


def save_dataset(ds: ObservationDataset, path: Path) -> Path:
    """Write ``ds`` atomically; records keep their in-memory (key) order."""
    path = Path(path)
    header = ds.header.model_copy(update={"record_count": len(ds.records)})
    with atomic_write(path) as fh:
        fh.write(canonical_json(header.model_dump(mode="json")) + "\n")
        for record in ds.records:
            fh.write(canonical_json(record.model_dump(mode="json")) + "\n")
    logger.info("Wrote %d %s records to %s", len(ds.records), ds.role, path)
    return path


def _short(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or 'record'}: {err['msg']}" for err in exc.errors()
    )


def load_dataset(path: Path) -> ObservationDataset:
    """Parse a dataset file; any malformed line raises DatasetParseError with its number."""
    path = Path(path)
    if not path.is_file():
        raise DatasetParseError(path, None, "file not found")
    records: list[ObservationRecord] = []
    header: DatasetHeader | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(path, line_no, f"invalid JSON ({exc.msg})") from exc
            if header is None:
                if not isinstance(row, dict) or row.get("format") != "trotterml.dataset":
                    raise DatasetParseError(path, line_no, "missing dataset header")
                if row.get("format_version") != FORMAT_VERSION:
                    raise DatasetParseError(
                        path, line_no,
                        f"format version {row.get('format_version')} (expected {FORMAT_VERSION})",
                    )
                try:
                    header = DatasetHeader.model_validate(row)
                except ValidationError as exc:
                    raise DatasetParseError(path, line_no, _short(exc)) from exc
                continue
            try:
                records.append(ObservationRecord.model_validate(row))
            except ValidationError as exc:
                raise DatasetParseError(path, line_no, _short(exc)) from exc
    if header is None:
        raise DatasetParseError(path, None, "empty file")
    if header.record_count != len(records):
        raise DatasetParseError(
            path, None, f"header announces {header.record_count} records, found {len(records)}"
        )
    logger.debug("Loaded %d records from %s", len(records), path)
    return ObservationDataset(header=header, records=records)


def export_csv(ds: ObservationDataset, output_path: Path) -> Path:
    """Flat CSV with one row per record, columns named as in the JSON-lines file.

    The first line is a ``#`` comment with the config hash and noise calibration.
    """
    output_path = Path(output_path)
    with atomic_write(output_path) as csvfile:
        csvfile.write(ds.header.provenance.comment() + "\n")
        writer = csv.DictWriter(csvfile, fieldnames=RECORD_FIELDS, lineterminator="\n")
        writer.writeheader()
        for record in ds.records:
            row = record.model_dump(mode="json")
            writer.writerow({k: "" if row[k] is None else row[k] for k in RECORD_FIELDS})
    return output_path
