"""Report orchestration: builds comparisons and delegates to CSV or SVG writers."""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from trotterml.core.errors import DatasetParseError, LineageError
from trotterml.core.storage import atomic_write, canonical_json
from trotterml.processing.datasets import ObservationDataset
from trotterml.reports.metrics import (
    Curve,
    agreement_horizon,
    deviation_curves,
    mse,
    observable_curve,
    time_averaged_deviation,
)
from trotterml.schemas.models import (
    ComparisonModel,
    CurveModel,
    MetricReportModel,
    NoiseSection,
    Provenance,
    Role,
    SweepFile,
    SweepRow,
)
from trotterml.simulation.circuits import ModelKind
from trotterml.simulation.qsim import Axis

logger = logging.getLogger(__name__)


def default_observable(kind: ModelKind, init: str) -> str:
    """Half-difference for XY domain walls, mean z-magnetization otherwise."""
    if kind is ModelKind.XY and "0" in init and "1" in init:
        return "half_difference"
    return "mean_z"


def check_lineage(a: ObservationDataset, b: ObservationDataset, force: bool = False) -> None:
    if a.header.lineage_hash == b.header.lineage_hash:
        return
    if not force:
        raise LineageError(
            f"{a.role} ({a.header.lineage_hash[:12]}) and {b.role} "
            f"({b.header.lineage_hash[:12]}) describe different model/schedule settings"
        )
    logger.warning("Comparing %s and %s across lineage hashes (forced)", a.role, b.role)


def compare(
    a: ObservationDataset,
    b: ObservationDataset,
    focus_init: str,
    *,
    axes: Sequence[Axis | str] = (Axis.Z,),
    exact: ObservationDataset | None = None,
    tolerance: float = 0.05,
    a_path: str = "",
    b_path: str = "",
    force: bool = False,
    label: str = "",
) -> ComparisonModel:
    """Compare dataset A against reference B.

    Args:
        a: Dataset under test (mitigated, raw, ...).
        b: Reference dataset, usually ideal Trotter.
        focus_init: Initial state whose observable curves are kept.
        axes: Axes entering the overall MSE.
        exact: Exact dataset. Adds agreement horizons and, when B is ideal
               Trotter, the deviation curves of A from both references.
        tolerance: Agreement-horizon tolerance.
        a_path: File name of A, echoed in the report.
        b_path: File name of B, echoed in the report.
        force: Compare across lineage hashes.
        label: Name of the comparison in exported file names.

    Returns:
        MSE per axis and overall, curves, horizons and deviations.
    """
    check_lineage(a, b, force)
    axes = [Axis(x) for x in axes]
    shared = [x for x in Axis if x in a.axes and x in b.axes]
    by_axis = {x.value: mse(a, b, [x]) for x in shared}
    overall = mse(a, b, axes)
    observable = default_observable(a.header.model.kind, focus_init)
    curves: list[Curve] = [observable_curve(a, focus_init, observable)]
    if b.role is not a.role:
        curves.append(observable_curve(b, focus_init, observable))
    horizons: dict[str, float | None] = {}
    if exact is not None:
        check_lineage(a, exact, force)
        reference = observable_curve(exact, focus_init, observable)
        for curve in curves:
            horizons[curve.name] = agreement_horizon(curve, reference, tolerance)
        if exact.role not in (a.role, b.role):
            curves.append(reference)
    deviations: list[Curve] = []
    averaged: dict[str, float] = {}
    if exact is not None and b.role is Role.IDEAL_TROTTER and a.role is not Role.EXACT:
        deviations = list(deviation_curves(a, b, exact, focus_init, observable))
        own = curves[0]
        averaged = {
            "trotter": time_averaged_deviation(own, observable_curve(b, focus_init, observable)),
            "exact": time_averaged_deviation(own, reference),
        }
    logger.info("E(%s, %s) = %.4e on %s", a.role, b.role, overall, [x.value for x in axes])
    return ComparisonModel(
        a_role=a.role,
        b_role=b.role,
        a_path=a_path,
        b_path=b_path,
        axes=axes,
        mse_by_axis=by_axis,
        mse_overall=overall,
        scalars_compared=sum(1 for k in a.keys() if k[2] in axes),
        observable=observable,
        curves=[_curve_model(c) for c in curves],
        agreement_horizons=horizons,
        label=label,
        deviation_curves=[_curve_model(c) for c in deviations],
        time_averaged_deviation=averaged,
    )


def _curve_model(curve: Curve) -> CurveModel:
    return CurveModel(name=curve.name, times=curve.times.tolist(), values=curve.values.tolist())


def build_report(
    comparisons: Sequence[ComparisonModel],
    focus_init: str,
    config_hash: str,
    lineage_hash: str,
    metadata: dict[str, Any] | None = None,
    noise: NoiseSection | None = None,
) -> MetricReportModel:
    return MetricReportModel(
        focus_init=focus_init,
        comparisons=list(comparisons),
        config_hash=config_hash,
        lineage_hash=lineage_hash,
        noise=noise,
        metadata=metadata or {},
    )


def save_report(report: MetricReportModel, output_path: Path) -> Path:
    with atomic_write(Path(output_path)) as fh:
        fh.write(canonical_json(report.model_dump(mode="json")) + "\n")
    logger.info("Wrote report with %d comparisons to %s", len(report.comparisons), output_path)
    return Path(output_path)


def load_report(path: Path) -> MetricReportModel:
    path = Path(path)
    if not path.is_file():
        raise DatasetParseError(path, None, "file not found")
    try:
        return MetricReportModel.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise DatasetParseError(path, exc.lineno, f"invalid JSON ({exc.msg})") from exc
    except ValidationError as exc:
        raise DatasetParseError(path, 1, str(exc.errors()[0]["msg"])) from exc


def _curves(models: Sequence[CurveModel]) -> list[Curve]:
    return [Curve(c.name, c.times, c.values) for c in models]


def _stems(report: MetricReportModel) -> list[str]:
    """File stem per comparison: its label, else "<a>_vs_<b>", suffixed when repeated."""
    stems: list[str] = []
    for comparison in report.comparisons:
        stem = comparison.label or f"{comparison.a_role.value}_vs_{comparison.b_role.value}"
        if stem in stems:
            stem = f"{stem}_{len(stems)}"
        stems.append(stem)
    return stems


def export_report(report: MetricReportModel, output_dir: Path, fmt: str) -> list[Path]:
    """Write plot artifacts for a report.

    CSV: one file per observable and deviation curve. SVG: one chart per
    comparison, plus a deviation chart when the comparison carries one.
    Every file is stamped with the report's config hash and noise calibration.
    """
    output_dir = Path(output_dir)
    provenance = report.provenance
    written: list[Path] = []
    if fmt == "csv":
        from trotterml.reports.csv_export import write_curve_csv

        for stem, comparison in zip(_stems(report), report.comparisons):
            for curve in _curves(comparison.curves + comparison.deviation_curves):
                path = output_dir / f"{stem}__{curve.name}.csv"
                written.append(write_curve_csv(curve, path, provenance))
    elif fmt == "svg":
        from trotterml.reports.svg_plot import plot_curves

        for stem, comparison in zip(_stems(report), report.comparisons):
            title = (
                f"{comparison.observable} for |{report.focus_init}>, "
                f"E = {comparison.mse_overall:.3e}"
            )
            written.append(
                plot_curves(_curves(comparison.curves), title, output_dir / f"{stem}.svg",
                            y_label=comparison.observable, provenance=provenance)
            )
            if comparison.deviation_curves:
                avg = comparison.time_averaged_deviation
                title = (
                    f"{comparison.a_role.value} deviation, mean |d| "
                    f"{avg['trotter']:.3e} (Trotter), {avg['exact']:.3e} (exact)"
                )
                written.append(
                    plot_curves(_curves(comparison.deviation_curves), title,
                                output_dir / f"{stem}__deviation.svg",
                                y_label=f"delta {comparison.observable}", provenance=provenance)
                )
    else:
        raise ValueError(f"Unsupported format: {fmt}")
    return written


# ── Trotter-number sweep ──────────────────────────────────────────────────────


def write_sweep(
    rows: Sequence[SweepRow], output_dir: Path, provenance: Provenance | None = None
) -> list[Path]:
    """Summary of MSE against N2: JSON, CSV and one SVG chart.

    "raw" is always the unfiltered noisy data; post-selected raw data gets its
    own series when present.
    """
    from trotterml.reports.csv_export import write_sweep_csv
    from trotterml.reports.svg_plot import plot_curves

    output_dir = Path(output_dir)
    provenance = provenance or Provenance(config_hash="")
    rows = sorted(rows, key=lambda r: r.N2)
    json_path = output_dir / "sweep.json"
    summary = SweepFile(config_hash=provenance.config_hash, noise=provenance.noise, rows=rows)
    with atomic_write(json_path) as fh:
        fh.write(canonical_json(summary.model_dump(mode="json")) + "\n")
    n2 = [float(r.N2) for r in rows]
    series = [
        Curve("raw", n2, [r.raw_mse for r in rows]),
        Curve("mitigated", n2, [r.mitigated_mse for r in rows]),
    ]
    if all(r.raw_post_selected_mse is not None for r in rows):
        series.append(Curve("raw, post-selected", n2, [r.raw_post_selected_mse for r in rows]))
    if all(r.mitigated_no_post_select_mse is not None for r in rows):
        series.append(
            Curve("no post-selection", n2, [r.mitigated_no_post_select_mse for r in rows])
        )
    svg = plot_curves(series, "E(z) against ideal Trotter", output_dir / "sweep.svg",
                      y_label="MSE", provenance=provenance)
    return [json_path, write_sweep_csv(rows, output_dir / "sweep.csv", provenance), svg]
