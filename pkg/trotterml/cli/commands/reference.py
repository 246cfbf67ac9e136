"""reference: exact and ideal-Trotter datasets plus a Trotter convergence study."""

from __future__ import annotations

import logging
from pathlib import Path

from trotterml.cli.commands.common import RunPaths
from trotterml.core.storage import atomic_write, canonical_json
from trotterml.processing.dataset_io import save_dataset
from trotterml.processing.datasets import reference_dataset, select_init_states
from trotterml.schemas.models import Role, RunConfig
from trotterml.simulation.reference import convergence_study

logger = logging.getLogger(__name__)

CONVERGENCE_STEPS = (2, 4, 8, 16, 32, 64, 128)


def cmd_reference(
    config: RunConfig, paths: RunPaths | None = None, convergence: bool = True
) -> list[Path]:
    paths = paths or RunPaths(config.output.directory)
    model = config.spin_model()
    schedule = config.trotter_schedule()
    states = select_init_states(config)
    written = []
    for role in (Role.EXACT, Role.IDEAL_TROTTER):
        ds = reference_dataset(model, schedule, role, states, config.axes, config.config_hash())
        written.append(save_dataset(ds, paths.dataset(role)))
    if convergence:
        study = convergence_study(model, config.focus_init, CONVERGENCE_STEPS, schedule.T)
        path = paths.reports / "convergence.json"
        payload = {
            "init_state": config.focus_init,
            "t": study.t,
            "errors": {str(n): e for n, e in sorted(study.errors.items())},
            "ratios": {str(n): r for n, r in sorted(study.ratios.items())},
            "operator_errors": {str(n): e for n, e in sorted(study.operator_errors.items())},
            "operator_ratios": {str(n): r for n, r in sorted(study.operator_ratios.items())},
            **config.provenance.model_dump(mode="json"),
        }
        with atomic_write(path) as fh:
            fh.write(canonical_json(payload) + "\n")
        written.append(path)
    return written
