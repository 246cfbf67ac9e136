"""Figures of merit: dataset MSE, magnetization curves, deviation curves, agreement horizon."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from trotterml.core.errors import AlignmentError, UndefinedObservableError
from trotterml.processing.datasets import ObservationDataset
from trotterml.simulation.qsim import Axis

GRID_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Curve:
    name: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.times.shape != self.values.shape:
            raise AlignmentError(
                f"curve {self.name}: {self.times.size} times, {self.values.size} values"
            )

    def __sub__(self, other: Curve) -> Curve:
        _check_grid(self, other)
        return Curve(f"{self.name}-{other.name}", self.times, self.values - other.values)


def _check_grid(a: Curve, b: Curve) -> None:
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=GRID_TOL):
        raise AlignmentError(f"curves {a.name} and {b.name} use different time grids")


def mse(
    a: ObservationDataset, b: ObservationDataset, axes: Sequence[Axis | str] = (Axis.Z,)
) -> float:
    """(1 / 2D) sum of squared differences over the shared keys on ``axes``.

    D is the number of compared scalars, so values are comparable across axis subsets.
    """
    wanted = {Axis(x) for x in axes}
    keys_a = {k for k in a.keys() if k[2] in wanted}
    keys_b = {k for k in b.keys() if k[2] in wanted}
    if keys_a != keys_b:
        raise AlignmentError(f"{a.role} and {b.role} datasets differ", sorted(keys_a ^ keys_b))
    if not keys_a:
        raise AlignmentError(f"no records on axes {sorted(x.value for x in wanted)}")
    keys = sorted(keys_a)
    va = np.array([a.value(*k) for k in keys])
    vb = np.array([b.value(*k) for k in keys])
    return float(np.sum((va - vb) ** 2) / (2.0 * len(keys)))


def mean_over_spins(z_values: np.ndarray) -> np.ndarray:
    """Row-wise mean of a (times, spins) array."""
    return np.asarray(z_values, dtype=float).mean(axis=-1)


def half_difference_of(z_values: np.ndarray, init: str) -> np.ndarray:
    """d = mean of m_j over initially-up spins minus mean over initially-down spins.

    Spin j is up when bit j of ``init`` is 1; m_j = 2 n_j - 1 = -<Z_j>.
    """
    up = [j for j, bit in enumerate(init) if bit == "1"]
    down = [j for j, bit in enumerate(init) if bit == "0"]
    if not up or not down:
        raise UndefinedObservableError(f"half-difference undefined for polarized state {init}")
    m = -np.asarray(z_values, dtype=float)
    return m[..., up].mean(axis=-1) - m[..., down].mean(axis=-1)


def mean_magnetization(ds: ObservationDataset, init: str, axis: Axis | str = Axis.Z) -> Curve:
    values = mean_over_spins(ds.values(init, axis))
    return Curve(f"{ds.role.value}", ds.times, values)


def half_difference(ds: ObservationDataset, init: str) -> Curve:
    return Curve(f"{ds.role.value}", ds.times, half_difference_of(ds.values(init, Axis.Z), init))


OBSERVABLES = {
    "mean_z": mean_magnetization,
    "half_difference": half_difference,
}


def observable_curve(ds: ObservationDataset, init: str, observable: str) -> Curve:
    try:
        return OBSERVABLES[observable](ds, init)
    except KeyError:
        raise UndefinedObservableError(f"unknown observable {observable!r}") from None


def deviation_curves(
    improved: ObservationDataset,
    ideal_trotter: ObservationDataset,
    exact: ObservationDataset,
    init: str,
    observable: str = "mean_z",
) -> tuple[Curve, Curve]:
    """(improved - ideal Trotter, improved - exact) for one initial state."""
    curve = observable_curve(improved, init, observable)
    trotter = observable_curve(ideal_trotter, init, observable)
    reference = observable_curve(exact, init, observable)
    d_trott = curve - trotter
    d_exact = curve - reference
    return (
        Curve("delta_trotter", d_trott.times, d_trott.values),
        Curve("delta_exact", d_exact.times, d_exact.values),
    )


def agreement_horizon(curve: Curve, reference: Curve, tolerance: float) -> float | None:
    """Largest grid time t with |curve - reference| <= tolerance at every point up to t.

    None when the first grid point already disagrees.
    """
    _check_grid(curve, reference)
    horizon = None
    for t, diff in zip(curve.times, np.abs(curve.values - reference.values)):
        if diff > tolerance:
            break
        horizon = float(t)
    return horizon


def time_averaged_deviation(curve: Curve, reference: Curve) -> float:
    _check_grid(curve, reference)
    return float(np.mean(np.abs(curve.values - reference.values)))
