"""Noise-free oracles: exact Schroedinger evolution and ideal Trotter circuits."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np
from scipy.linalg import eigh

from trotterml.core.config import settings
from trotterml.core.errors import CapabilityError, InvalidArgumentError
from trotterml.simulation.circuits import (
    ModelKind,
    SpinModel,
    Stage,
    TrotterSchedule,
    build_circuit,
    preparation,
    unitary,
)
from trotterml.simulation.qsim import (
    PAULI,
    Axis,
    NoiseModel,
    basis_state,
    expectation_pauli,
    run_circuit,
)

logger = logging.getLogger(__name__)

Observable = tuple[Axis, int]


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    model: SpinModel
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class ValueTable:
    """values[i, o] = expectation of observables[o] at times[i]."""

    times: np.ndarray
    observables: tuple[Observable, ...]
    values: np.ndarray

    def column(self, axis: Axis | str, qubit: int) -> np.ndarray:
        return self.values[:, self.observables.index((Axis(axis), qubit))]


def _site_operator(op: np.ndarray, site: int, num_spins: int) -> np.ndarray:
    factors = [op if j == site else np.eye(2) for j in range(num_spins)]
    return reduce(np.kron, factors)


def _bond_operator(op: np.ndarray, a: int, b: int, num_spins: int) -> np.ndarray:
    factors = [op if j in (a, b) else np.eye(2) for j in range(num_spins)]
    return reduce(np.kron, factors)


def hamiltonian(model: SpinModel) -> HamiltonianMatrix:
    """Dense chain Hamiltonian with the sign conventions as printed.

    TFIM: H = -h sum X_j - J sum Z_j Z_{j+1}
    XY:   H = -h sum Z_j - J sum (X_j X_{j+1} + Y_j Y_{j+1})
    """
    n = model.num_spins
    if n > settings.max_qubits:
        raise CapabilityError(f"dense Hamiltonian limited to {settings.max_qubits} spins, got {n}")
    dim = 2**n
    h = np.zeros((dim, dim), dtype=np.complex128)
    field = PAULI[Axis.X] if model.kind is ModelKind.TFIM else PAULI[Axis.Z]
    for j in range(n):
        h -= model.h * _site_operator(field, j, n)
    for a in range(n - 1):
        b = a + 1
        if model.kind is ModelKind.TFIM:
            h -= model.J * _bond_operator(PAULI[Axis.Z], a, b, n)
        else:
            h -= model.J * _bond_operator(PAULI[Axis.X], a, b, n)
            h -= model.J * _bond_operator(PAULI[Axis.Y], a, b, n)
    return HamiltonianMatrix(model=model, matrix=h)


@lru_cache(maxsize=16)
def _spectrum(model: SpinModel) -> tuple[np.ndarray, np.ndarray]:
    energies, vectors = eigh(hamiltonian(model).matrix)
    return energies, vectors


def _observable_list(
    observables: Sequence[tuple[Axis | str, int]] | None, num_spins: int
) -> tuple[Observable, ...]:
    if observables is None:
        return tuple((Axis.Z, j) for j in range(num_spins))
    return tuple((Axis(a), int(q)) for a, q in observables)


def exact_expectations(
    model: SpinModel,
    init: str,
    grid: Sequence[float],
    observables: Sequence[tuple[Axis | str, int]] | None = None,
) -> ValueTable:
    """<psi(t)|P|psi(t)> with |psi(t)> = exp(-iHt)|init>, via eigendecomposition."""
    n = model.num_spins
    obs = _observable_list(observables, n)
    if len(init) != n or set(init) - {"0", "1"}:
        raise InvalidArgumentError(f"{init!r} is not a {n}-spin basis label")
    energies, vectors = _spectrum(model)
    psi0 = np.zeros(2**n, dtype=np.complex128)
    psi0[int(init, 2)] = 1.0
    amplitudes = vectors.conj().T @ psi0
    ops = [_site_operator(PAULI[axis], q, n) for axis, q in obs]
    times = np.asarray(grid, dtype=float)
    values = np.empty((times.size, len(obs)))
    for i, t in enumerate(times):
        psi = vectors @ (np.exp(-1j * energies * t) * amplitudes)
        for o, op in enumerate(ops):
            values[i, o] = float(np.real(np.vdot(psi, op @ psi)))
    return ValueTable(times=times, observables=obs, values=values)


def ideal_trotter_expectations(
    model: SpinModel,
    init: str,
    N: int,
    grid: Sequence[float],
    observables: Sequence[tuple[Axis | str, int]] | None = None,
) -> ValueTable:
    """Noise-free N-step Trotter circuit per time point (the 'ideal simulation' curves)."""
    if N < 1:
        raise InvalidArgumentError(f"Trotter number must be >= 1, got {N}")
    n = model.num_spins
    obs = _observable_list(observables, n)
    times = np.asarray(grid, dtype=float)
    noiseless = NoiseModel.noiseless(n)
    start = run_circuit(basis_state(n, "0" * n), preparation(init), noiseless)
    horizon = float(times.max()) if times.size else 1.0
    schedule = TrotterSchedule(N1=N, c=1, T=max(horizon, 1e-12), K=1)
    values = np.empty((times.size, len(obs)))
    for i, t in enumerate(times):
        if t <= 0.0:
            rho = start
        else:
            rho = run_circuit(start, build_circuit(model, schedule, t, Stage.EVAL_NOISY), noiseless)
        for o, (axis, q) in enumerate(obs):
            values[i, o] = expectation_pauli(rho, axis, q)
    return ValueTable(times=times, observables=obs, values=values)


@dataclass(frozen=True)
class ConvergenceStudy:
    """Trotter error against N at one time.

    ``errors`` holds the mean z-magnetization deviation. For a real Hamiltonian
    and a basis-state input its first-order term cancels, so it falls like 1/N^2.
    ``operator_errors`` holds the spectral-norm distance of the step product to
    the exact propagator, which falls like 1/N.
    """

    t: float
    errors: dict[int, float]
    operator_errors: dict[int, float] = field(default_factory=dict)

    @property
    def ratios(self) -> dict[int, float]:
        """err(N) / err(2N) for every N whose double is also present."""
        return _doubling_ratios(self.errors)

    @property
    def operator_ratios(self) -> dict[int, float]:
        return _doubling_ratios(self.operator_errors)


def _doubling_ratios(errors: dict[int, float]) -> dict[int, float]:
    return {n: errors[n] / errors[2 * n] for n in errors if 2 * n in errors and errors[2 * n] > 0}


def mean_z(table: ValueTable, num_spins: int) -> np.ndarray:
    return np.mean([table.column(Axis.Z, j) for j in range(num_spins)], axis=0)


def convergence_study(
    model: SpinModel, init: str, trotter_numbers: Sequence[int], t: float
) -> ConvergenceStudy:
    """Mean z-magnetization and propagator errors at time ``t`` for several N.

    Args:
        model: Spin chain, small enough for dense diagonalization.
        init: Computational-basis initial state.
        trotter_numbers: Step counts to evaluate.
        t: Evolution time.

    Returns:
        Absolute errors per N of the mean z-magnetization and of the propagator.
    """
    exact = mean_z(exact_expectations(model, init, [t]), model.num_spins)[0]
    errors, operator_errors = {}, {}
    for n in map(int, trotter_numbers):
        trotter = mean_z(ideal_trotter_expectations(model, init, n, [t]), model.num_spins)[0]
        errors[n] = abs(float(trotter - exact))
        operator_errors[n] = trotter_operator_error(model, n, t)
        logger.debug("N=%d: error %.3e, operator error %.3e", n, errors[n], operator_errors[n])
    return ConvergenceStudy(t=t, errors=errors, operator_errors=operator_errors)


def trotter_operator_error(model: SpinModel, N: int, t: float) -> float:
    """Spectral norm of U_N(t) - exp(iHt).

    The circuit realizes the split evolution generated by -H, so its exact
    counterpart is exp(+iHt); for real H this equals the distance between the
    usual exp(-iHt) product formula and exp(-iHt).
    """
    if N < 1:
        raise InvalidArgumentError(f"Trotter number must be >= 1, got {N}")
    if t <= 0.0:
        return 0.0
    energies, vectors = _spectrum(model)
    exact = (vectors * np.exp(1j * energies * t)) @ vectors.conj().T
    schedule = TrotterSchedule(N1=N, c=1, T=t, K=1)
    circuit = unitary(build_circuit(model, schedule, t, Stage.EVAL_NOISY), model.num_spins)
    return float(np.linalg.norm(circuit - exact, ord=2))
