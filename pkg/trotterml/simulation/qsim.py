"""Dense density-matrix simulator standing in for a small noisy processor.

Qubit 0 is the leftmost character of every bitstring and the most significant
bit of every basis index. All operations are pure: they return new
``DensityMatrix`` values and never mutate their inputs.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from trotterml.core.config import settings
from trotterml.core.errors import (
    CapabilityError,
    InvalidArgumentError,
    MeasurementContractError,
    QuantumStateError,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


class Axis(StrEnum):
    X = "x"
    Y = "y"
    Z = "z"


class GateKind(StrEnum):
    RX = "rx"
    RZ = "rz"
    X = "x"
    H = "h"
    S = "s"
    SDG = "sdg"
    CNOT = "cnot"


ROTATIONS = frozenset({GateKind.RX, GateKind.RZ})

_SQRT_HALF = 1.0 / np.sqrt(2.0)

PAULI = {
    Axis.X: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    Axis.Y: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    Axis.Z: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_FIXED_MATRICES = {
    GateKind.X: PAULI[Axis.X],
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT_HALF,
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=np.complex128),
    GateKind.SDG: np.array([[1, 0], [0, -1j]], dtype=np.complex128),
    GateKind.CNOT: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    ),
}


# ── Types ─────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Gate:
    """One ideal gate. ``targets`` is (control, target) for CNOT."""

    kind: GateKind
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        expected = 2 if self.kind is GateKind.CNOT else 1
        if len(self.targets) != expected:
            raise InvalidArgumentError(
                f"{self.kind.value} takes {expected} target(s), got {list(self.targets)}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise InvalidArgumentError(f"gate targets must be distinct: {list(self.targets)}")
        if any(t < 0 for t in self.targets):
            raise InvalidArgumentError(f"negative qubit index in {list(self.targets)}")
        if self.kind in ROTATIONS:
            if self.angle is None or not np.isfinite(self.angle):
                raise InvalidArgumentError(f"{self.kind.value} needs a finite angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise InvalidArgumentError(f"{self.kind.value} takes no angle")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind is GateKind.CNOT

    def matrix(self) -> np.ndarray:
        """Local unitary acting on ``targets`` (first target most significant)."""
        if self.kind is GateKind.RX:
            c, s = np.cos(self.angle / 2), np.sin(self.angle / 2)
            return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
        if self.kind is GateKind.RZ:
            phase = np.exp(-0.5j * self.angle)
            return np.array([[phase, 0], [0, np.conj(phase)]], dtype=np.complex128)
        return _FIXED_MATRICES[self.kind]


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate noise plus per-qubit readout confusion.

    ``readout[q] = (eps01, eps10)`` with eps01 = P(read 1 | true 0) and
    eps10 = P(read 0 | true 1).
    """

    p1: float = 0.0
    p2: float = 0.0
    readout: tuple[tuple[float, float], ...] = ()
    enabled: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "readout", tuple((float(a), float(b)) for a, b in self.readout)
        )
        values = [self.p1, self.p2] + [x for pair in self.readout for x in pair]
        for value in values:
            if not 0.0 <= value <= 1.0:
                raise InvalidArgumentError(f"noise probability {value} outside [0, 1]")

    @classmethod
    def uniform(
        cls,
        num_qubits: int,
        p1: float = 5e-4,
        p2: float = 1.2e-2,
        eps01: float = 0.02,
        eps10: float = 0.02,
        enabled: bool = True,
    ) -> NoiseModel:
        return cls(p1=p1, p2=p2, readout=((eps01, eps10),) * num_qubits, enabled=enabled)

    @classmethod
    def noiseless(cls, num_qubits: int = 0) -> NoiseModel:
        return cls(readout=((0.0, 0.0),) * num_qubits, enabled=False)

    def readout_for(self, qubit: int) -> tuple[float, float]:
        if not self.enabled or qubit >= len(self.readout):
            return (0.0, 0.0)
        return self.readout[qubit]

    @property
    def has_readout_error(self) -> bool:
        return self.enabled and any(a > 0 or b > 0 for a, b in self.readout)


@dataclass(frozen=True)
class ShotHistogram:
    """Measured bitstring counts; qubit 0 is the leftmost character."""

    counts: Mapping[str, int]
    shots: int
    num_qubits: int = field(default=0)

    def __post_init__(self) -> None:
        counts = {str(k): int(v) for k, v in sorted(self.counts.items()) if int(v) != 0}
        if any(v < 0 for v in counts.values()):
            raise InvalidArgumentError("counts must be nonnegative")
        if sum(counts.values()) != self.shots:
            raise InvalidArgumentError(
                f"counts sum to {sum(counts.values())}, expected shots={self.shots}"
            )
        widths = {len(k) for k in counts}
        if len(widths) > 1:
            raise InvalidArgumentError("bitstrings of mixed length in histogram")
        object.__setattr__(self, "counts", counts)
        if not self.num_qubits:
            object.__setattr__(self, "num_qubits", widths.pop() if widths else 0)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Immutable 2^n x 2^n density matrix."""

    num_qubits: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.complex128, copy=True)
        dim = 2**self.num_qubits
        if entries.shape != (dim, dim):
            raise InvalidArgumentError(
                f"entries shape {entries.shape} does not match {self.num_qubits} qubits"
            )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries, self.entries)))

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def check(self, psd: bool | None = None) -> None:
        """Raise QuantumStateError if the state invariants are violated."""
        herm = np.max(np.abs(self.entries - self.entries.conj().T))
        if herm > HERMITIAN_TOL:
            raise QuantumStateError(f"density matrix not Hermitian (residual {herm:.3e})")
        if abs(self.trace() - 1.0) > TRACE_TOL:
            raise QuantumStateError(f"density matrix trace {self.trace():.12f} != 1")
        if psd if psd is not None else settings.debug_checks:
            smallest = float(np.min(np.linalg.eigvalsh(self.entries)))
            if smallest < -PSD_TOL:
                raise QuantumStateError(f"density matrix has eigenvalue {smallest:.3e}")


# ── Tensor helpers ────────────────────────────────────────────────────────────


def _check_qubits(num_qubits: int, qubits: Iterable[int]) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise InvalidArgumentError(f"qubit {q} out of range for {num_qubits} qubits")
    if len(set(qubits)) != len(qubits):
        raise InvalidArgumentError(f"repeated qubit in {list(qubits)}")
    return qubits


def _hermitize(entries: np.ndarray) -> np.ndarray:
    return 0.5 * (entries + entries.conj().T)


def _apply_local(entries: np.ndarray, op: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Return op . rho . op^dagger with ``op`` acting on ``qubits`` only."""
    k = len(qubits)
    dim = 2**n
    tensor = entries.reshape((2,) * (2 * n))
    op_t = op.reshape((2,) * (2 * k))
    ins = list(range(k, 2 * k))
    tensor = np.tensordot(op_t, tensor, axes=(ins, list(qubits)))
    tensor = np.moveaxis(tensor, list(range(k)), list(qubits))
    cols = [n + q for q in qubits]
    tensor = np.tensordot(tensor, op_t.conj(), axes=(cols, ins))
    tensor = np.moveaxis(tensor, list(range(2 * n - k, 2 * n)), cols)
    return tensor.reshape(dim, dim)


def _split(entries: np.ndarray, qubits: Sequence[int], n: int) -> tuple[np.ndarray, list[int]]:
    """Permute rho so ``qubits`` come first: shape (dk, drest, dk, drest)."""
    others = [q for q in range(n) if q not in qubits]
    perm = list(qubits) + others + [n + q for q in qubits] + [n + q for q in others]
    k = len(qubits)
    tensor = entries.reshape((2,) * (2 * n)).transpose(perm)
    return tensor.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k)), perm


def reduced_density(rho: DensityMatrix, qubits: Sequence[int]) -> np.ndarray:
    """Partial trace keeping ``qubits`` (in the given order)."""
    qubits = _check_qubits(rho.num_qubits, qubits)
    blocks, _ = _split(rho.entries, qubits, rho.num_qubits)
    return np.einsum("ajbj->ab", blocks)


def purity(rho: DensityMatrix) -> float:
    return rho.purity()


# ── Operations ────────────────────────────────────────────────────────────────


def basis_state(num_qubits: int, bits: str) -> DensityMatrix:
    """|bits><bits|."""
    if num_qubits > settings.max_qubits:
        raise CapabilityError(f"{num_qubits} qubits exceeds the {settings.max_qubits}-qubit limit")
    if len(bits) != num_qubits or set(bits) - {"0", "1"}:
        raise InvalidArgumentError(f"bitstring {bits!r} is not a {num_qubits}-qubit basis label")
    entries = np.zeros((2**num_qubits, 2**num_qubits), dtype=np.complex128)
    index = int(bits, 2) if bits else 0
    entries[index, index] = 1.0
    return DensityMatrix(num_qubits, entries)


def apply_gate(rho: DensityMatrix, gate: Gate) -> DensityMatrix:
    """U rho U^dagger for one ideal gate."""
    qubits = _check_qubits(rho.num_qubits, gate.targets)
    entries = _apply_local(rho.entries, gate.matrix(), qubits, rho.num_qubits)
    return DensityMatrix(rho.num_qubits, _hermitize(entries))


def apply_depolarizing(rho: DensityMatrix, qubits: Sequence[int], p: float) -> DensityMatrix:
    """Depolarizing channel on one or two qubits.

    One qubit: (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z). Two qubits: weight
    p spread uniformly over the 15 non-identity Pauli pairs. Both are evaluated
    through the Pauli-twirl identity sum_P P rho P = d^2 (I/d (x) Tr_Q rho),
    i.e. rho' = (1 - lam) rho + lam (I/d (x) Tr_Q rho) with lam = p d^2/(d^2-1).
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"depolarizing probability {p} outside [0, 1]")
    qubits = _check_qubits(rho.num_qubits, qubits)
    if len(qubits) not in (1, 2):
        raise InvalidArgumentError("depolarizing channel acts on 1 or 2 qubits")
    if p == 0.0:
        return rho
    n = rho.num_qubits
    d = 2 ** len(qubits)
    lam = p * d * d / (d * d - 1)
    blocks, perm = _split(rho.entries, qubits, n)
    rest = np.einsum("iaib->ab", blocks)
    mixed = np.einsum("ij,ab->iajb", np.eye(d) / d, rest)
    mixed = mixed.reshape((2,) * (2 * n)).transpose(np.argsort(perm)).reshape(rho.dim, rho.dim)
    entries = (1.0 - lam) * rho.entries + lam * mixed
    return DensityMatrix(n, _hermitize(entries))


def run_circuit(rho: DensityMatrix, gates: Iterable[Gate], noise: NoiseModel) -> DensityMatrix:
    """Apply gates in order, each followed by its depolarizing channel."""
    for gate in gates:
        rho = apply_gate(rho, gate)
        if noise.enabled:
            p = noise.p2 if gate.is_two_qubit else noise.p1
            if p > 0.0:
                rho = apply_depolarizing(rho, gate.targets, p)
    if settings.debug_checks:
        rho.check(psd=True)
    return rho


def prerotation(axis: Axis | str, qubits: Iterable[int]) -> list[Gate]:
    """Basis change that maps ``axis`` onto Z before a computational readout."""
    axis = Axis(axis)
    gates: list[Gate] = []
    for q in qubits:
        if axis is Axis.X:
            gates.append(Gate(GateKind.H, (q,)))
        elif axis is Axis.Y:
            gates.append(Gate(GateKind.SDG, (q,)))
            gates.append(Gate(GateKind.H, (q,)))
    return gates


def expectation_pauli(rho: DensityMatrix, axis: Axis | str, qubit: int) -> float:
    """Tr(rho P_qubit)."""
    reduced = reduced_density(rho, (qubit,))
    value = np.trace(reduced @ PAULI[Axis(axis)])
    return float(np.real(value))


def _confusion(eps01: float, eps10: float) -> np.ndarray:
    # column = true bit, row = reported bit
    return np.array([[1.0 - eps01, eps10], [eps01, 1.0 - eps10]])


def measurement_probabilities(rho: DensityMatrix, noise: NoiseModel) -> np.ndarray:
    """Outcome distribution over basis indices, readout confusion included."""
    probs = rho.probabilities()
    total = probs.sum()
    if abs(total - 1.0) > TRACE_TOL or np.min(probs) < -PSD_TOL:
        raise QuantumStateError(f"state is not normalized (sum of populations {total:.12f})")
    probs = np.clip(probs, 0.0, None)
    if noise.has_readout_error:
        n = rho.num_qubits
        tensor = probs.reshape((2,) * n)
        for q in range(n):
            matrix = _confusion(*noise.readout_for(q))
            tensor = np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [q])), 0, q)
        probs = tensor.reshape(-1)
    return probs / probs.sum()


def _label(index: int, num_qubits: int) -> str:
    return format(index, f"0{num_qubits}b")


def sample_counts(
    rho: DensityMatrix, shots: int, noise: NoiseModel, seed: int
) -> ShotHistogram:
    """Draw ``shots`` readouts, including readout flips, deterministically per seed.

    Counts are one multinomial draw over the readout-confused distribution,
    which has the same law as flipping each sampled bit independently.
    """
    if shots <= 0:
        raise InvalidArgumentError(f"shots must be positive, got {shots}")
    probs = measurement_probabilities(rho, noise)
    rng = np.random.default_rng(seed)
    drawn = rng.multinomial(shots, probs)
    counts = {
        _label(i, rho.num_qubits): int(c) for i, c in enumerate(drawn) if c
    }
    return ShotHistogram(counts=counts, shots=shots, num_qubits=rho.num_qubits)


def expectation_from_counts(
    h: ShotHistogram, axis: Axis | str, qubit: int, prerotated: bool
) -> float:
    """(N_0 - N_1) / shots on one qubit's bit."""
    axis = Axis(axis)
    if axis is not Axis.Z and not prerotated:
        raise MeasurementContractError(
            f"<{axis.value.upper()}> needs counts sampled after the {axis.value} pre-rotation"
        )
    if h.shots <= 0:
        raise InvalidArgumentError("histogram has no shots")
    if not 0 <= qubit < h.num_qubits:
        raise InvalidArgumentError(f"qubit {qubit} out of range for {h.num_qubits} qubits")
    ones = sum(c for bits, c in h.counts.items() if bits[qubit] == "1")
    return (h.shots - 2 * ones) / h.shots


def expectation_from_probabilities(probs: np.ndarray, qubit: int, num_qubits: int) -> float:
    """Exact-mode analogue of ``expectation_from_counts``."""
    signs = 1 - 2 * ((np.arange(probs.size) >> (num_qubits - 1 - qubit)) & 1)
    return float(np.dot(signs, probs))
