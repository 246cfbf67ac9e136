"""Trotter-step gate sequences and the three-stage circuit layouts.

Rotation angles follow phi1 = 2 h dt and phi2 = 2 J dt with
R(phi) = exp(-i phi P / 2), so a step realizes the split evolution generated
by -H. Both chain Hamiltonians are real, hence for computational-basis inputs
<X> and <Z> match exp(-iHt) and <Y> changes sign.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from trotterml.core.errors import InvalidArgumentError
from trotterml.simulation.qsim import Gate, GateKind

logger = logging.getLogger(__name__)

MAX_EMPTY_ANGLE = 1e-2
_TIME_SLACK = 1e-12


class ModelKind(StrEnum):
    TFIM = "tfim"
    XY = "xy"


class Layout(StrEnum):
    INTERLEAVED = "interleaved"
    APPENDED = "appended"
    CUSTOM = "custom"


class Stage(StrEnum):
    QUASI_IDEAL = "quasi_ideal"
    TRAINING_NOISY = "training_noisy"
    EVAL_NOISY = "eval_noisy"


class Block(StrEnum):
    REAL = "real"
    EMPTY = "empty"


@dataclass(frozen=True)
class SpinModel:
    """Open nearest-neighbour chain. A single spin has no bonds."""

    kind: ModelKind
    num_spins: int
    J: float = 2.0
    h: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.num_spins < 1:
            raise InvalidArgumentError(f"chain needs at least one spin, got {self.num_spins}")

    @property
    def bonds(self) -> list[tuple[int, int]]:
        """Even bonds first, then odd bonds."""
        even = [(j, j + 1) for j in range(0, self.num_spins - 1, 2)]
        odd = [(j, j + 1) for j in range(1, self.num_spins - 1, 2)]
        return even + odd


@dataclass(frozen=True)
class TrotterSchedule:
    N1: int = 2
    c: int = 2
    T: float = 1.0
    K: int = 20
    layout: Layout = Layout.INTERLEAVED
    custom_permutation: tuple[int, ...] | None = None
    epsilon_angle: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "layout", Layout(self.layout))
        if self.N1 < 1 or self.c < 1 or self.K < 1:
            raise InvalidArgumentError("N1, c and K must all be >= 1")
        if not self.T > 0:
            raise InvalidArgumentError(f"total time T must be positive, got {self.T}")
        if abs(self.epsilon_angle) > MAX_EMPTY_ANGLE:
            raise InvalidArgumentError(
                f"|epsilon_angle| must be <= {MAX_EMPTY_ANGLE}, got {self.epsilon_angle}"
            )
        if self.layout is Layout.CUSTOM:
            perm = tuple(int(p) for p in self.custom_permutation or ())
            if sorted(perm) != list(range(self.N2)):
                raise InvalidArgumentError(
                    f"custom_permutation must be a permutation of 0..{self.N2 - 1}"
                )
            object.__setattr__(self, "custom_permutation", perm)

    @property
    def N2(self) -> int:
        return self.c * self.N1


@dataclass(frozen=True)
class GateSequence:
    """Ordered gates; ``noise_tags`` says which channel follows each gate."""

    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: GateSequence) -> GateSequence:
        return GateSequence(self.gates + other.gates)

    @property
    def noise_tags(self) -> tuple[str, ...]:
        return tuple("2q" if g.is_two_qubit else "1q" for g in self.gates)

    def kind_counts(self) -> Counter:
        return Counter(g.kind for g in self.gates)

    def structure(self) -> list[tuple[str, tuple[int, ...]]]:
        """(kind, targets) per gate, angles dropped."""
        return [(g.kind.value, g.targets) for g in self.gates]

    def check_chain(self, num_spins: int) -> None:
        for gate in self.gates:
            if any(t >= num_spins for t in gate.targets):
                raise InvalidArgumentError(f"{gate} acts outside a {num_spins}-spin chain")
            if gate.is_two_qubit and abs(gate.targets[0] - gate.targets[1]) != 1:
                raise InvalidArgumentError(f"{gate} is not nearest-neighbour")

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"kind": g.kind.value, "targets": list(g.targets), "angle": g.angle},
                sort_keys=True,
            )
            for g in self.gates
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> GateSequence:
        gates = []
        for line in text.splitlines():
            if line.strip():
                row = json.loads(line)
                gates.append(Gate(GateKind(row["kind"]), tuple(row["targets"]), row["angle"]))
        return cls(tuple(gates))


# ── Blocks ────────────────────────────────────────────────────────────────────


def _zz_block(a: int, b: int, angle: float) -> list[Gate]:
    return [
        Gate(GateKind.CNOT, (a, b)),
        Gate(GateKind.RZ, (b,), angle),
        Gate(GateKind.CNOT, (a, b)),
    ]


def _xx_block(a: int, b: int, angle: float) -> list[Gate]:
    change = [Gate(GateKind.H, (a,)), Gate(GateKind.H, (b,))]
    return change + _zz_block(a, b, angle) + change


def _yy_block(a: int, b: int, angle: float) -> list[Gate]:
    into = [
        Gate(GateKind.SDG, (a,)),
        Gate(GateKind.SDG, (b,)),
        Gate(GateKind.H, (a,)),
        Gate(GateKind.H, (b,)),
    ]
    back = [
        Gate(GateKind.H, (a,)),
        Gate(GateKind.H, (b,)),
        Gate(GateKind.S, (a,)),
        Gate(GateKind.S, (b,)),
    ]
    return into + _zz_block(a, b, angle) + back


def _step(model: SpinModel, phi1: float, phi2: float) -> GateSequence:
    gates: list[Gate] = []
    if model.kind is ModelKind.TFIM:
        gates += [Gate(GateKind.RX, (j,), phi1) for j in range(model.num_spins)]
        for a, b in model.bonds:
            gates += _zz_block(a, b, phi2)
    else:
        gates += [Gate(GateKind.RZ, (j,), phi1) for j in range(model.num_spins)]
        for a, b in model.bonds:
            gates += _xx_block(a, b, phi2)
            gates += _yy_block(a, b, phi2)
    return GateSequence(tuple(gates))


def trotter_step(model: SpinModel, dt: float) -> GateSequence:
    """One first-order Trotter step of length ``dt``."""
    if dt < 0:
        raise InvalidArgumentError(f"dt must be >= 0, got {dt}")
    return _step(model, 2.0 * model.h * dt, 2.0 * model.J * dt)


def empty_step(model: SpinModel, epsilon_angle: float = 0.0) -> GateSequence:
    """A step-shaped block whose every rotation angle is ``epsilon_angle``."""
    if abs(epsilon_angle) > MAX_EMPTY_ANGLE:
        raise InvalidArgumentError(
            f"|epsilon_angle| must be <= {MAX_EMPTY_ANGLE}, got {epsilon_angle}"
        )
    return _step(model, epsilon_angle, epsilon_angle)


def preparation(bits: str) -> GateSequence:
    """X gates on the 1-bits of a computational basis label."""
    return GateSequence(tuple(Gate(GateKind.X, (j,)) for j, b in enumerate(bits) if b == "1"))


# ── Stage layouts ─────────────────────────────────────────────────────────────


def block_pattern(schedule: TrotterSchedule, stage: Stage | str) -> list[Block]:
    stage = Stage(stage)
    if stage is Stage.QUASI_IDEAL:
        return [Block.REAL] * schedule.N1
    if stage is Stage.EVAL_NOISY:
        return [Block.REAL] * schedule.N2
    if schedule.layout is Layout.INTERLEAVED:
        return ([Block.REAL] + [Block.EMPTY] * (schedule.c - 1)) * schedule.N1
    if schedule.layout is Layout.APPENDED:
        return [Block.REAL] * schedule.N1 + [Block.EMPTY] * (schedule.N2 - schedule.N1)
    return [Block.REAL if p < schedule.N1 else Block.EMPTY for p in schedule.custom_permutation]


def time_grid(schedule: TrotterSchedule) -> list[float]:
    """t_i = i T / K for i = 1..K."""
    return [i * schedule.T / schedule.K for i in range(1, schedule.K + 1)]


def build_circuit(
    model: SpinModel, schedule: TrotterSchedule, t: float, stage: Stage | str
) -> GateSequence:
    """Evolution blocks for one time point of one stage (no state preparation).

    Args:
        model: Spin chain to evolve.
        schedule: Trotter numbers, layout and horizon.
        t: Evolution time, in (0, T].
        stage: Which block pattern to lay out.

    Returns:
        Gates with noise tags; evaluation runs N2 real steps, the other stages N1.
    """
    stage = Stage(stage)
    if not 0.0 < t <= schedule.T + _TIME_SLACK:
        raise InvalidArgumentError(f"time {t} outside (0, {schedule.T}]")
    pattern = block_pattern(schedule, stage)
    real_steps = schedule.N2 if stage is Stage.EVAL_NOISY else schedule.N1
    real = trotter_step(model, t / real_steps)
    empty = empty_step(model, schedule.epsilon_angle)
    circuit = GateSequence()
    for block in pattern:
        circuit = circuit + (real if block is Block.REAL else empty)
    return circuit


def unitary(gates: Iterable[Gate], num_qubits: int) -> np.ndarray:
    """Dense unitary of a gate sequence (oracle and debugging aid)."""
    dim = 2**num_qubits
    u = np.eye(dim, dtype=np.complex128)
    for gate in gates:
        u = embed(gate.matrix(), gate.targets, num_qubits) @ u
    return u


def embed(op: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Lift a local operator on ``targets`` to the full register."""
    others = [q for q in range(num_qubits) if q not in targets]
    full = np.kron(op, np.eye(2 ** len(others)))
    order = list(targets) + others
    tensor = full.reshape((2,) * (2 * num_qubits))
    inverse = list(np.argsort(order))
    tensor = tensor.transpose(inverse + [num_qubits + i for i in inverse])
    return tensor.reshape(2**num_qubits, 2**num_qubits)
