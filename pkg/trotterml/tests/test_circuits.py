"""Tests for Trotter steps, empty blocks and stage layouts."""

from __future__ import annotations

from functools import reduce

import numpy as np
import pytest
from scipy.linalg import expm

from trotterml.core.errors import InvalidArgumentError
from trotterml.simulation.circuits import (
    Block,
    GateSequence,
    Layout,
    ModelKind,
    SpinModel,
    Stage,
    TrotterSchedule,
    block_pattern,
    build_circuit,
    empty_step,
    preparation,
    time_grid,
    trotter_step,
    unitary,
)
from trotterml.simulation.qsim import PAULI, Axis, GateKind

X, Y, Z = PAULI[Axis.X], PAULI[Axis.Y], PAULI[Axis.Z]
I2 = np.eye(2)


def _kron(*ops):
    return reduce(np.kron, ops)


def _same_up_to_phase(a: np.ndarray, b: np.ndarray) -> bool:
    overlap = np.trace(a.conj().T @ b) / a.shape[0]
    return abs(abs(overlap) - 1.0) < 1e-10


class TestTrotterStep:
    """One step compiled to gates against the dense split evolution."""

    def test_tfim_two_spins(self):
        model = SpinModel(ModelKind.TFIM, 2, J=2.0, h=1.0)
        dt = 0.13
        got = unitary(trotter_step(model, dt), 2)
        expected = expm(-1j * model.J * dt * _kron(Z, Z)) @ expm(
            -1j * model.h * dt * (_kron(X, I2) + _kron(I2, X))
        )
        assert _same_up_to_phase(got, expected)

    def test_xy_two_spins(self):
        model = SpinModel(ModelKind.XY, 2, J=2.0, h=1.0)
        dt = 0.21
        got = unitary(trotter_step(model, dt), 2)
        expected = expm(-1j * model.J * dt * (_kron(X, X) + _kron(Y, Y))) @ expm(
            -1j * model.h * dt * (_kron(Z, I2) + _kron(I2, Z))
        )
        assert _same_up_to_phase(got, expected)

    def test_xy_step_conserves_excitations(self):
        """Test that one XY step commutes with the excitation number."""
        model = SpinModel(ModelKind.XY, 4)
        u = unitary(trotter_step(model, 0.3), 4)
        popcount = np.array([bin(i).count("1") for i in range(16)])
        leak = np.abs(u[popcount[:, None] != popcount[None, :]])
        assert leak.max() < 1e-12

    def test_bond_order_even_then_odd(self):
        """Test that even bonds are applied before odd bonds within a step."""
        model = SpinModel(ModelKind.TFIM, 5)
        cnots = [g.targets for g in trotter_step(model, 0.1) if g.kind is GateKind.CNOT]
        assert cnots[::2] == [(0, 1), (2, 3), (1, 2), (3, 4)]

    def test_nearest_neighbour_only(self):
        for kind in ModelKind:
            trotter_step(SpinModel(kind, 5), 0.1).check_chain(5)

    def test_single_spin_has_no_bonds(self):
        seq = trotter_step(SpinModel(ModelKind.TFIM, 1), 0.1)
        assert [g.kind for g in seq] == [GateKind.RX]

    def test_negative_dt_rejected(self):
        with pytest.raises(InvalidArgumentError):
            trotter_step(SpinModel(ModelKind.TFIM, 2), -0.1)


class TestEmptyBlock:
    """Tests for the zero-angle block inserted between Trotter steps."""

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_zero_angle_block_is_identity(self, kind):
        model = SpinModel(kind, 3)
        u = unitary(empty_step(model), 3)
        assert _same_up_to_phase(u, np.eye(8))

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_same_gate_structure_as_real_step(self, kind):
        model = SpinModel(kind, 5)
        assert empty_step(model, 1e-3).structure() == trotter_step(model, 0.2).structure()

    def test_angle_bound(self):
        with pytest.raises(InvalidArgumentError):
            empty_step(SpinModel(ModelKind.TFIM, 2), 0.05)


class TestLayouts:
    """Block patterns of the three stages."""

    def test_interleaved(self):
        schedule = TrotterSchedule(N1=2, c=3)
        pattern = block_pattern(schedule, Stage.TRAINING_NOISY)
        R, E = Block.REAL, Block.EMPTY
        assert pattern == [R, E, E, R, E, E]

    def test_appended(self):
        schedule = TrotterSchedule(N1=2, c=2, layout=Layout.APPENDED)
        R, E = Block.REAL, Block.EMPTY
        assert block_pattern(schedule, Stage.TRAINING_NOISY) == [R, R, E, E]

    def test_custom_permutation(self):
        schedule = TrotterSchedule(N1=1, c=3, layout=Layout.CUSTOM, custom_permutation=(2, 0, 1))
        R, E = Block.REAL, Block.EMPTY
        assert block_pattern(schedule, Stage.TRAINING_NOISY) == [E, R, E]

    def test_custom_needs_permutation(self):
        with pytest.raises(InvalidArgumentError):
            TrotterSchedule(N1=2, c=2, layout=Layout.CUSTOM, custom_permutation=(0, 1))

    def test_stage_block_counts(self):
        schedule = TrotterSchedule(N1=2, c=3)
        assert block_pattern(schedule, Stage.QUASI_IDEAL) == [Block.REAL] * 2
        assert block_pattern(schedule, Stage.EVAL_NOISY) == [Block.REAL] * 6

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_training_and_eval_have_same_gate_counts(self, kind):
        """Test that training and evaluation circuits share gate counts and noise tags."""
        model = SpinModel(kind, 5)
        schedule = TrotterSchedule(N1=2, c=3, T=1.0)
        train = build_circuit(model, schedule, 0.5, Stage.TRAINING_NOISY)
        evaluate = build_circuit(model, schedule, 0.5, Stage.EVAL_NOISY)
        assert train.kind_counts() == evaluate.kind_counts()
        assert train.noise_tags == evaluate.noise_tags

    def test_training_circuit_equals_quasi_ideal_without_noise(self):
        """Test that with noise off the training circuit reduces to the quasi-ideal one."""
        model = SpinModel(ModelKind.TFIM, 3)
        schedule = TrotterSchedule(N1=2, c=2, T=1.0)
        quasi = unitary(build_circuit(model, schedule, 0.7, Stage.QUASI_IDEAL), 3)
        train = unitary(build_circuit(model, schedule, 0.7, Stage.TRAINING_NOISY), 3)
        assert _same_up_to_phase(quasi, train)

    def test_time_outside_horizon(self):
        model = SpinModel(ModelKind.TFIM, 2)
        schedule = TrotterSchedule(T=1.0)
        with pytest.raises(InvalidArgumentError):
            build_circuit(model, schedule, 1.5, Stage.QUASI_IDEAL)
        with pytest.raises(InvalidArgumentError):
            build_circuit(model, schedule, 0.0, Stage.QUASI_IDEAL)


class TestHelpers:
    """Tests for small circuit helpers."""

    def test_time_grid(self):
        grid = time_grid(TrotterSchedule(T=1.0, K=4))
        assert grid == pytest.approx([0.25, 0.5, 0.75, 1.0])

    def test_preparation(self):
        seq = preparation("10110")
        assert [g.targets[0] for g in seq] == [0, 2, 3]
        assert all(g.kind is GateKind.X for g in seq)

    def test_jsonl_dump_and_load(self):
        seq = trotter_step(SpinModel(ModelKind.XY, 3), 0.1)
        again = GateSequence.from_jsonl(seq.to_jsonl())
        assert again.gates == seq.gates
