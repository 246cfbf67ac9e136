"""Tests for the mitigation network, its training loop and checkpoint files."""

from __future__ import annotations

import json
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from trotterml.core.errors import InvalidArgumentError, TrainingDivergedError
from trotterml.mitigation.checkpoint import load_checkpoint, save_checkpoint, write_loss_log
from trotterml.mitigation.mlp import (
    Encoding,
    Gradient,
    MlpModel,
    forward,
    gradient,
    init_model,
    loss,
    mse,
    predict,
    zeros_like,
)
from trotterml.mitigation.trainer import mitigate, train
from trotterml.processing.datasets import TrainingPairs, full_basis, generate, pair_for_training
from trotterml.reports.metrics import mse as dataset_mse
from trotterml.schemas.models import NoiseSection, Provenance, Role, TrainConfig
from trotterml.simulation.circuits import Stage
from trotterml.simulation.qsim import Axis

GOLDEN = Path(__file__).parent / "golden" / "mlp_forward.json"


def _pairs(rows: int, k_in: int, k_out: int, seed: int) -> TrainingPairs:
    rng = np.random.default_rng(seed)
    return TrainingPairs(
        inputs=rng.uniform(-1, 1, size=(rows, k_in)),
        targets=rng.uniform(-0.9, 0.9, size=(rows, k_out)),
        keys=tuple((format(r % 4, "02b"), r // 4 + 1) for r in range(rows)),
        feature_axes=(Axis.Z,),
        num_spins=k_out,
    )


def _shifted(model: MlpModel, tensor: int, index: tuple, step: float) -> MlpModel:
    params = [np.array(a) for a in (*model.weights, *model.biases)]
    params[tensor][index] += step
    layers = len(model.weights)
    return MlpModel(tuple(params[:layers]), tuple(params[layers:]))


def _finite_difference(model: MlpModel, pairs: TrainingPairs, step: float = 1e-5) -> np.ndarray:
    tensors = [*model.weights, *model.biases]
    grads = [np.zeros_like(t) for t in tensors]
    for t, tensor in enumerate(tensors):
        for index in np.ndindex(tensor.shape):
            up = loss(_shifted(model, t, index, step), pairs)
            down = loss(_shifted(model, t, index, -step), pairs)
            grads[t][index] = (up - down) / (2 * step)
    layers = len(model.weights)
    return Gradient(tuple(grads[:layers]), tuple(grads[layers:])).flat()


class TestEncoding:
    """Tests for mapping magnetizations to network inputs and back."""

    def test_round_trip(self):
        m = np.linspace(-1, 1, 101)
        np.testing.assert_allclose(Encoding.decode(Encoding.encode(m)), m, atol=1e-15)

    def test_range(self):
        assert Encoding.encode(-1.0) == 0.0
        assert Encoding.encode(1.0) == 1.0


class TestForward:
    """Network construction and evaluation."""

    def test_layer_sizes(self):
        model = init_model([15, 200, 200, 5], seed=42)
        assert model.layer_sizes == [15, 200, 200, 5]
        assert model.weights[0].shape == (200, 15)

    def test_glorot_bounds(self):
        """Test that initial weights stay inside the Glorot-uniform limits."""
        model = init_model([15, 200, 200, 5], seed=1)
        limit = np.sqrt(6 / (15 + 200))
        assert np.abs(model.weights[0]).max() <= limit
        assert all(np.all(b == 0) for b in model.biases)

    def test_zero_parameters_give_half(self):
        model = zeros_like(init_model([5, 7, 5], seed=0))
        np.testing.assert_array_equal(forward(model, np.full(5, 0.3)), np.full(5, 0.5))

    def test_decoded_outputs_inside_unit_interval(self):
        model = init_model([5, 200, 200, 5], seed=3)
        out = predict(model, np.random.default_rng(0).uniform(-1, 1, size=(50, 5)))
        assert np.all(out > -1) and np.all(out < 1)

    def test_shape_mismatch(self):
        model = init_model([5, 4, 5], seed=0)
        with pytest.raises(InvalidArgumentError):
            forward(model, np.zeros(6))

    def test_matches_direct_formula(self):
        model = init_model([15, 200, 200, 5], seed=42)
        x = np.random.default_rng(42).uniform(0, 1, size=15)

        def sigmoid(z):
            return 1 / (1 + np.exp(-z))

        w1, w2, w3 = model.weights
        b1, b2, b3 = model.biases
        expected = sigmoid(w3 @ sigmoid(w2 @ sigmoid(w1 @ x + b1) + b2) + b3)
        np.testing.assert_allclose(forward(model, x), expected, rtol=1e-12)

    def test_golden_output(self):
        """Test that a fixed network reproduces the recorded forward and predict outputs."""
        golden = json.loads(GOLDEN.read_text())
        model = MlpModel(tuple(golden["weights"]), tuple(golden["biases"]))
        assert model.layer_sizes == golden["layer_sizes"]
        m = np.array(golden["magnetizations"])
        np.testing.assert_allclose(
            forward(model, Encoding.encode(m)), golden["forward"], rtol=0, atol=1e-12
        )
        np.testing.assert_allclose(predict(model, m), golden["predict"], rtol=0, atol=1e-12)

    def test_init_draws_glorot_uniform_in_layer_order(self):
        """Test that initialization consumes one seeded generator layer by layer."""
        model = init_model([15, 200, 5], seed=42)
        rng = np.random.default_rng(42)
        first = rng.uniform(-np.sqrt(6 / 215), np.sqrt(6 / 215), size=(200, 15))
        second = rng.uniform(-np.sqrt(6 / 205), np.sqrt(6 / 205), size=(5, 200))
        np.testing.assert_array_equal(model.weights[0], first)
        np.testing.assert_array_equal(model.weights[1], second)
        assert not any(b.any() for b in model.biases)


class TestLoss:
    """Tests for the training loss."""

    def test_identical_is_zero(self):
        a = np.random.default_rng(0).uniform(-1, 1, size=(4, 5))
        assert mse(a, a) == 0.0

    def test_constant_offset(self):
        a = np.random.default_rng(0).uniform(-1, 1, size=(4, 5))
        assert mse(a + 0.1, a) == pytest.approx(0.005)

    def test_single_pair(self):
        assert mse(np.zeros((1, 5)), np.ones((1, 5))) == pytest.approx(0.5)

    def test_empty_pairs(self):
        model = init_model([2, 3, 2], seed=0)
        empty = TrainingPairs(np.zeros((0, 2)), np.zeros((0, 2)), (), (Axis.Z,), 2)
        with pytest.raises(InvalidArgumentError):
            loss(model, empty)


class TestGradient:
    """Analytic gradient against central finite differences."""

    @pytest.mark.parametrize("config", range(10))
    def test_finite_differences(self, config):
        """Test that the analytic gradient matches central finite differences."""
        rng = np.random.default_rng(100 + config)
        k_in, hidden, k_out = rng.integers(2, 6), rng.integers(2, 7), rng.integers(1, 5)
        model = init_model([k_in, hidden, hidden, k_out], seed=config)
        pairs = _pairs(int(rng.integers(3, 9)), k_in, k_out, seed=config)
        analytic = gradient(model, pairs).flat()
        numeric = _finite_difference(model, pairs)
        rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
        assert rel < 1e-4

    def test_zero_at_perfect_fit(self):
        model = init_model([4, 6, 3], seed=5)
        pairs = _pairs(6, 4, 3, seed=5)
        fitted = TrainingPairs(
            pairs.inputs, predict(model, pairs.inputs), pairs.keys, pairs.feature_axes, 3
        )
        assert gradient(model, fitted).norm() < 1e-8

    def test_duplicated_pairs_same_gradient(self):
        model = init_model([4, 6, 3], seed=6)
        pairs = _pairs(5, 4, 3, seed=6)
        doubled = TrainingPairs(
            np.vstack([pairs.inputs, pairs.inputs]),
            np.vstack([pairs.targets, pairs.targets]),
            pairs.keys + pairs.keys,
            pairs.feature_axes,
            3,
        )
        np.testing.assert_allclose(gradient(model, doubled).flat(), gradient(model, pairs).flat())


class TestTrain:
    """Adam loop, checkpoint selection and determinism."""

    @pytest.fixture
    def cfg(self):
        return TrainConfig(epochs=300, checkpoint_every=50, hidden_sizes=[16, 16], seed=42)

    def test_selected_loss_not_worse_than_initial(self, cfg):
        result = train(_pairs(40, 5, 5, seed=1), cfg)
        assert result.best.train_loss <= result.initial_train_loss
        assert [e.epoch for e in result.log] == [50, 100, 150, 200, 250, 300]

    def test_best_not_worse_than_first_checkpoint(self, cfg):
        result = train(_pairs(40, 5, 5, seed=2), cfg)
        assert result.best.validation_loss <= result.log[0].validation_loss

    def test_bit_identical_reruns(self, cfg):
        """Test that two training runs with one seed give bit-identical parameters."""
        pairs = _pairs(40, 5, 5, seed=3)
        a = train(pairs, cfg)
        b = train(pairs, cfg)
        assert a.log == b.log
        for wa, wb in zip(a.model.weights, b.model.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_minibatches(self):
        cfg = TrainConfig(epochs=100, checkpoint_every=50, hidden_sizes=[8], batch_size=7)
        result = train(_pairs(30, 3, 3, seed=4), cfg)
        assert len(result.log) == 2

    def test_needs_two_pairs(self, cfg):
        with pytest.raises(InvalidArgumentError):
            train(_pairs(1, 5, 5, seed=0), cfg)

    def test_divergence_reports_epoch(self, cfg):
        """Test that a non-finite loss stops training and names the epoch."""
        with patch(
            "trotterml.mitigation.trainer.loss_and_gradient",
            return_value=(float("nan"), None),
        ):
            with pytest.raises(TrainingDivergedError) as excinfo:
                train(_pairs(10, 5, 5, seed=0), cfg)
        assert excinfo.value.epoch == 1


class TestMitigate:
    """Tests for applying a trained network to a dataset."""

    @pytest.fixture
    def datasets(self, tfim3, short_schedule, default_noise3):
        states = full_basis(3)
        return tuple(
            generate(tfim3, short_schedule, stage, default_noise3, 256, states, 5, workers=1)
            for stage in (Stage.TRAINING_NOISY, Stage.QUASI_IDEAL, Stage.EVAL_NOISY)
        )

    @pytest.fixture
    def trained(self, datasets):
        noisy, quasi, _ = datasets
        cfg = TrainConfig(
            epochs=200, checkpoint_every=50, hidden_sizes=[16, 16], validation_fraction=0.0
        )
        return train(pair_for_training(noisy, quasi), cfg)

    def test_record_count_and_role(self, datasets, trained):
        _, _, evaluate = datasets
        out = mitigate(trained.model, evaluate)
        assert out.role is Role.MITIGATED
        assert out.axes == [Axis.Z]
        assert len(out) == 8 * 3 * 3
        assert all(-1 < r.value < 1 for r in out.records)

    def test_training_inputs_reproduce_training_loss(self, datasets, trained):
        noisy, quasi, _ = datasets
        out = mitigate(trained.model, noisy)
        assert dataset_mse(out, quasi, [Axis.Z]) <= trained.best.train_loss + 1e-9

    def test_feature_mismatch(self, datasets):
        _, _, evaluate = datasets
        with pytest.raises(InvalidArgumentError):
            mitigate(init_model([5, 4, 3], seed=0), evaluate)

    def test_quasi_ideal_role_rejected(self, datasets, trained):
        _, quasi, _ = datasets
        with pytest.raises(InvalidArgumentError):
            mitigate(trained.model, quasi)


class TestCheckpointFile:
    """Tests for checkpoint and loss-log files."""

    def test_bit_exact_round_trip(self, tmp_path):
        """Test that a saved checkpoint reloads bit-exactly."""
        cfg = TrainConfig(epochs=100, checkpoint_every=50, hidden_sizes=[8])
        result = train(_pairs(20, 4, 4, seed=9), cfg)
        path = save_checkpoint(result, tmp_path / "checkpoint.json", "cfg", "lineage")
        model, meta = load_checkpoint(path)
        for a, b in zip(model.weights + model.biases, result.model.weights + result.model.biases):
            np.testing.assert_array_equal(a, b)
        assert meta.best_epoch == result.best_epoch
        assert meta.train_config_hash == cfg.config_hash()
        assert meta.encoding.scale == 0.5
        assert meta.noise is None

    def test_checkpoint_records_noise(self, tmp_path):
        cfg = TrainConfig(epochs=100, checkpoint_every=50, hidden_sizes=[8])
        result = train(_pairs(20, 4, 4, seed=9), cfg)
        noise = NoiseSection(p1=1e-3, p2=2e-2, eps01=0.03, eps10=0.01)
        path = save_checkpoint(result, tmp_path / "checkpoint.json", "cfg", "lineage", noise=noise)
        _, meta = load_checkpoint(path)
        assert meta.noise == noise

    def test_loss_log_csv(self, tmp_path):
        cfg = TrainConfig(epochs=100, checkpoint_every=50, hidden_sizes=[8])
        result = train(_pairs(20, 4, 4, seed=9), cfg)
        lines = write_loss_log(result, tmp_path / "loss.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,validation_loss"
        assert len(lines) == 3

    def test_loss_log_provenance_line(self, tmp_path):
        cfg = TrainConfig(epochs=100, checkpoint_every=50, hidden_sizes=[8])
        result = train(_pairs(20, 4, 4, seed=9), cfg)
        provenance = Provenance(config_hash="abc123", noise=NoiseSection())
        lines = write_loss_log(result, tmp_path / "loss.csv", provenance).read_text().splitlines()
        assert lines[0] == provenance.comment()
        assert lines[0].startswith("# config_hash=abc123 p1=0.0005 p2=0.012")
        assert lines[1] == "epoch,train_loss,validation_loss"
