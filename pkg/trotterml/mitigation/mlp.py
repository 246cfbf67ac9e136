"""Feed-forward network with sigmoid after every layer, its loss and analytic gradient."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from trotterml.core.errors import InvalidArgumentError
from trotterml.processing.datasets import TrainingPairs


class Encoding:
    """Affine map between magnetizations in [-1, 1] and sigmoid range (0, 1)."""

    scale = 0.5
    offset = 0.5

    @staticmethod
    def encode(m: np.ndarray) -> np.ndarray:
        return (np.asarray(m, dtype=float) + 1.0) / 2.0

    @staticmethod
    def decode(y: np.ndarray) -> np.ndarray:
        return 2.0 * np.asarray(y, dtype=float) - 1.0


@dataclass(frozen=True, eq=False)
class MlpModel:
    """weights[l] has shape (out, in); biases[l] has shape (out,)."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        weights = tuple(np.array(w, dtype=float) for w in self.weights)
        biases = tuple(np.array(b, dtype=float).reshape(-1) for b in self.biases)
        if not weights or len(weights) != len(biases):
            raise InvalidArgumentError("need one bias vector per weight matrix")
        for layer, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or w.shape[0] != b.size:
                raise InvalidArgumentError(f"layer {layer}: weight {w.shape} vs bias {b.shape}")
            if layer and w.shape[1] != weights[layer - 1].shape[0]:
                raise InvalidArgumentError(f"layer {layer} input does not fit layer {layer - 1}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidArgumentError(f"layer {layer} has non-finite parameters")
            w.setflags(write=False)
            b.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def k_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def k_out(self) -> int:
        return self.layer_sizes[-1]

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True, eq=False)
class Gradient:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))


def init_model(layer_sizes: Sequence[int], seed: int) -> MlpModel:
    """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise InvalidArgumentError(f"invalid layer sizes {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(tuple(weights), tuple(biases))


def zeros_like(model: MlpModel) -> MlpModel:
    return MlpModel(
        tuple(np.zeros_like(w) for w in model.weights),
        tuple(np.zeros_like(b) for b in model.biases),
    )


def _activations(model: MlpModel, x: np.ndarray) -> list[np.ndarray]:
    layers = [x]
    for w, b in zip(model.weights, model.biases):
        layers.append(expit(layers[-1] @ w.T + b))
    return layers


def _as_batch(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    batch = x.reshape(1, -1) if x.ndim == 1 else x
    if batch.ndim != 2 or batch.shape[1] != model.k_in:
        raise InvalidArgumentError(f"input width {batch.shape[-1]} but K_in={model.k_in}")
    if not np.all(np.isfinite(batch)):
        raise InvalidArgumentError("inputs must be finite")
    return batch


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """sigma(W_L ... sigma(W_1 x + b_1) ... + b_L) for one encoded vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    out = _activations(model, _as_batch(model, x))[-1]
    return out[0] if x.ndim == 1 else out


def predict(model: MlpModel, magnetizations: np.ndarray) -> np.ndarray:
    """Encode, forward, decode."""
    return Encoding.decode(forward(model, Encoding.encode(magnetizations)))


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """(1 / 2D) sum (a - b)^2 with D the number of scalars."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        raise InvalidArgumentError("nothing to compare")
    return float(np.sum((a - b) ** 2) / (2.0 * a.size))


def _check_pairs(model: MlpModel, pairs: TrainingPairs) -> None:
    if len(pairs) == 0:
        raise InvalidArgumentError("pairs must not be empty")
    if pairs.shape != (model.k_in, model.k_out):
        raise InvalidArgumentError(
            f"pairs shaped {pairs.shape} for a {model.k_in} -> {model.k_out} network"
        )


def loss(model: MlpModel, pairs: TrainingPairs) -> float:
    _check_pairs(model, pairs)
    return mse(predict(model, pairs.inputs), pairs.targets)


evaluate = loss


def loss_and_gradient(model: MlpModel, pairs: TrainingPairs) -> tuple[float, Gradient]:
    """Backpropagation of the decoded-output MSE."""
    _check_pairs(model, pairs)
    layers = _activations(model, _as_batch(model, Encoding.encode(pairs.inputs)))
    outputs = Encoding.decode(layers[-1])
    diff = outputs - pairs.targets
    scalars = diff.size
    value = float(np.sum(diff**2) / (2.0 * scalars))

    # d loss / d y = 2 (A - B) / D through the decode map A = 2y - 1
    delta = (2.0 / scalars) * diff * layers[-1] * (1.0 - layers[-1])
    grad_w: list[np.ndarray] = []
    grad_b: list[np.ndarray] = []
    for layer in range(len(model.weights) - 1, -1, -1):
        grad_w.append(delta.T @ layers[layer])
        grad_b.append(delta.sum(axis=0))
        if layer:
            a = layers[layer]
            delta = (delta @ model.weights[layer]) * a * (1.0 - a)
    return value, Gradient(tuple(reversed(grad_w)), tuple(reversed(grad_b)))


def gradient(model: MlpModel, pairs: TrainingPairs) -> Gradient:
    return loss_and_gradient(model, pairs)[1]
