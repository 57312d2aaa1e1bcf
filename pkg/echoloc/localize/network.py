"""
Convolutional network for region classification and coordinate regression.

Layout: ``conv_blocks`` x (Conv -> ReLU -> MaxPool -> [BatchNorm]), then
Flatten, ``dense_sizes`` x (Dense -> ReLU), then an output Dense layer.
The classification head applies softmax; the regression head is linear.

Parameters are named ``<layer>.<param>`` (``conv0.weight``, ``bn1.gamma``,
``dense0.bias``, ``out.weight``) and always iterated in construction order,
which is also the order tensors are stored in model files.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from echoloc.config import ModelConfig
from echoloc.errors import ModelError
from echoloc.localize.layers import BatchNorm, Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU, softmax
from echoloc.seeding import rng_for

logger = logging.getLogger(__name__)

# log() floor for probabilities in the cross-entropy
PROB_FLOOR = 1e-300


class Network:
    """
    Parameters
    ----------
    config:
        Architecture and head.
    init:
        ``"he"`` (default) draws weights from N(0, 2/fan_in) with a stream
        keyed by ``(config.seed, "init", <param name>)``; ``"zeros"`` sets
        every weight and bias to zero. Initial values are float32-exact.
    """

    def __init__(self, config: ModelConfig, *, init: str = "he") -> None:
        errors = config.validate()
        if errors:
            raise ModelError("; ".join(errors))
        self.config = config
        self.layers: list[tuple[str, Layer]] = []

        h, w = config.input_shape
        channels = 1
        for i, block in enumerate(config.conv_blocks):
            self.layers.append((f"conv{i}", Conv2D(channels, block.channels, block.kernel_size)))
            self.layers.append((f"relu_c{i}", ReLU()))
            self.layers.append((f"pool{i}", MaxPool2D(block.pool_size)))
            h, w = h // block.pool_size, w // block.pool_size
            if h < 1 or w < 1:
                raise ModelError(f"input shape {config.input_shape} pooled away by conv block {i}")
            channels = block.channels
            if block.batch_norm:
                self.layers.append((f"bn{i}", BatchNorm(channels, config.bn_momentum, config.bn_epsilon)))
        self.layers.append(("flatten", Flatten()))
        width = channels * h * w
        for j, size in enumerate(config.dense_sizes):
            self.layers.append((f"dense{j}", Dense(width, size)))
            self.layers.append((f"relu_d{j}", ReLU()))
            width = size
        self.layers.append(("out", Dense(width, config.output_size)))
        self._initialize(init)

    def _initialize(self, init: str) -> None:
        if init not in ("he", "zeros"):
            raise ModelError(f"unknown init scheme {init!r}")
        for name, layer in self.layers:
            if not isinstance(layer, (Conv2D, Dense)):
                continue
            weight = layer.params["weight"]
            if init == "zeros":
                weight[...] = 0.0
                continue
            fan_in = int(np.prod(weight.shape[1:])) if isinstance(layer, Conv2D) else weight.shape[0]
            rng = rng_for(self.config.seed, "init", f"{name}.weight")
            drawn = rng.standard_normal(weight.shape) * np.sqrt(2.0 / fan_in)
            weight[...] = drawn.astype(np.float32)

    # ------------------------------------------------------------------
    # Parameters
    # ------------------------------------------------------------------

    def named_parameters(self) -> Iterator[tuple[str, np.ndarray]]:
        for name, layer in self.layers:
            for key, value in layer.params.items():
                yield f"{name}.{key}", value

    def named_buffers(self) -> Iterator[tuple[str, np.ndarray]]:
        for name, layer in self.layers:
            for key, value in layer.buffers.items():
                yield f"{name}.{key}", value

    def tensors(self) -> dict[str, np.ndarray]:
        """Parameters then buffers, in storage order."""
        return dict(self.named_parameters()) | dict(self.named_buffers())

    def assign(self, tensors: dict[str, np.ndarray]) -> None:
        for name, layer in self.layers:
            for store in (layer.params, layer.buffers):
                for key in store:
                    value = np.asarray(tensors[f"{name}.{key}"], dtype=np.float64)
                    if value.shape != store[key].shape:
                        raise ModelError(f"{name}.{key}: expected shape {store[key].shape}, got {value.shape}")
                    store[key] = value.copy()

    def round_to_float32(self) -> None:
        self.assign({k: v.astype(np.float32) for k, v in self.tensors().items()})

    # ------------------------------------------------------------------
    # Passes
    # ------------------------------------------------------------------

    def _as_batch(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        expected = tuple(self.config.input_shape)
        if x.shape[-2:] != expected or x.ndim not in (2, 3):
            raise ModelError(f"feature shape {x.shape} does not match model input {list(expected)}")
        if x.ndim == 2:
            x = x[None]
        return x[:, None, :, :]

    def raw(self, features: np.ndarray, train: bool = False) -> np.ndarray:
        """Output-layer values (logits, or coordinates for regression)."""
        x = self._as_batch(features)
        for _, layer in self.layers:
            x = layer.forward(x, train)
        return x

    def forward(self, features: np.ndarray, train: bool = False) -> np.ndarray:
        out = self.raw(features, train)
        return softmax(out) if self.config.task == "regions" else out

    def backward(self, grad_out: np.ndarray) -> dict[str, np.ndarray]:
        """Backpropagate ``d loss / d raw output`` and collect parameter gradients."""
        grad = grad_out
        for _, layer in reversed(self.layers):
            grad = layer.backward(grad)
        return {f"{name}.{key}": layer.grads[key] for name, layer in self.layers for key in layer.params}


@dataclass
class FeatureStats:
    """Train-split standardization statistics stored with a model."""

    mean: float = 0.0
    std: float = 1.0
    target_mean: list[float] = field(default_factory=lambda: [0.0, 0.0])
    target_std: list[float] = field(default_factory=lambda: [1.0, 1.0])

    def to_dict(self) -> dict:
        return {
            "mean": float(self.mean),
            "std": float(self.std),
            "target_mean": [float(v) for v in self.target_mean],
            "target_std": [float(v) for v in self.target_std],
        }

    @classmethod
    def from_dict(cls, d: dict) -> FeatureStats:
        return cls(
            mean=float(d["mean"]),
            std=float(d["std"]),
            target_mean=[float(v) for v in d.get("target_mean", [0.0, 0.0])],
            target_std=[float(v) for v in d.get("target_std", [1.0, 1.0])],
        )


@dataclass
class Model:
    """A network together with its class names and train statistics."""

    network: Network
    classes: list[str] = field(default_factory=list)
    stats: FeatureStats = field(default_factory=FeatureStats)

    @property
    def config(self) -> ModelConfig:
        return self.network.config

    @property
    def task(self) -> str:
        return self.network.config.task


def _one_hot(target: np.ndarray, classes: int) -> np.ndarray:
    t = np.asarray(target)
    if t.ndim == 2:
        return t.astype(np.float64)
    out = np.zeros((t.reshape(-1).shape[0], classes))
    out[np.arange(out.shape[0]), t.reshape(-1).astype(int)] = 1.0
    return out


def _unwrap(model: Model | Network) -> Network:
    return model.network if isinstance(model, Model) else model


def forward(model: Model | Network, features: np.ndarray) -> np.ndarray:
    """Inference pass: probabilities (regions) or coordinates (coords).

    ``features`` is one standardized ``[F x B]`` tensor or a batch of them;
    the result keeps a leading batch axis only when the input had one.
    """
    features = np.asarray(features)
    out = _unwrap(model).forward(features, train=False)
    return out[0] if features.ndim == 2 else out


def loss(prediction: np.ndarray, target: np.ndarray, task: str) -> float:
    """
    Mean loss over a batch.

    ``regions``: cross-entropy ``-log p[target]`` where ``prediction`` holds
    probabilities and ``target`` class indices or one-hot rows.
    ``coords``: squared error averaged over samples and both coordinates.
    """
    p = np.atleast_2d(np.asarray(prediction, dtype=np.float64))
    if task == "regions":
        y = _one_hot(target, p.shape[1])
        return float(-np.sum(y * np.log(np.maximum(p, PROB_FLOOR))) / p.shape[0])
    y = np.atleast_2d(np.asarray(target, dtype=np.float64))
    return float(np.mean((p - y) ** 2))


def loss_and_gradients(
    model: Model | Network, features: np.ndarray, target: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Training-mode loss and its gradient with respect to every parameter.

    Batch-norm layers use batch statistics and update their running
    averages.
    """
    net = _unwrap(model)
    out = np.atleast_2d(net.raw(features, train=True))
    n = out.shape[0]
    if net.config.task == "regions":
        prob = softmax(out)
        value = loss(prob, target, "regions")
        grad = (prob - _one_hot(target, out.shape[1])) / n
    else:
        y = np.atleast_2d(np.asarray(target, dtype=np.float64))
        value = loss(out, y, "coords")
        grad = 2.0 * (out - y) / out.size
    return value, net.backward(grad)


def backward(model: Model | Network, features: np.ndarray, target: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of :func:`loss` with respect to every parameter."""
    return loss_and_gradients(model, features, target)[1]


def argmax_class(probabilities: np.ndarray) -> int:
    """Index of the largest probability; ties go to the lowest index."""
    return int(np.argmax(probabilities))
