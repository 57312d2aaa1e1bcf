"""
Differentiable layers in plain numpy (NCHW layout, float64).

Every layer implements ``forward(x, train)`` and ``backward(grad)``;
``backward`` returns the gradient with respect to the layer input and
stores parameter gradients in ``self.grads`` under the same keys as
``self.params``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv2D(Layer):
    """Stride-1 convolution with 'same' zero padding (odd kernels)."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int) -> None:
        super().__init__()
        self.kernel_size = kernel_size
        self.pad = kernel_size // 2
        self.params["weight"] = np.zeros((out_channels, in_channels, kernel_size, kernel_size))
        self.params["bias"] = np.zeros(out_channels)
        self._windows: np.ndarray | None = None

    def _padded(self, x: np.ndarray) -> np.ndarray:
        p = self.pad
        return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        k = self.kernel_size
        windows = sliding_window_view(self._padded(x), (k, k), axis=(2, 3))
        self._windows = windows
        out = np.einsum("nchwij,ocij->nohw", windows, self.params["weight"], optimize=True)
        return out + self.params["bias"][None, :, None, None]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        k = self.kernel_size
        w = self.params["weight"]
        self.grads["weight"] = np.einsum("nchwij,nohw->ocij", self._windows, grad, optimize=True)
        self.grads["bias"] = grad.sum(axis=(0, 2, 3))
        grad_windows = sliding_window_view(self._padded(grad), (k, k), axis=(2, 3))
        return np.einsum("nohwij,ocij->nchw", grad_windows, w[:, :, ::-1, ::-1], optimize=True)


class ReLU(Layer):
    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return np.where(self._mask, grad, 0.0)


class MaxPool2D(Layer):
    """Non-overlapping max pooling. Trailing rows/columns that do not fill a
    window are dropped; ties go to the first position in the window."""

    def __init__(self, size: int) -> None:
        super().__init__()
        self.size = size

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        s = self.size
        if s == 1:
            return x
        n, c, h, w = x.shape
        ho, wo = h // s, w // s
        self._in_shape = x.shape
        blocks = x[:, :, : ho * s, : wo * s].reshape(n, c, ho, s, wo, s).transpose(0, 1, 2, 4, 3, 5)
        blocks = blocks.reshape(n, c, ho, wo, s * s)
        self._argmax = np.argmax(blocks, axis=-1)
        return np.take_along_axis(blocks, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        s = self.size
        if s == 1:
            return grad
        n, c, h, w = self._in_shape
        ho, wo = grad.shape[2], grad.shape[3]
        blocks = np.zeros((n, c, ho, wo, s * s))
        np.put_along_axis(blocks, self._argmax[..., None], grad[..., None], axis=-1)
        dx = np.zeros(self._in_shape)
        dx[:, :, : ho * s, : wo * s] = (
            blocks.reshape(n, c, ho, wo, s, s).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho * s, wo * s)
        )
        return dx


class BatchNorm(Layer):
    """
    Batch normalization over all axes except the channel axis (axis 1).

    Training uses batch statistics and updates running averages
    ``running = momentum * running + (1 - momentum) * batch``; inference uses
    the running averages.
    """

    def __init__(self, channels: int, momentum: float = 0.99, epsilon: float = 1e-5) -> None:
        super().__init__()
        self.momentum = momentum
        self.epsilon = epsilon
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)

    def _shape(self, x: np.ndarray) -> tuple[int, ...]:
        return (1, -1) + (1,) * (x.ndim - 2)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        shape = self._shape(x)
        axes = tuple(i for i in range(x.ndim) if i != 1)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.momentum
            self.buffers["running_mean"] = m * self.buffers["running_mean"] + (1 - m) * mean
            self.buffers["running_var"] = m * self.buffers["running_var"] + (1 - m) * var
        else:
            mean, var = self.buffers["running_mean"], self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
        self._cache = (xhat, inv_std, axes, shape)
        return self.params["gamma"].reshape(shape) * xhat + self.params["beta"].reshape(shape)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        xhat, inv_std, axes, shape = self._cache
        m = grad.size // grad.shape[1]
        self.grads["gamma"] = (grad * xhat).sum(axis=axes)
        self.grads["beta"] = grad.sum(axis=axes)
        dxhat = grad * self.params["gamma"].reshape(shape)
        sum_d = dxhat.sum(axis=axes).reshape(shape)
        sum_dx = (dxhat * xhat).sum(axis=axes).reshape(shape)
        return inv_std.reshape(shape) / m * (m * dxhat - sum_d - xhat * sum_dx)


class Flatten(Layer):
    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad.reshape(self._shape)


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int) -> None:
        super().__init__()
        self.params["weight"] = np.zeros((in_features, out_features))
        self.params["bias"] = np.zeros(out_features)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._x = x
        return x @ self.params["weight"] + self.params["bias"]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.grads["weight"] = self._x.T @ grad
        self.grads["bias"] = grad.sum(axis=0)
        return grad @ self.params["weight"].T


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)
