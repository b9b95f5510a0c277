"""Layers of the benchmark CNN with hand-written backward passes.

Images are NHWC (``[batch, height, width, channels]``).  Convolutions are
cross-correlations with valid padding and stride 1; pooling windows do not
overlap and trailing rows/columns that do not fill a window are dropped.

Every layer keeps its trainable tensors in ``params`` and the matching
gradients (same keys, same shapes) in ``grads``.  ``forward`` caches whatever
``backward`` needs; calling ``backward`` first raises ``OrderingError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .activations import ActivationKind, eval_with_d1
from .activations import eval as act_eval
from .errors import InvalidLabelError, InvalidShapeError, OrderingError
from .tensor import Precision

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


# --------------------------------------------------------------------------
# declarative specs


@dataclass(frozen=True)
class Conv2DSpec:
    filters: int
    kernel: tuple[int, int] = (3, 3)
    activation: Optional[ActivationKind] = None

    def __post_init__(self):
        if self.filters < 1 or min(self.kernel) < 1:
            raise InvalidShapeError(f"bad Conv2D spec {self}")


@dataclass(frozen=True)
class MaxPool2DSpec:
    window: tuple[int, int] = (2, 2)

    def __post_init__(self):
        if min(self.window) < 1:
            raise InvalidShapeError(f"bad MaxPool2D window {self.window}")


@dataclass(frozen=True)
class FlattenSpec:
    pass


@dataclass(frozen=True)
class DenseSpec:
    units: int
    activation: Optional[ActivationKind] = None

    def __post_init__(self):
        if self.units < 1:
            raise InvalidShapeError(f"Dense needs at least one unit, got {self.units}")


@dataclass(frozen=True)
class SoftmaxOutputSpec:
    """Dense layer producing logits; the softmax lives in :func:`softmax_xent`."""

    classes: int

    def __post_init__(self):
        if self.classes < 1:
            raise InvalidShapeError(f"need at least one class, got {self.classes}")


LayerSpec = Union[Conv2DSpec, MaxPool2DSpec, FlattenSpec, DenseSpec, SoftmaxOutputSpec]


def glorot_uniform(shape, fan_in: int, fan_out: int, rng: np.random.Generator, dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    # sampled in double so single/double models share the same initial values
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


# --------------------------------------------------------------------------
# layers


class Layer:
    spec: LayerSpec

    def __init__(self, input_shape: tuple[int, ...], dtype):
        self.input_shape = tuple(input_shape)
        self.dtype = np.dtype(dtype)
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    @property
    def activation(self) -> Optional[ActivationKind]:
        return getattr(self.spec, "activation", None)

    @property
    def activation_name(self) -> str:
        act = self.activation
        return str(act) if act is not None else "-"

    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def _check_input(self, x: np.ndarray):
        if x.ndim != len(self.input_shape) + 1 or x.shape[1:] != self.input_shape:
            raise InvalidShapeError(
                f"{type(self).__name__} expects [batch, {', '.join(map(str, self.input_shape))}], "
                f"got {list(x.shape)}"
            )

    def _take_cache(self):
        if self._cache is None:
            raise OrderingError(f"{type(self).__name__}.backward called before forward")
        cache, self._cache = self._cache, None
        return cache

    def _activate(self, z: np.ndarray, training: bool):
        act = self.activation
        if act is None:
            return z, None
        if training:
            return eval_with_d1(act, z)
        return act_eval(act, z), None

    def zero_grads(self):
        for k, p in self.params.items():
            self.grads[k] = np.zeros_like(p)

    def __repr__(self):
        return f"{type(self).__name__}({self.spec}, in={self.input_shape}, out={self.output_shape})"


class Conv2D(Layer):
    def __init__(self, spec: Conv2DSpec, input_shape, rng: np.random.Generator, dtype=np.float32):
        super().__init__(input_shape, dtype)
        self.spec = spec
        h, w, c = self.input_shape
        kh, kw = spec.kernel
        if h < kh or w < kw:
            raise InvalidShapeError(f"kernel {spec.kernel} larger than input {h}x{w}")
        self.output_shape = (h - kh + 1, w - kw + 1, spec.filters)
        self.params["W"] = glorot_uniform(
            (kh, kw, c, spec.filters), kh * kw * c, kh * kw * spec.filters, rng, self.dtype
        )
        self.params["b"] = np.zeros(spec.filters, dtype=self.dtype)
        self.zero_grads()

    def _im2col(self, x):
        b = x.shape[0]
        kh, kw = self.spec.kernel
        oh, ow, _ = self.output_shape
        win = sliding_window_view(x, (kh, kw), axis=(1, 2))  # [b, oh, ow, c, kh, kw]
        return win.transpose(0, 1, 2, 4, 5, 3).reshape(b * oh * ow, -1)

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        self._check_input(x)
        cols = self._im2col(x)
        W = self.params["W"]
        z = cols @ W.reshape(-1, W.shape[-1]) + self.params["b"]
        z = z.reshape((x.shape[0],) + self.output_shape)
        out, d1 = self._activate(z, training)
        if training:
            self._cache = (cols, z, d1, x.shape)
        return out

    def backward(self, grad_out: np.ndarray, input_grad: bool = True) -> Optional[np.ndarray]:
        cols, z, d1, xshape = self._take_cache()
        if grad_out.shape != z.shape:
            raise InvalidShapeError(f"grad_out shape {grad_out.shape} != output {z.shape}")
        dz = grad_out * d1 if d1 is not None else grad_out
        W = self.params["W"]
        f = W.shape[-1]
        dz2 = dz.reshape(-1, f)
        self.grads["W"] = (cols.T @ dz2).reshape(W.shape)
        self.grads["b"] = dz2.sum(axis=0)
        if not input_grad:
            return None
        kh, kw = self.spec.kernel
        oh, ow, _ = self.output_shape
        dcols = (dz2 @ W.reshape(-1, f).T).reshape(xshape[0], oh, ow, kh, kw, xshape[3])
        dx = np.zeros(xshape, dtype=dz.dtype)
        for i in range(kh):
            for j in range(kw):
                dx[:, i : i + oh, j : j + ow, :] += dcols[:, :, :, i, j, :]
        return dx


class MaxPool2D(Layer):
    def __init__(self, spec: MaxPool2DSpec, input_shape, rng=None, dtype=np.float32):
        super().__init__(input_shape, dtype)
        self.spec = spec
        h, w, c = self.input_shape
        ph, pw = spec.window
        if h < ph or w < pw:
            raise InvalidShapeError(f"pool window {spec.window} larger than input {h}x{w}")
        self.output_shape = (h // ph, w // pw, c)

    def _windows(self, x):
        """Strided view ``[b, oh, ph, ow, pw, c]`` over the pooled region of ``x``."""
        ph, pw = self.spec.window
        oh, ow, c = self.output_shape
        return x[:, : oh * ph, : ow * pw, :].reshape(x.shape[0], oh, ph, ow, pw, c)

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        self._check_input(x)
        ph, pw = self.spec.window
        win = self._windows(x)
        best = win[:, :, 0, :, 0, :].copy()
        idx = np.zeros(best.shape, dtype=np.int16)
        # strict '>' keeps the first maximum in row-major window order
        for k in range(1, ph * pw):
            v = win[:, :, k // pw, :, k % pw, :]
            greater = v > best
            np.copyto(best, v, where=greater)
            idx[greater] = k
        if training:
            self._cache = (idx, x.shape)
        return best

    def argmax_indices(self) -> np.ndarray:
        """Flat in-window index of each maximum from the last training forward."""
        if self._cache is None:
            raise OrderingError("no cached forward pass")
        return self._cache[0]

    def backward(self, grad_out: np.ndarray, input_grad: bool = True) -> np.ndarray:
        idx, xshape = self._take_cache()
        if grad_out.shape != idx.shape:
            raise InvalidShapeError(f"grad_out shape {grad_out.shape} != {idx.shape}")
        ph, pw = self.spec.window
        dx = np.zeros(xshape, dtype=grad_out.dtype)
        win = self._windows(dx)
        for k in range(ph * pw):
            np.copyto(win[:, :, k // pw, :, k % pw, :], grad_out, where=idx == k)
        return dx


class Flatten(Layer):
    def __init__(self, spec: FlattenSpec, input_shape, rng=None, dtype=np.float32):
        super().__init__(input_shape, dtype)
        self.spec = spec
        self.output_shape = (math.prod(self.input_shape),)

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        self._check_input(x)
        if training:
            self._cache = x.shape
        return np.ascontiguousarray(x).reshape(x.shape[0], -1)

    def backward(self, grad_out: np.ndarray, input_grad: bool = True) -> np.ndarray:
        shape = self._take_cache()
        return grad_out.reshape(shape)


class Dense(Layer):
    def __init__(self, spec: DenseSpec, input_shape, rng: np.random.Generator, dtype=np.float32):
        super().__init__(input_shape, dtype)
        if len(self.input_shape) != 1:
            raise InvalidShapeError(f"Dense needs flat input, got {self.input_shape}")
        self.spec = spec
        n = self.input_shape[0]
        units = self._units()
        self.output_shape = (units,)
        self.params["W"] = glorot_uniform((n, units), n, units, rng, self.dtype)
        self.params["b"] = np.zeros(units, dtype=self.dtype)
        self.zero_grads()

    def _units(self) -> int:
        return self.spec.units

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        self._check_input(x)
        z = x @ self.params["W"] + self.params["b"]
        out, d1 = self._activate(z, training)
        if training:
            self._cache = (x, z, d1)
        return out

    def backward(self, grad_out: np.ndarray, input_grad: bool = True) -> Optional[np.ndarray]:
        x, z, d1 = self._take_cache()
        if grad_out.shape != z.shape:
            raise InvalidShapeError(f"grad_out shape {grad_out.shape} != output {z.shape}")
        dz = grad_out * d1 if d1 is not None else grad_out
        self.grads["W"] = x.T @ dz
        self.grads["b"] = dz.sum(axis=0)
        return dz @ self.params["W"].T if input_grad else None


class SoftmaxOutput(Dense):
    """Affine layer emitting class logits; never swapped during activation sweeps."""

    def _units(self) -> int:
        return self.spec.classes

    @property
    def activation_name(self) -> str:
        return "softmax"


_LAYER_TYPES = {
    Conv2DSpec: Conv2D,
    MaxPool2DSpec: MaxPool2D,
    FlattenSpec: Flatten,
    DenseSpec: Dense,
    SoftmaxOutputSpec: SoftmaxOutput,
}


def build_layer(
    spec: LayerSpec,
    input_shape,
    seed: SeedLike = None,
    precision: Precision | str = Precision.SINGLE,
) -> Layer:
    """Instantiate ``spec`` for per-sample ``input_shape`` with Glorot-uniform weights."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _LAYER_TYPES[type(spec)](spec, input_shape, rng, Precision.parse(precision).dtype)


# --------------------------------------------------------------------------
# loss


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_xent(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy of softmax(logits) and its logit gradient."""
    if logits.ndim != 2:
        raise InvalidShapeError(f"logits must be [batch, classes], got {logits.shape}")
    labels = np.asarray(labels)
    b, k = logits.shape
    if labels.shape != (b,):
        raise InvalidShapeError(f"expected {b} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise InvalidLabelError(f"labels must lie in [0, {k}), got range [{labels.min()}, {labels.max()}]")
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    rows = np.arange(b)
    loss = float(-logp[rows, labels].mean())
    grad = np.exp(logp)
    grad[rows, labels] -= 1
    grad /= b
    return loss, grad
