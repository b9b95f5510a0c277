"""Central finite-difference gradient checks for layers and whole models."""

from __future__ import annotations

from typing import Callable

import numpy as np


def numerical_gradient(f: Callable[[], float], x: np.ndarray, rel_step: float = 1e-5) -> np.ndarray:
    """d f / d x by central differences, perturbing ``x`` in place one element at a time.

    The step for element ``i`` is ``rel_step * max(1, |x_i|)``.
    """
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        h = rel_step * max(1.0, abs(float(old)))
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        out[i] = (fp - fm) / (2 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-5) -> np.ndarray:
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``.

    The floor keeps entries whose true gradient is ~0 from turning rounding
    noise into huge relative errors.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def check_layer(layer, x: np.ndarray, rng: np.random.Generator, rel_step: float = 1e-5) -> dict[str, float]:
    """Max relative error of every parameter gradient and the input gradient.

    The scalar being differentiated is ``sum(forward(x) * R)`` for a fixed
    random ``R``, which exercises every output element with a distinct weight.
    """
    probe_out = layer.forward(x, training=False)
    R = rng.standard_normal(probe_out.shape)

    def loss() -> float:
        return float(np.sum(layer.forward(x, training=False) * R))

    layer.forward(x, training=True)
    dx = layer.backward(R.astype(layer.dtype), input_grad=True)
    errors = {"input": float(relative_error(dx, numerical_gradient(loss, x, rel_step)).max())}
    for name, p in layer.params.items():
        analytic = layer.grads[name].copy()
        errors[name] = float(relative_error(analytic, numerical_gradient(loss, p, rel_step)).max())
    return errors


def check_model(model, x: np.ndarray, labels: np.ndarray, rel_step: float = 1e-5) -> dict[str, float]:
    """Same as :func:`check_layer` but through the cross-entropy loss of a full model."""
    from .layers import softmax_xent

    def loss() -> float:
        return softmax_xent(model.forward(x, training=False), labels)[0]

    model.loss_and_grads(x, labels)
    errors = {}
    for i, layer in enumerate(model.layers):
        for name, p in layer.params.items():
            analytic = layer.grads[name].copy()
            num = numerical_gradient(loss, p, rel_step)
            errors[f"{i}:{type(layer).__name__}.{name}"] = float(relative_error(analytic, num).max())
    return errors
