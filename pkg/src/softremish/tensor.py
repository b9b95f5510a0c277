"""Thin tensor helpers on top of numpy.

Tensors are plain row-major (C-order) ``numpy.ndarray`` objects.  This module
pins down the few things numpy leaves open: the two supported precisions,
strict shape checking (no broadcasting), the argmax tie rule and the rule that
no operation may silently produce NaN or Inf.
"""

from __future__ import annotations

import contextlib
import math
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import DivergedTrainingError, InvalidShapeError


class Precision(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32 if self is Precision.SINGLE else np.float64)

    @classmethod
    def parse(cls, value: "Precision | str") -> "Precision":
        if isinstance(value, Precision):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown precision {value!r}; use 'single' or 'double'") from None


def _check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    shape = tuple(int(s) for s in shape)
    if not shape:
        raise InvalidShapeError("shape must have at least one extent")
    if any(s < 1 for s in shape):
        raise InvalidShapeError(f"every extent must be >= 1, got {shape}")
    return shape


def check_finite(t: np.ndarray, what: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(t)):
        raise DivergedTrainingError(f"non-finite values in {what}")
    return t


def zeros(shape: Sequence[int], precision: Precision | str = Precision.DOUBLE) -> np.ndarray:
    return np.zeros(_check_shape(shape), dtype=Precision.parse(precision).dtype)


def from_values(
    shape: Sequence[int],
    values: Sequence[float],
    precision: Precision | str = Precision.DOUBLE,
) -> np.ndarray:
    shape = _check_shape(shape)
    flat = np.array(values, dtype=Precision.parse(precision).dtype).ravel()
    if flat.size != math.prod(shape):
        raise InvalidShapeError(
            f"{flat.size} values cannot fill shape {shape} ({math.prod(shape)} elements)"
        )
    return check_finite(flat.reshape(shape))


def reshape(t: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    shape = _check_shape(shape)
    if math.prod(shape) != t.size:
        raise InvalidShapeError(f"cannot reshape {t.shape} to {shape}")
    return np.ascontiguousarray(t).reshape(shape)


def flatten(t: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(t).reshape(-1)


def map_elementwise(t: np.ndarray, f: Callable) -> np.ndarray:
    """Apply ``f`` to every element.  ``f`` may be a ufunc or a scalar function."""
    if isinstance(f, np.ufunc):
        out = f(t)
    else:
        try:
            out = np.asarray(f(t), dtype=t.dtype)
            if out.shape != t.shape:
                raise ValueError
        except (TypeError, ValueError):
            out = np.fromiter((f(v) for v in t.ravel()), dtype=t.dtype, count=t.size)
    return check_finite(out.reshape(t.shape).astype(t.dtype, copy=False))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise InvalidShapeError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise InvalidShapeError(f"inner extents differ: {a.shape} x {b.shape}")
    return check_finite(a @ b)


_BINARY_OPS = {"add": np.add, "sub": np.subtract, "mul": np.multiply}


def elementwise_binary(a: np.ndarray, b: np.ndarray, op: str) -> np.ndarray:
    if a.shape != b.shape:
        raise InvalidShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    try:
        fn = _BINARY_OPS[op]
    except KeyError:
        raise ValueError(f"unknown op {op!r}; expected one of {sorted(_BINARY_OPS)}") from None
    return check_finite(fn(a, b))


def argmax_last_axis(t: np.ndarray) -> np.ndarray:
    # np.argmax returns the first occurrence of the maximum: ties -> lowest index.
    if t.ndim != 2:
        raise InvalidShapeError(f"argmax_last_axis needs a rank-2 tensor, got {t.shape}")
    return np.argmax(t, axis=1)


@contextlib.contextmanager
def deterministic(enabled: bool = True):
    """Pin BLAS/OpenMP pools to one thread so reductions run in a fixed order."""
    if not enabled:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=1):
        yield
