"""ReLU, Tanh, Softplus, Mish and SoftReMish with closed-form derivatives.

SoftReMish is ``f(x) = x * tanh(softplus(alpha * x))``.  With ``alpha = 1`` it
is Mish, and both go through the same code path so the equivalence is exact.

Writing ``s = softplus(a x)``, ``t = tanh(s)``, ``g = sigmoid(a x)`` and
``u = 1 - t**2``::

    f   = x t
    f'  = t + a x u g
    f'' = 2 a u g + a**2 x u g (1 - g - 2 t g)

All functions accept python floats (returning floats) or numpy arrays
(returning arrays of the same dtype).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import InvalidRangeError

#: ``a*x`` above this value takes the ``z + log1p(exp(-z))`` branch.
SOFTPLUS_THRESHOLD = 20.0
DEFAULT_ALPHA = 2.0


class Tag(str, Enum):
    RELU = "relu"
    TANH = "tanh"
    SOFTPLUS = "softplus"
    MISH = "mish"
    SOFTREMISH = "softremish"


_DISPLAY = {
    Tag.RELU: "ReLU",
    Tag.TANH: "Tanh",
    Tag.SOFTPLUS: "Softplus",
    Tag.MISH: "Mish",
    Tag.SOFTREMISH: "SoftReMish",
}


@dataclass(frozen=True)
class ActivationKind:
    """One of the five activations; ``alpha`` is set only for SoftReMish."""

    tag: Tag
    alpha: Optional[float] = field(default=None)

    def __post_init__(self):
        tag = Tag(self.tag)
        object.__setattr__(self, "tag", tag)
        if tag is Tag.SOFTREMISH:
            alpha = DEFAULT_ALPHA if self.alpha is None else float(self.alpha)
            if not (alpha > 0 and math.isfinite(alpha)):
                raise ValueError(f"SoftReMish alpha must be a positive finite real, got {alpha}")
            object.__setattr__(self, "alpha", alpha)
        else:
            object.__setattr__(self, "alpha", None)

    @classmethod
    def parse(cls, name: str, alpha: Optional[float] = None) -> "ActivationKind":
        try:
            tag = Tag(name.strip().lower())
        except ValueError:
            valid = ", ".join(t.value for t in Tag)
            raise ValueError(f"unknown activation {name!r}; valid names: {valid}") from None
        return cls(tag, alpha if tag is Tag.SOFTREMISH else None)

    @property
    def name(self) -> str:
        return self.tag.value

    @property
    def label(self) -> str:
        """File-name friendly identifier; non-default alphas are spelled out."""
        if self.tag is Tag.SOFTREMISH and self.alpha != DEFAULT_ALPHA:
            return f"softremish-a{self.alpha:g}"
        return self.tag.value

    def __str__(self) -> str:
        if self.tag is Tag.SOFTREMISH:
            return f"SoftReMish(alpha={self.alpha:g})"
        return _DISPLAY[self.tag]

    # convenience mirrors of the module-level functions
    def __call__(self, x):
        return eval(self, x)

    def d1(self, x):
        return eval_d1(self, x)

    def d2(self, x):
        return eval_d2(self, x)


RELU = ActivationKind(Tag.RELU)
TANH = ActivationKind(Tag.TANH)
SOFTPLUS = ActivationKind(Tag.SOFTPLUS)
MISH = ActivationKind(Tag.MISH)
SOFTREMISH = ActivationKind(Tag.SOFTREMISH, DEFAULT_ALPHA)

ALL_KINDS = (RELU, TANH, SOFTPLUS, MISH, SOFTREMISH)
BENCHMARK_SWEEP = (RELU, TANH, MISH, SOFTREMISH)


def _as_array(x):
    """Return a float array of rank >= 1 plus how to shape the result."""
    scalar = np.ndim(x) == 0
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    # python/numpy scalars come back as float, 0-d arrays as 0-d arrays
    shape = None if not scalar else ("float" if not isinstance(x, np.ndarray) else ())
    return (arr.reshape(1) if scalar else arr), shape


def _out(arr, shape):
    if shape is None:
        return arr
    return float(arr[0]) if shape == "float" else arr.reshape(())


def _softplus_sigmoid(z, need_sigmoid=True):
    """``softplus(z)`` and ``sigmoid(z)`` sharing one ``exp``.

    Below the threshold ``ln(1 + e^z)`` is evaluated directly; above it the
    ``z + ln(1 + e^-z)`` form is used, so ``exp`` never overflows.
    """
    ez = np.exp(np.minimum(z, SOFTPLUS_THRESHOLD))
    sp = np.log1p(ez)
    sig = ez / (1 + ez) if need_sigmoid else None
    big = z > SOFTPLUS_THRESHOLD
    if big.any():
        zb = z[big]
        em = np.exp(-zb)
        sp[big] = zb + np.log1p(em)
        if need_sigmoid:
            sig[big] = 1 / (1 + em)
    return sp, sig


def _softplus(z):
    return _softplus_sigmoid(z, need_sigmoid=False)[0]


def _sigmoid(z):
    return _softplus_sigmoid(z)[1]


def softplus_stable(x, a: float = 1.0):
    """``ln(1 + exp(a x))`` without overflow for any finite ``x``."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    arr, scalar = _as_array(x)
    return _out(_softplus(arr * arr.dtype.type(a)), scalar)


def sigmoid(x):
    arr, scalar = _as_array(x)
    return _out(_sigmoid(arr), scalar)


def _alpha(kind: ActivationKind) -> float:
    return 1.0 if kind.tag is Tag.MISH else kind.alpha


def _remish_parts(x, a):
    sp, g = _softplus_sigmoid(x * x.dtype.type(a))
    return np.tanh(sp), g


def eval(kind: ActivationKind, x):  # noqa: A001 - mirrors the operation name
    arr, scalar = _as_array(x)
    tag = kind.tag
    if tag is Tag.RELU:
        y = np.where(arr > 0, arr, arr.dtype.type(0))
    elif tag is Tag.TANH:
        y = np.tanh(arr)
    elif tag is Tag.SOFTPLUS:
        y = _softplus(arr)
    else:
        y = arr * np.tanh(_softplus(arr * arr.dtype.type(_alpha(kind))))
    return _out(y, scalar)


def eval_d1(kind: ActivationKind, x):
    arr, scalar = _as_array(x)
    tag = kind.tag
    if tag is Tag.RELU:
        # subgradient at 0 is taken as 0
        y = (arr > 0).astype(arr.dtype)
    elif tag is Tag.TANH:
        t = np.tanh(arr)
        y = 1 - t * t
    elif tag is Tag.SOFTPLUS:
        y = _sigmoid(arr)
    else:
        a = arr.dtype.type(_alpha(kind))
        t, g = _remish_parts(arr, a)
        y = t + a * arr * (1 - t * t) * g
    return _out(y, scalar)


def eval_d2(kind: ActivationKind, x):
    arr, scalar = _as_array(x)
    tag = kind.tag
    if tag is Tag.RELU:
        y = np.zeros_like(arr)
    elif tag is Tag.TANH:
        t = np.tanh(arr)
        y = -2 * t * (1 - t * t)
    elif tag is Tag.SOFTPLUS:
        g = _sigmoid(arr)
        y = g * (1 - g)
    else:
        a = arr.dtype.type(_alpha(kind))
        t, g = _remish_parts(arr, a)
        ug = (1 - t * t) * g
        y = 2 * a * ug + a * a * arr * ug * (1 - g - 2 * t * g)
    return _out(y, scalar)


def eval_with_d1(kind: ActivationKind, x: np.ndarray):
    """Value and first derivative in one pass, sharing the transcendental calls."""
    arr, _ = _as_array(x)
    tag = kind.tag
    if tag is Tag.RELU:
        mask = arr > 0
        return np.where(mask, arr, arr.dtype.type(0)), mask.astype(arr.dtype)
    if tag is Tag.TANH:
        t = np.tanh(arr)
        return t, 1 - t * t
    if tag is Tag.SOFTPLUS:
        return _softplus_sigmoid(arr)
    a = arr.dtype.type(_alpha(kind))
    t, g = _remish_parts(arr, a)
    return arr * t, t + a * arr * (1 - t * t) * g


ORDER_NAMES = {0: "value", 1: "first_derivative", 2: "second_derivative"}
_EVALUATORS = {0: eval, 1: eval_d1, 2: eval_d2}


@dataclass(frozen=True)
class ActivationCurve:
    kind: ActivationKind
    order: int
    xs: np.ndarray
    ys: np.ndarray

    @property
    def order_name(self) -> str:
        return ORDER_NAMES[self.order]


def sample_curve(
    kind: ActivationKind, order: int, xmin: float, xmax: float, n: int
) -> ActivationCurve:
    """``n`` equally spaced samples on ``[xmin, xmax]`` (both ends included)."""
    if order not in _EVALUATORS:
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    if n < 2 or not xmin < xmax:
        raise InvalidRangeError(
            f"invalid sampling range: need xmin < xmax and n >= 2, got [{xmin}, {xmax}], n={n}"
        )
    xs = np.linspace(float(xmin), float(xmax), int(n))
    ys = _EVALUATORS[order](kind, xs)
    return ActivationCurve(kind, order, xs, ys)
