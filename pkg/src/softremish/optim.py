"""SGD and Adam over a flat list of parameter arrays.

Updates are applied in place to the arrays passed in, so the layers that own
them see the new values without any copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DivergedTrainingError, InvalidShapeError


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in ("sgd", "adam"):
            raise ConfigError(f"optimizer must be 'sgd' or 'adam', got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ConfigError(f"{name} must lie in [0, 1), got {v}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class OptimizerState:
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def _check(params: Sequence[np.ndarray], grads: Sequence[np.ndarray]):
    if len(params) != len(grads):
        raise InvalidShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise InvalidShapeError(f"parameter {i}: shape {p.shape} vs gradient {g.shape}")
        if not np.all(np.isfinite(g)):
            raise DivergedTrainingError(f"non-finite gradient for parameter {i}")


def step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
    cfg: OptimizerConfig,
) -> Sequence[np.ndarray]:
    """Apply one update in place and return ``params``."""
    _check(params, grads)
    state.step_count += 1
    lr = cfg.learning_rate
    if cfg.kind == "sgd":
        for p, g in zip(params, grads):
            p -= p.dtype.type(lr) * g
        return params

    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    t = state.step_count
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        dt = p.dtype.type
        m *= dt(b1)
        m += dt(1.0 - b1) * g
        v *= dt(b2)
        v += dt(1.0 - b2) * (g * g)
        p -= dt(lr) * (m / dt(c1)) / (np.sqrt(v / dt(c2)) + dt(cfg.epsilon))
    return params


class Optimizer:
    """Bundles a config with its running state."""

    def __init__(self, cfg: OptimizerConfig | None = None):
        self.cfg = cfg or OptimizerConfig()
        self.state = OptimizerState()

    def step(self, params, grads):
        return step(params, grads, self.state, self.cfg)
