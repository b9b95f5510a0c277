"""Seeded training loop and evaluation for the benchmark CNN."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .activations import SOFTREMISH, ActivationKind
from .errors import ConfigError, DivergedTrainingError
from .mnist import Dataset, batches, load_mnist, synthetic_split
from .model import Model, build_model
from .optim import Optimizer, OptimizerConfig
from .tensor import Precision, argmax_last_axis, deterministic

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    activation: ActivationKind = SOFTREMISH
    sweep_dense: bool = True
    epochs: int = 10
    batch_size: int = 128
    seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    precision: str = "single"
    data_dir: Optional[str] = None
    synthetic: Optional[int] = None
    data_seed: int = 42
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.synthetic is not None and self.synthetic < 2:
            raise ConfigError(f"synthetic dataset needs at least 2 samples, got {self.synthetic}")
        try:
            Precision.parse(self.precision)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["activation"] = {"name": self.activation.name, "alpha": self.activation.alpha}
        return d


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float


@dataclass
class TrainReport:
    config: TrainConfig
    epochs: list[EpochMetrics]
    wall_time: float

    @property
    def max_val_accuracy(self) -> float:
        return max(e.val_accuracy for e in self.epochs)

    @property
    def min_train_loss(self) -> float:
        return min(e.train_loss for e in self.epochs)

    @property
    def min_val_loss(self) -> float:
        return min(e.val_loss for e in self.epochs)

    def summary(self) -> dict:
        return {
            "activation": self.config.activation.label,
            "seed": self.config.seed,
            "max_val_accuracy": self.max_val_accuracy,
            "min_train_loss": self.min_train_loss,
            "min_val_loss": self.min_val_loss,
        }


def load_data(cfg: TrainConfig) -> tuple[Dataset, Dataset]:
    dtype = Precision.parse(cfg.precision).dtype
    if cfg.synthetic is not None:
        return synthetic_split(cfg.data_seed, cfg.synthetic, dtype=dtype)
    if cfg.data_dir is None:
        raise ConfigError("no data source: give a MNIST data directory or a synthetic size")
    return load_mnist(cfg.data_dir, dtype=dtype)


def evaluate(model: Model, ds: Dataset, batch_size: int = 1000) -> tuple[float, float]:
    """Mean cross-entropy and accuracy on ``ds``; parameters are not touched."""
    logits = model.logits(ds.images, batch_size).astype(np.float64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-logp[np.arange(len(ds)), ds.labels].mean())
    accuracy = float(np.mean(argmax_last_axis(logits) == ds.labels))
    return loss, accuracy


def train(
    cfg: TrainConfig,
    train_ds: Dataset,
    val_ds: Dataset,
    on_epoch: Optional[Callable[[EpochMetrics], None]] = None,
) -> TrainReport:
    start = time.perf_counter()
    with deterministic(cfg.deterministic):
        model = build_model(cfg.activation, cfg.sweep_dense, cfg.seed, cfg.precision)
        opt = Optimizer(cfg.optimizer)
        params = model.parameters()
        history = []
        for epoch in range(1, cfg.epochs + 1):
            losses = []
            for b, (x, y) in enumerate(
                batches(train_ds, cfg.batch_size, shuffle=True, seed=cfg.seed, epoch=epoch)
            ):
                loss = model.loss_and_grads(x, y)
                if not math.isfinite(loss):
                    raise DivergedTrainingError("non-finite training loss", epoch, b)
                try:
                    opt.step(params, model.gradients())
                except DivergedTrainingError as exc:
                    raise DivergedTrainingError(str(exc), epoch, b) from None
                losses.append(loss)
            val_loss, val_acc = evaluate(model, val_ds)
            if not math.isfinite(val_loss):
                raise DivergedTrainingError("non-finite validation loss", epoch)
            metrics = EpochMetrics(epoch, float(np.mean(losses)), val_loss, val_acc)
            log.info(
                "%s epoch %d: train_loss=%.6f val_loss=%.6f val_acc=%.4f",
                cfg.activation.label, epoch, metrics.train_loss, val_loss, val_acc,
            )
            history.append(metrics)
            if on_epoch is not None:
                on_epoch(metrics)
    return TrainReport(cfg, history, max(time.perf_counter() - start, 1e-9))
