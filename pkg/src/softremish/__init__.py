"""SoftReMish activation and a from-scratch numpy CNN benchmark on MNIST."""

from .activations import (
    ALL_KINDS,
    MISH,
    BENCHMARK_SWEEP,
    RELU,
    SOFTPLUS,
    SOFTREMISH,
    TANH,
    ActivationKind,
    eval,
    eval_d1,
    eval_d2,
    sample_curve,
    softplus_stable,
)
from .model import Model, build_model
from .trainer import TrainConfig, TrainReport, evaluate, train

__version__ = "0.1.0"
