"""The benchmark CNN: a layer stack with a shared forward/backward driver."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .activations import RELU, ActivationKind
from .layers import (
    Conv2DSpec,
    DenseSpec,
    FlattenSpec,
    Layer,
    LayerSpec,
    MaxPool2DSpec,
    SeedLike,
    SoftmaxOutputSpec,
    build_layer,
    softmax,
    softmax_xent,
)
from .tensor import Precision

INPUT_SHAPE = (28, 28, 1)


def benchmark_architecture(activation: ActivationKind, sweep_dense: bool = True, classes: int = 10):
    """Conv(32) - pool - Conv(64) - pool - flatten - Dense(128) - softmax(10)."""
    return [
        Conv2DSpec(32, (3, 3), activation),
        MaxPool2DSpec((2, 2)),
        Conv2DSpec(64, (3, 3), activation),
        MaxPool2DSpec((2, 2)),
        FlattenSpec(),
        DenseSpec(128, activation if sweep_dense else RELU),
        SoftmaxOutputSpec(classes),
    ]


class Model:
    def __init__(
        self,
        specs: Sequence[LayerSpec],
        input_shape=INPUT_SHAPE,
        seed: SeedLike = 0,
        precision: Precision | str = Precision.SINGLE,
    ):
        self.precision = Precision.parse(precision)
        self.specs = list(specs)
        self.input_shape = tuple(input_shape)
        # one independent stream per layer, all derived from the seed
        if isinstance(seed, np.random.Generator):
            seed = int(seed.integers(2**63))
        streams = np.random.SeedSequence(seed).spawn(len(self.specs))
        self.layers: list[Layer] = []
        shape = self.input_shape
        for spec, ss in zip(self.specs, streams):
            layer = build_layer(spec, shape, np.random.default_rng(ss), self.precision)
            self.layers.append(layer)
            shape = layer.output_shape

    @property
    def dtype(self):
        return self.precision.dtype

    @property
    def output_shape(self):
        return self.layers[-1].output_shape

    def shape_chain(self) -> list[tuple[int, ...]]:
        """Per-sample output shape of every layer, in order."""
        return [layer.output_shape for layer in self.layers]

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params.values()]

    def gradients(self) -> list[np.ndarray]:
        return [layer.grads[k] for layer in self.layers for k in layer.params]

    def param_count(self) -> int:
        return sum(layer.param_count() for layer in self.layers)

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        """Logits for a batch of images."""
        x = np.asarray(x, dtype=self.dtype)
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, grad_logits: np.ndarray, input_grad: bool = False) -> Optional[np.ndarray]:
        g = grad_logits
        last = len(self.layers) - 1
        for i in range(last, -1, -1):
            g = self.layers[i].backward(g, input_grad=input_grad or i > 0)
        return g

    def loss_and_grads(self, images, labels) -> float:
        """One training forward/backward pass; gradients land in each layer's ``grads``."""
        logits = self.forward(images, training=True)
        loss, grad = softmax_xent(logits, labels)
        self.backward(grad)
        return loss

    def predict_proba(self, images, batch_size: int = 1000) -> np.ndarray:
        return softmax(self.logits(images, batch_size))

    def logits(self, images, batch_size: int = 1000) -> np.ndarray:
        out = [
            self.forward(images[i : i + batch_size], training=False)
            for i in range(0, len(images), batch_size)
        ]
        return np.concatenate(out, axis=0)

    def describe(self) -> list[str]:
        rows = []
        for layer in self.layers:
            rows.append(
                f"{type(layer).__name__:<14} out={'x'.join(map(str, layer.output_shape)):<10} "
                f"params={layer.param_count():<8} activation={layer.activation_name}"
            )
        return rows


def build_model(
    activation: ActivationKind,
    sweep_dense: bool = True,
    seed: SeedLike = 0,
    precision: Precision | str = Precision.SINGLE,
) -> Model:
    return Model(benchmark_architecture(activation, sweep_dense), INPUT_SHAPE, seed, precision)
