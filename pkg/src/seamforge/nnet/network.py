"""Detector construction and the forward/backward driver.

Two configurations share one topology style: an entry flow whose
downsampling blocks carry 1x1-conv residuals, a middle flow of
identity-residual separable-conv blocks, an exit flow, global average
pooling, and a two-layer fully-connected head squashed by a sigmoid.
The head is exactly sigmoid(fc2(fc1(backbone(x)))), so the feature taps
are consistent with the classification path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, ShapeError
from ..rng import substream
from .layers import (
    Conv2D,
    Dense,
    GlobalAvgPool,
    Layer,
    MaxPool2D,
    ReLU,
    Residual,
    ScaleShift,
    SeparableConv2D,
    Sigmoid,
    Softmax2,
)

TAP_BACKBONE = "backbone"
TAP_FC1 = "fc1"


@dataclass
class TapOutputs:
    backbone: np.ndarray
    fc1: np.ndarray
    prob: np.ndarray


# Residual bodies close with a damped scale so stacking blocks keeps the
# activation variance bounded at init; training re-opens the branches.
_BRANCH_GAMMA = 0.1


def _entry_block(cin, cout, rng, dtype, leading_relu=True):
    body = []
    if leading_relu:
        body.append(ReLU())
    body += [
        SeparableConv2D(3, 3, cin, cout, rng=rng, dtype=dtype),
        ScaleShift(cout, dtype=dtype),
        ReLU(),
        SeparableConv2D(3, 3, cout, cout, rng=rng, dtype=dtype),
        ScaleShift(cout, dtype=dtype, gamma_init=_BRANCH_GAMMA),
        MaxPool2D(3, 2, "same"),
    ]
    shortcut = [
        Conv2D(1, 1, cin, cout, stride=2, rng=rng, dtype=dtype),
        ScaleShift(cout, dtype=dtype),
    ]
    return Residual(body, shortcut)


def _middle_block(ch, rng, dtype):
    body = []
    for i in range(3):
        body += [
            ReLU(),
            SeparableConv2D(3, 3, ch, ch, rng=rng, dtype=dtype),
            ScaleShift(ch, dtype=dtype, gamma_init=_BRANCH_GAMMA if i == 2 else 1.0),
        ]
    return Residual(body, None)


def _exit_block(cin, cmid, cout, rng, dtype):
    body = [
        ReLU(),
        SeparableConv2D(3, 3, cin, cmid, rng=rng, dtype=dtype),
        ScaleShift(cmid, dtype=dtype),
        ReLU(),
        SeparableConv2D(3, 3, cmid, cout, rng=rng, dtype=dtype),
        ScaleShift(cout, dtype=dtype, gamma_init=_BRANCH_GAMMA),
        MaxPool2D(3, 2, "same"),
    ]
    shortcut = [
        Conv2D(1, 1, cin, cout, stride=2, rng=rng, dtype=dtype),
        ScaleShift(cout, dtype=dtype),
    ]
    return Residual(body, shortcut)


class Network:
    """Fixed-topology detector: backbone -> fc1 -> fc2 -> probability."""

    def __init__(self, config, backbone, fc1, fc2, out_layer, min_input, dtype):
        if not isinstance(fc1, Dense) or not isinstance(fc2, Dense):
            raise ParameterError("head must consist of exactly two dense layers")
        if not isinstance(out_layer, (Sigmoid, Softmax2)):
            raise ParameterError("output layer must squash to a probability")
        self.config = config
        self.backbone = list(backbone)
        self.fc1 = fc1
        self.fc2 = fc2
        self.out_layer = out_layer
        self.min_input = int(min_input)
        self.dtype = np.dtype(dtype)
        self.feature_dims = {TAP_BACKBONE: fc1.din, TAP_FC1: fc1.dout}

    # ---------------------------------------------------------- structure

    def _walk(self):
        def walk(layers, prefix):
            for i, layer in enumerate(layers):
                name = f"{prefix}{i:02d}.{layer.tag}"
                if isinstance(layer, Residual):
                    yield from walk(layer.body, f"{name}.body.")
                    if layer.shortcut is not None:
                        yield from walk(layer.shortcut, f"{name}.sc.")
                else:
                    yield name, layer

        yield from walk(self.backbone, "bb.")
        yield "head.fc1", self.fc1
        yield "head.fc2", self.fc2

    def parameters(self):
        """Ordered {qualified_name: array}; order is the topology order."""
        out = {}
        for name, layer in self._walk():
            for key, arr in layer.param_items():
                out[f"{name}.{key}"] = arr
        return out

    def gradients(self):
        out = {}
        for name, layer in self._walk():
            for key, arr in layer.grad_items():
                out[f"{name}.{key}"] = arr
        return out

    def set_parameters(self, values):
        layers = dict(self._walk())
        for qname, arr in values.items():
            name, key = qname.rsplit(".", 1)
            if name not in layers:
                raise ShapeError(f"unknown layer {name!r} in checkpoint")
            layers[name].set_param(key, arr)

    def parameter_count(self) -> int:
        return sum(arr.size for arr in self.parameters().values())

    # ------------------------------------------------------------ running

    def _check_input(self, x):
        x = np.asarray(x)
        if x.ndim != 4:
            raise ShapeError(f"expected NHWC input, got ndim={x.ndim}")
        if x.shape[3] != 3:
            raise ShapeError(f"detector expects 3 input channels, got {x.shape[3]}")
        if x.shape[1] < self.min_input or x.shape[2] < self.min_input:
            raise ShapeError(
                f"input {x.shape[1]}x{x.shape[2]} below the {self.config} "
                f"config minimum of {self.min_input}"
            )
        return x.astype(self.dtype, copy=False)

    def forward_full(self, x, train: bool = False) -> TapOutputs:
        x = self._check_input(x)
        for layer in self.backbone:
            x = layer.forward(x, train)
        feats = x  # (n, D) after global average pooling
        f1 = self.fc1.forward(feats, train)
        logits = self.fc2.forward(f1, train)
        prob = self.out_layer.forward(logits, train)[:, 0]
        return TapOutputs(backbone=feats, fc1=f1, prob=prob)

    def forward(self, x) -> np.ndarray:
        """Probabilities in (0, 1), one per input row."""
        return self.forward_full(x, train=False).prob

    def extract_features(self, x, tap: str) -> np.ndarray:
        if tap not in (TAP_BACKBONE, TAP_FC1):
            raise ParameterError(f"unknown tap {tap!r}")
        outs = self.forward_full(x, train=False)
        return outs.backbone if tap == TAP_BACKBONE else outs.fc1

    def backward(self, dprob: np.ndarray) -> None:
        """Backpropagate d(loss)/d(probability); grads land on the layers."""
        dy = np.asarray(dprob, dtype=self.dtype)[:, None]
        dy = self.out_layer.backward(dy)
        dy = self.fc2.backward(dy)
        dy = self.fc1.backward(dy)
        for layer in reversed(self.backbone):
            dy = layer.backward(dy)


def build_detector(
    config: str = "desk",
    *,
    seed: int = 0,
    dtype=np.float64,
    head: str = "sigmoid",
) -> Network:
    """Construct the detector.

    "full" is the production-size layout: entry flow to 728 channels, 8
    middle-flow blocks, exit flow to a 2,048-wide backbone, head
    2048 -> 512 -> 1.  "desk" is the reduced homologue with the same motifs
    (1x1-conv entry residuals, 2 identity-residual middle blocks, exit flow,
    global average pool) at backbone width 128, head 128 -> 32 -> 1.
    """
    if config not in ("desk", "full"):
        raise ParameterError(f"config must be 'desk' or 'full', got {config!r}")
    if head not in ("sigmoid", "softmax2"):
        raise ParameterError(f"head must be 'sigmoid' or 'softmax2', got {head!r}")
    rng = substream(seed, "init")
    if config == "desk":
        stem = [8, 16]
        entry = [32, 64, 128]
        middle_blocks, width = 2, 128
        exit_mid, exit_out, final_sep = 128, 128, 128
        min_input = 8
    else:
        stem = [32, 64]
        entry = [128, 256, 728]
        middle_blocks, width = 8, 728
        exit_mid, exit_out, final_sep = 728, 1024, 2048
        min_input = 32

    layers: list[Layer] = [
        Conv2D(3, 3, 3, stem[0], stride=2, rng=rng, dtype=dtype),
        ScaleShift(stem[0], dtype=dtype),
        ReLU(),
        Conv2D(3, 3, stem[0], stem[1], stride=1, rng=rng, dtype=dtype),
        ScaleShift(stem[1], dtype=dtype),
        ReLU(),
    ]
    cin = stem[1]
    for bi, cout in enumerate(entry):
        layers.append(_entry_block(cin, cout, rng, dtype, leading_relu=bi > 0))
        cin = cout
    for _ in range(middle_blocks):
        layers.append(_middle_block(width, rng, dtype))
    layers.append(_exit_block(width, exit_mid, exit_out, rng, dtype))
    if config == "full":
        layers += [
            SeparableConv2D(3, 3, exit_out, 1536, rng=rng, dtype=dtype),
            ScaleShift(1536, dtype=dtype),
            ReLU(),
            SeparableConv2D(3, 3, 1536, final_sep, rng=rng, dtype=dtype),
            ScaleShift(final_sep, dtype=dtype),
            ReLU(),
        ]
    else:
        layers += [
            SeparableConv2D(3, 3, exit_out, final_sep, rng=rng, dtype=dtype),
            ScaleShift(final_sep, dtype=dtype),
            ReLU(),
        ]
    layers.append(GlobalAvgPool())

    backbone_dim = final_sep
    fc1 = Dense(backbone_dim, backbone_dim // 4, rng=rng, dtype=dtype)
    out_dim = 1 if head == "sigmoid" else 2
    fc2 = Dense(backbone_dim // 4, out_dim, rng=rng, dtype=dtype)
    out_layer = Sigmoid() if head == "sigmoid" else Softmax2()
    return Network(config, layers, fc1, fc2, out_layer, min_input, dtype)
