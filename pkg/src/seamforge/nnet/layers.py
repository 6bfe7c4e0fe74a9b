"""Layers with exact forward/backward passes on NHWC numpy arrays.

Every layer caches what its backward pass needs when forward runs with
train=True.  Backward returns the input gradient and stores parameter
gradients on the layer; shapes always mirror the primals.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeError, StateError


def _out_size(size: int, k: int, stride: int, padding: str) -> int:
    if padding == "same":
        return -(-size // stride)
    if size < k:
        raise ShapeError(f"input extent {size} smaller than kernel {k} (valid padding)")
    return (size - k) // stride + 1


def _pad_amounts(size: int, k: int, stride: int, padding: str) -> tuple[int, int]:
    if padding == "valid":
        return 0, 0
    out = -(-size // stride)
    total = max((out - 1) * stride + k - size, 0)
    return total // 2, total - total // 2


def _check_padding(padding: str) -> None:
    if padding not in ("same", "valid"):
        raise ShapeError(f"padding must be 'same' or 'valid', got {padding!r}")


def _pad4d(x: np.ndarray, pt: int, pb: int, pl: int, pr: int, value: float) -> np.ndarray:
    if pt == pb == pl == pr == 0:
        return x
    return np.pad(
        x, ((0, 0), (pt, pb), (pl, pr), (0, 0)), mode="constant", constant_values=value
    )


def _patch(xp: np.ndarray, i: int, j: int, ho: int, wo: int, s: int) -> np.ndarray:
    """Strided view of the padded input aligned with kernel offset (i, j)."""
    return xp[:, i : i + (ho - 1) * s + 1 : s, j : j + (wo - 1) * s + 1 : s, :]


class Layer:
    tag = "layer"

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def param_items(self):
        return list(getattr(self, "p", {}).items())

    def grad_items(self):
        return list(getattr(self, "g", {}).items())

    def set_param(self, key: str, value: np.ndarray) -> None:
        current = self.p[key]
        value = np.asarray(value, dtype=current.dtype)
        if value.shape != current.shape:
            raise ShapeError(
                f"{self.tag}.{key}: expected shape {current.shape}, got {value.shape}"
            )
        self.p[key] = value

    def _need_cache(self):
        cache = getattr(self, "_cache", None)
        if cache is None:
            raise StateError(f"{self.tag}: backward called without a cached forward")
        return cache


class Conv2D(Layer):
    """Standard convolution; used for the stem and 1x1 residual shortcuts."""

    tag = "conv"

    def __init__(self, kh, kw, cin, cout, stride=1, padding="same", *, rng, dtype):
        _check_padding(padding)
        self.kh, self.kw, self.cin, self.cout = kh, kw, cin, cout
        self.stride = int(stride)
        self.padding = padding
        fan_in = kh * kw * cin
        self.p = {
            "w": rng.normal(0.0, math.sqrt(2.0 / fan_in), (kh, kw, cin, cout)).astype(dtype),
            "b": np.zeros(cout, dtype=dtype),
        }
        self.g = {}
        self._cache = None

    def forward(self, x, train=False):
        if x.shape[3] != self.cin:
            raise ShapeError(f"conv expects {self.cin} channels, got {x.shape[3]}")
        n, h, w, _ = x.shape
        s = self.stride
        ho = _out_size(h, self.kh, s, self.padding)
        wo = _out_size(w, self.kw, s, self.padding)
        pt, pb = _pad_amounts(h, self.kh, s, self.padding)
        pl, pr = _pad_amounts(w, self.kw, s, self.padding)
        xp = _pad4d(x, pt, pb, pl, pr, 0.0)
        out = np.zeros((n, ho, wo, self.cout), dtype=x.dtype)
        wmat = self.p["w"]
        for i in range(self.kh):
            for j in range(self.kw):
                patch = _patch(xp, i, j, ho, wo, s)
                out += (patch.reshape(-1, self.cin) @ wmat[i, j]).reshape(out.shape)
        out += self.p["b"]
        if train:
            self._cache = (xp, x.shape, (pt, pl), (ho, wo))
        return out

    def backward(self, dy):
        xp, x_shape, (pt, pl), (ho, wo) = self._need_cache()
        n, h, w, _ = x_shape
        s = self.stride
        dy2 = dy.reshape(-1, self.cout)
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(self.p["w"])
        for i in range(self.kh):
            for j in range(self.kw):
                patch = _patch(xp, i, j, ho, wo, s)
                dw[i, j] = patch.reshape(-1, self.cin).T @ dy2
                dpatch = (dy2 @ self.p["w"][i, j].T).reshape(n, ho, wo, self.cin)
                _patch(dxp, i, j, ho, wo, s)[...] += dpatch
        self.g = {"w": dw, "b": dy.sum(axis=(0, 1, 2))}
        return dxp[:, pt : pt + h, pl : pl + w, :]


class SeparableConv2D(Layer):
    """Depthwise spatial filtering (multiplier 1) followed by 1x1 mixing."""

    tag = "sep"

    def __init__(self, kh, kw, cin, cout, stride=1, padding="same", *, rng, dtype):
        _check_padding(padding)
        self.kh, self.kw, self.cin, self.cout = kh, kw, cin, cout
        self.stride = int(stride)
        self.padding = padding
        self.p = {
            "dw": rng.normal(0.0, math.sqrt(2.0 / (kh * kw)), (kh, kw, cin)).astype(dtype),
            "pw": rng.normal(0.0, math.sqrt(2.0 / cin), (cin, cout)).astype(dtype),
            "b": np.zeros(cout, dtype=dtype),
        }
        self.g = {}
        self._cache = None

    def forward(self, x, train=False):
        if x.shape[3] != self.cin:
            raise ShapeError(
                f"separable conv expects {self.cin} channels, got {x.shape[3]}"
            )
        n, h, w, _ = x.shape
        s = self.stride
        ho = _out_size(h, self.kh, s, self.padding)
        wo = _out_size(w, self.kw, s, self.padding)
        pt, pb = _pad_amounts(h, self.kh, s, self.padding)
        pl, pr = _pad_amounts(w, self.kw, s, self.padding)
        xp = _pad4d(x, pt, pb, pl, pr, 0.0)
        mid = np.zeros((n, ho, wo, self.cin), dtype=x.dtype)
        dwk = self.p["dw"]
        for i in range(self.kh):
            for j in range(self.kw):
                mid += _patch(xp, i, j, ho, wo, s) * dwk[i, j]
        out = (mid.reshape(-1, self.cin) @ self.p["pw"]).reshape(
            n, ho, wo, self.cout
        ) + self.p["b"]
        if train:
            self._cache = (xp, x.shape, mid, (pt, pl), (ho, wo))
        return out

    def backward(self, dy):
        xp, x_shape, mid, (pt, pl), (ho, wo) = self._need_cache()
        n, h, w, _ = x_shape
        s = self.stride
        dy2 = dy.reshape(-1, self.cout)
        dpw = mid.reshape(-1, self.cin).T @ dy2
        dmid = (dy2 @ self.p["pw"].T).reshape(n, ho, wo, self.cin)
        ddw = np.zeros_like(self.p["dw"])
        dxp = np.zeros_like(xp)
        dwk = self.p["dw"]
        for i in range(self.kh):
            for j in range(self.kw):
                patch = _patch(xp, i, j, ho, wo, s)
                ddw[i, j] = np.einsum("nhwc,nhwc->c", patch, dmid)
                _patch(dxp, i, j, ho, wo, s)[...] += dmid * dwk[i, j]
        self.g = {"dw": ddw, "pw": dpw, "b": dy.sum(axis=(0, 1, 2))}
        return dxp[:, pt : pt + h, pl : pl + w, :]


class ScaleShift(Layer):
    """Per-channel learnable scale and shift (batch-statistics-free)."""

    tag = "ss"

    def __init__(self, channels, *, dtype, gamma_init=1.0):
        self.p = {
            "gamma": np.full(channels, gamma_init, dtype=dtype),
            "beta": np.zeros(channels, dtype=dtype),
        }
        self.g = {}
        self._cache = None

    def forward(self, x, train=False):
        if train:
            self._cache = x
        return x * self.p["gamma"] + self.p["beta"]

    def backward(self, dy):
        x = self._need_cache()
        axes = tuple(range(x.ndim - 1))
        self.g = {"gamma": (dy * x).sum(axis=axes), "beta": dy.sum(axis=axes)}
        return dy * self.p["gamma"]


class ReLU(Layer):
    tag = "relu"

    def __init__(self):
        self._cache = None

    def forward(self, x, train=False):
        if train:
            self._cache = x > 0  # subgradient at 0 is 0
        return np.maximum(x, 0)

    def backward(self, dy):
        mask = self._need_cache()
        return dy * mask


class MaxPool2D(Layer):
    tag = "pool"

    def __init__(self, k=3, stride=2, padding="same"):
        _check_padding(padding)
        self.k = int(k)
        self.stride = int(stride)
        self.padding = padding
        self._cache = None

    def forward(self, x, train=False):
        n, h, w, c = x.shape
        k, s = self.k, self.stride
        ho = _out_size(h, k, s, self.padding)
        wo = _out_size(w, k, s, self.padding)
        pt, pb = _pad_amounts(h, k, s, self.padding)
        pl, pr = _pad_amounts(w, k, s, self.padding)
        xp = _pad4d(x, pt, pb, pl, pr, -np.inf)
        stack = np.empty((n, ho, wo, c, k * k), dtype=x.dtype)
        for i in range(k):
            for j in range(k):
                stack[..., i * k + j] = _patch(xp, i, j, ho, wo, s)
        am = stack.argmax(axis=-1)
        out = np.take_along_axis(stack, am[..., None], axis=-1)[..., 0]
        if train:
            self._cache = (am, xp.shape, x.shape, (pt, pl))
        return out

    def backward(self, dy):
        am, xp_shape, x_shape, (pt, pl) = self._need_cache()
        n, h, w, c = x_shape
        k, s = self.k, self.stride
        dxp = np.zeros(xp_shape, dtype=dy.dtype)
        ni, hi, wi, ci = np.indices(am.shape, sparse=True)
        rows = hi * s + am // k
        cols = wi * s + am % k
        np.add.at(dxp, (ni, rows, cols, ci), dy)
        return dxp[:, pt : pt + h, pl : pl + w, :]


class GlobalAvgPool(Layer):
    tag = "gap"

    def __init__(self):
        self._cache = None

    def forward(self, x, train=False):
        if train:
            self._cache = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dy):
        n, h, w, c = self._need_cache()
        scale = 1.0 / (h * w)
        return np.broadcast_to(dy[:, None, None, :] * scale, (n, h, w, c)).copy()


class Dense(Layer):
    tag = "fc"

    def __init__(self, din, dout, *, rng, dtype):
        self.din, self.dout = din, dout
        self.p = {
            "w": rng.normal(0.0, math.sqrt(2.0 / din), (din, dout)).astype(dtype),
            "b": np.zeros(dout, dtype=dtype),
        }
        self.g = {}
        self._cache = None

    def forward(self, x, train=False):
        if x.shape[-1] != self.din:
            raise ShapeError(f"dense expects dim {self.din}, got {x.shape[-1]}")
        if train:
            self._cache = x
        return x @ self.p["w"] + self.p["b"]

    def backward(self, dy):
        x = self._need_cache()
        self.g = {"w": x.T @ dy, "b": dy.sum(axis=0)}
        return dy @ self.p["w"].T


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Sigmoid(Layer):
    tag = "sigmoid"

    def __init__(self):
        self._cache = None

    def forward(self, x, train=False):
        out = _stable_sigmoid(x)
        if train:
            self._cache = out
        return out

    def backward(self, dy):
        p = self._need_cache()
        return dy * p * (1.0 - p)


class Softmax2(Layer):
    """Two-way softmax reduced to the probability of class 1."""

    tag = "softmax2"

    def __init__(self):
        self._cache = None

    def forward(self, x, train=False):
        if x.shape[-1] != 2:
            raise ShapeError(f"2-way softmax expects 2 logits, got {x.shape[-1]}")
        # p1 = sigmoid(z1 - z0)
        p1 = _stable_sigmoid(x[..., 1] - x[..., 0])
        out = p1[..., None]
        if train:
            self._cache = p1
        return out

    def backward(self, dy):
        p1 = self._need_cache()
        dd = dy[..., 0] * p1 * (1.0 - p1)
        dx = np.empty(p1.shape + (2,), dtype=dy.dtype)
        dx[..., 0] = -dd
        dx[..., 1] = dd
        return dx


class Residual(Layer):
    """branch(x) + shortcut(x); shortcut None means identity."""

    tag = "res"

    def __init__(self, body, shortcut=None):
        self.body = list(body)
        self.shortcut = list(shortcut) if shortcut is not None else None

    def forward(self, x, train=False):
        out = x
        for layer in self.body:
            out = layer.forward(out, train)
        sc = x
        if self.shortcut is not None:
            for layer in self.shortcut:
                sc = layer.forward(sc, train)
        if out.shape != sc.shape:
            raise ShapeError(
                f"residual branches disagree: body {out.shape} vs shortcut {sc.shape}"
            )
        return out + sc

    def backward(self, dy):
        dbody = dy
        for layer in reversed(self.body):
            dbody = layer.backward(dbody)
        dsc = dy
        if self.shortcut is not None:
            for layer in reversed(self.shortcut):
                dsc = layer.backward(dsc)
        return dbody + dsc


def conv2d(x, w, b=None, stride=1, padding="same"):
    """Functional standard convolution (forward only)."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    layer = Conv2D.__new__(Conv2D)
    layer.kh, layer.kw, layer.cin, layer.cout = w.shape
    layer.stride = int(stride)
    _check_padding(padding)
    layer.padding = padding
    layer.p = {"w": w, "b": np.zeros(w.shape[3]) if b is None else np.asarray(b, np.float64)}
    layer.g = {}
    layer._cache = None
    return layer.forward(x)


def separable_conv2d(x, depthwise, pointwise, stride=1, padding="same"):
    """Functional separable convolution (forward only).

    depthwise has shape (kh, kw, C); pointwise (C, C') or (1, 1, C, C').
    """
    x = np.asarray(x, dtype=np.float64)
    depthwise = np.asarray(depthwise, dtype=np.float64)
    pointwise = np.asarray(pointwise, dtype=np.float64)
    if pointwise.ndim == 4:
        if pointwise.shape[:2] != (1, 1):
            raise ShapeError(f"pointwise kernel must be 1x1, got {pointwise.shape[:2]}")
        pointwise = pointwise[0, 0]
    if depthwise.ndim != 3 or pointwise.ndim != 2:
        raise ShapeError("depthwise must be (kh, kw, C) and pointwise (C, C')")
    if depthwise.shape[2] != pointwise.shape[0]:
        raise ShapeError(
            f"channel mismatch: depthwise C={depthwise.shape[2]}, "
            f"pointwise C={pointwise.shape[0]}"
        )
    if x.ndim != 4 or x.shape[3] != depthwise.shape[2]:
        raise ShapeError("input must be NHWC with C matching the kernels")
    layer = SeparableConv2D.__new__(SeparableConv2D)
    layer.kh, layer.kw, layer.cin = depthwise.shape
    layer.cout = pointwise.shape[1]
    layer.stride = int(stride)
    _check_padding(padding)
    layer.padding = padding
    layer.p = {"dw": depthwise, "pw": pointwise, "b": np.zeros(layer.cout)}
    layer.g = {}
    layer._cache = None
    return layer.forward(x)
