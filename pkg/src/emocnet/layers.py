"""Layer primitives: forward evaluation and reverse-mode derivatives.

Each layer is a stateless shape spec. Parameters live in the owning
network's flat parameter vector and are handed to ``forward``/``backward``
as a list of per-segment arrays (weights first, then biases). All math is
double precision; inputs are single samples (no batch axis).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """A tensor shape does not match what a layer expects."""


def _shape_str(shape) -> str:
    return "x".join(str(int(s)) for s in shape)


@dataclass(frozen=True)
class FullyConnected:
    """Affine map y = W @ flatten(x) + b."""

    in_features: int
    out_features: int

    def __post_init__(self):
        if self.in_features < 1 or self.out_features < 1:
            raise ShapeError("fully-connected extents must be positive")

    def out_shape(self, in_shape):
        if int(np.prod(in_shape)) != self.in_features:
            raise ShapeError(
                f"fully-connected layer expects {self.in_features} input values, "
                f"got shape {_shape_str(in_shape)}"
            )
        return (self.out_features,)

    def param_shapes(self):
        return [(self.out_features, self.in_features), (self.out_features,)]

    def init_params(self, rng: np.random.Generator, weight_scale: float):
        w = rng.normal(0.0, weight_scale, size=(self.out_features, self.in_features))
        b = np.zeros(self.out_features)
        return [w, b]

    def forward(self, x, params):
        w, b = params
        v = x.reshape(-1)
        return w @ v + b, (v, x.shape)

    def backward(self, dy, cache, params):
        w, _ = params
        v, x_shape = cache
        dw = np.outer(dy, v)
        db = np.array(dy, copy=True)
        dx = (w.T @ dy).reshape(x_shape)
        return dx, [dw, db]


@dataclass(frozen=True)
class Convolution2D:
    """2-D cross-correlation over a (channels, height, width) input.

    Valid convolution by default; ``padding="same"`` zero-pads so the
    spatial output is ceil(extent / stride).
    """

    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: str = "valid"

    def __post_init__(self):
        if self.kernel_size < 1 or self.stride < 1:
            raise ShapeError("kernel size and stride must be positive")
        if self.padding not in ("valid", "same"):
            raise ShapeError(f"unknown padding mode {self.padding!r}")

    def _pad_amounts(self, h, w):
        if self.padding == "valid":
            return (0, 0), (0, 0)
        k, s = self.kernel_size, self.stride
        out_h = -(-h // s)
        out_w = -(-w // s)
        pad_h = max((out_h - 1) * s + k - h, 0)
        pad_w = max((out_w - 1) * s + k - w, 0)
        return (pad_h // 2, pad_h - pad_h // 2), (pad_w // 2, pad_w - pad_w // 2)

    def out_shape(self, in_shape):
        if len(in_shape) != 3 or in_shape[0] != self.in_channels:
            raise ShapeError(
                f"convolution expects ({self.in_channels}, H, W) input, "
                f"got shape {_shape_str(in_shape)}"
            )
        _, h, w = in_shape
        (pt, pb), (pl, pr) = self._pad_amounts(h, w)
        h, w = h + pt + pb, w + pl + pr
        if h < self.kernel_size or w < self.kernel_size:
            raise ShapeError("input smaller than convolution kernel")
        out_h = (h - self.kernel_size) // self.stride + 1
        out_w = (w - self.kernel_size) // self.stride + 1
        return (self.out_channels, out_h, out_w)

    def param_shapes(self):
        k = self.kernel_size
        return [(self.out_channels, self.in_channels, k, k), (self.out_channels,)]

    def init_params(self, rng: np.random.Generator, weight_scale: float):
        k = self.kernel_size
        w = rng.normal(0.0, weight_scale, size=(self.out_channels, self.in_channels, k, k))
        b = np.zeros(self.out_channels)
        return [w, b]

    def forward(self, x, params):
        w, b = params
        k, s = self.kernel_size, self.stride
        (pt, pb), (pl, pr) = self._pad_amounts(x.shape[1], x.shape[2])
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr))) if pt + pb + pl + pr else x
        # (C, out_h, out_w, k, k) patch view, subsampled by stride
        windows = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::s, ::s]
        _, out_h, out_w = self.out_shape(x.shape)
        cols = windows.transpose(1, 2, 0, 3, 4).reshape(out_h * out_w, -1)
        w_mat = w.reshape(self.out_channels, -1)
        y = (w_mat @ cols.T).reshape(self.out_channels, out_h, out_w) + b[:, None, None]
        return y, (cols, xp.shape, (pt, pb, pl, pr), x.shape)

    def backward(self, dy, cache, params):
        w, _ = params
        cols, padded_shape, (pt, pb, pl, pr), x_shape = cache
        k, s = self.kernel_size, self.stride
        out_c, out_h, out_w = dy.shape
        dy_mat = dy.reshape(out_c, out_h * out_w)
        dw = (dy_mat @ cols).reshape(w.shape)
        db = dy.sum(axis=(1, 2))
        w_mat = w.reshape(out_c, -1)
        dcols = (w_mat.T @ dy_mat).reshape(self.in_channels, k, k, out_h, out_w)
        dxp = np.zeros(padded_shape)
        for u in range(k):
            for v in range(k):
                dxp[:, u : u + out_h * s : s, v : v + out_w * s : s] += dcols[:, u, v]
        dx = dxp[:, pt : padded_shape[1] - pb, pl : padded_shape[2] - pr]
        return dx.reshape(x_shape), [dw, db]


@dataclass(frozen=True)
class MaxPool2D:
    """Non-overlapping max pooling over square windows; trailing rows and
    columns that do not fill a window are dropped."""

    window: int

    def __post_init__(self):
        if self.window < 1:
            raise ShapeError("pool window must be positive")

    def out_shape(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(
                f"max-pool expects (C, H, W) input, got shape {_shape_str(in_shape)}"
            )
        c, h, w = in_shape
        if h < self.window or w < self.window:
            raise ShapeError("input smaller than pool window")
        return (c, h // self.window, w // self.window)

    def param_shapes(self):
        return []

    def forward(self, x, params):
        p = self.window
        c, out_h, out_w = self.out_shape(x.shape)
        trimmed = x[:, : out_h * p, : out_w * p]
        patches = trimmed.reshape(c, out_h, p, out_w, p).transpose(0, 1, 3, 2, 4)
        flat = patches.reshape(c, out_h, out_w, p * p)
        arg = flat.argmax(axis=-1)
        y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
        return y, (arg, x.shape)

    def backward(self, dy, cache, params):
        arg, x_shape = cache
        p = self.window
        c, out_h, out_w = dy.shape
        flat = np.zeros((c, out_h, out_w, p * p))
        np.put_along_axis(flat, arg[..., None], dy[..., None], axis=-1)
        patches = flat.reshape(c, out_h, out_w, p, p).transpose(0, 1, 3, 2, 4)
        dx = np.zeros(x_shape)
        dx[:, : out_h * p, : out_w * p] = patches.reshape(c, out_h * p, out_w * p)
        return dx, []


@dataclass(frozen=True)
class ReLU:
    def out_shape(self, in_shape):
        return tuple(in_shape)

    def param_shapes(self):
        return []

    def forward(self, x, params):
        return np.maximum(x, 0.0), (x > 0,)

    def backward(self, dy, cache, params):
        (mask,) = cache
        return dy * mask, []


@dataclass(frozen=True)
class Softmax:
    """Normalized exponential over a vector; max is subtracted before
    exponentiation to avoid overflow."""

    def out_shape(self, in_shape):
        if len(in_shape) != 1:
            raise ShapeError(
                f"softmax expects a vector input, got shape {_shape_str(in_shape)}"
            )
        return tuple(in_shape)

    def param_shapes(self):
        return []

    def forward(self, x, params):
        e = np.exp(x - x.max())
        p = e / e.sum()
        return p, (p,)

    def backward(self, dy, cache, params):
        (p,) = cache
        return p * (dy - float(p @ dy)), []


LAYER_KINDS = {
    "fully_connected": FullyConnected,
    "convolution2d": Convolution2D,
    "max_pool2d": MaxPool2D,
    "relu": ReLU,
    "softmax": Softmax,
}
