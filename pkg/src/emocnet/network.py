"""Layered classifier with a flat parameter vector.

The network owns all parameters as one contiguous float64 vector; the
layout records the fixed segment order (per parameterized layer: weights,
then biases) so every gradient and Jacobian consumer agrees on indexing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import LAYER_KINDS, FullyConnected, ShapeError, Softmax

DEFAULT_WEIGHT_SCALE = 0.01


@dataclass(frozen=True)
class Segment:
    layer_index: int
    name: str
    offset: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


class ParamLayout:
    """Fixed flattening order for all per-layer parameter arrays."""

    def __init__(self, layers):
        self.segments: list[Segment] = []
        offset = 0
        names = ("weights", "biases")
        for i, layer in enumerate(layers):
            for name, shape in zip(names, layer.param_shapes()):
                seg = Segment(i, name, offset, tuple(shape))
                self.segments.append(seg)
                offset += seg.size
        self.total = offset
        self._by_layer: dict[int, list[Segment]] = {}
        for seg in self.segments:
            self._by_layer.setdefault(seg.layer_index, []).append(seg)

    def layer_views(self, theta: np.ndarray, layer_index: int) -> list[np.ndarray]:
        """Zero-copy per-array views into ``theta`` for one layer."""
        return [
            theta[s.offset : s.offset + s.size].reshape(s.shape)
            for s in self._by_layer.get(layer_index, [])
        ]

    def flatten(self, per_layer_arrays) -> np.ndarray:
        out = np.empty(self.total)
        i = 0
        for arrays in per_layer_arrays:
            for a in arrays:
                seg = self.segments[i]
                a = np.asarray(a, dtype=np.float64)
                if a.shape != seg.shape:
                    raise ShapeError(
                        f"segment {i} expects shape {seg.shape}, got {a.shape}"
                    )
                out[seg.offset : seg.offset + seg.size] = a.reshape(-1)
                i += 1
        if i != len(self.segments):
            raise ShapeError("wrong number of parameter arrays")
        return out

    def unflatten(self, theta: np.ndarray):
        """Per-layer list of copies; flatten(unflatten(v)) == v."""
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.total,):
            raise ShapeError(f"expected parameter vector of length {self.total}")
        out = []
        i = 0
        for seg in self.segments:
            while len(out) <= seg.layer_index:
                out.append([])
            out[seg.layer_index].append(
                theta[seg.offset : seg.offset + seg.size].reshape(seg.shape).copy()
            )
            i += 1
        return out


class Network:
    """Ordered layer stack ending in Softmax; output is a class posterior.

    Evaluation and differentiation are read-only; only the training code
    mutates ``theta`` (in place, so layout views stay valid).
    """

    def __init__(self, layers, input_shape, rng=None, theta=None,
                 weight_scale: float = DEFAULT_WEIGHT_SCALE):
        layers = list(layers)
        if not layers:
            raise ShapeError("network needs at least one layer")
        for layer in layers[:-1]:
            if isinstance(layer, Softmax):
                raise ShapeError("softmax may appear only as the final layer")
        if not isinstance(layers[-1], Softmax):
            raise ShapeError("final layer must be softmax")
        self.layers = layers
        self.input_shape = tuple(int(s) for s in input_shape)
        shape = self.input_shape
        self.shapes = [shape]
        for layer in layers:
            shape = layer.out_shape(shape)
            self.shapes.append(shape)
        self.num_classes = int(self.shapes[-1][0])
        self.layout = ParamLayout(layers)
        if theta is not None:
            theta = np.asarray(theta, dtype=np.float64)
            if theta.shape != (self.layout.total,):
                raise ShapeError(
                    f"expected {self.layout.total} parameters, got {theta.shape}"
                )
            self.theta = theta.copy()
        else:
            rng = rng if rng is not None else np.random.default_rng(0)
            self.theta = self.layout.flatten(
                [layer.init_params(rng, weight_scale) if layer.param_shapes() else []
                 for layer in self.layers]
            )

    @property
    def param_count(self) -> int:
        return self.layout.total

    def copy(self) -> "Network":
        return Network(self.layers, self.input_shape, theta=self.theta)

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.input_shape:
            raise ShapeError(
                f"network expects input shape {self.input_shape}, got {x.shape}"
            )
        return x

    def _forward_cached(self, x):
        x = self._check_input(x)
        caches = []
        for i, layer in enumerate(self.layers):
            params = self.layout.layer_views(self.theta, i)
            x, cache = layer.forward(x, params)
            caches.append(cache)
        return x, caches

    def forward(self, x) -> np.ndarray:
        """Class-posterior vector of length ``num_classes``."""
        out, _ = self._forward_cached(x)
        return out

    def _backward_from(self, caches, cotangent) -> np.ndarray:
        grad = np.zeros(self.layout.total)
        dy = np.asarray(cotangent, dtype=np.float64)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            params = self.layout.layer_views(self.theta, i)
            dy, dparams = layer.backward(dy, caches[i], params)
            for seg, dp in zip(self.layout._by_layer.get(i, []), dparams):
                grad[seg.offset : seg.offset + seg.size] = dp.reshape(-1)
        return grad

    def backward_scalar(self, x, cotangent) -> np.ndarray:
        """Gradient of cotangent . f(x; theta) with respect to theta."""
        cotangent = np.asarray(cotangent, dtype=np.float64)
        if cotangent.shape != (self.num_classes,):
            raise ShapeError(
                f"cotangent must have length {self.num_classes}, got {cotangent.shape}"
            )
        _, caches = self._forward_cached(x)
        return self._backward_from(caches, cotangent)

    def output_jacobian(self, x) -> np.ndarray:
        """d f(x; theta) / d theta as a (num_classes, param_count) matrix.

        Row c is one backward pass with the one-hot cotangent e_c, so rows
        agree bit-for-bit with ``backward_scalar``.
        """
        _, caches = self._forward_cached(x)
        jac = np.empty((self.num_classes, self.layout.total))
        for c in range(self.num_classes):
            e = np.zeros(self.num_classes)
            e[c] = 1.0
            jac[c] = self._backward_from(caches, e)
        return jac


def expand_final_classifier(net: Network, n_new: int, rng, velocity=None,
                            weight_scale: float = DEFAULT_WEIGHT_SCALE):
    """Widen the last fully-connected layer by ``n_new`` output rows.

    New rows get Gaussian weights and zero bias so the fresh classes start
    with near-uniform posterior mass. Returns ``(net, velocity)`` with any
    optimizer velocity re-laid-out (zeros for the new rows).
    """
    if n_new < 1:
        raise ValueError("n_new must be >= 1")
    fc_index = None
    for i, layer in enumerate(net.layers):
        if isinstance(layer, FullyConnected):
            fc_index = i
    if fc_index is None or fc_index != len(net.layers) - 2:
        raise ShapeError("expected a fully-connected layer directly before softmax")
    old_fc: FullyConnected = net.layers[fc_index]
    new_fc = FullyConnected(old_fc.in_features, old_fc.out_features + n_new)
    new_layers = list(net.layers)
    new_layers[fc_index] = new_fc

    per_layer = net.layout.unflatten(net.theta)
    w, b = per_layer[fc_index]
    w_new = rng.normal(0.0, weight_scale, size=(n_new, old_fc.in_features))
    per_layer[fc_index] = [np.vstack([w, w_new]), np.concatenate([b, np.zeros(n_new)])]
    wider = Network(new_layers, net.input_shape,
                    theta=ParamLayout(new_layers).flatten(per_layer))

    new_velocity = None
    if velocity is not None:
        vel_per_layer = net.layout.unflatten(velocity)
        vw, vb = vel_per_layer[fc_index]
        vel_per_layer[fc_index] = [
            np.vstack([vw, np.zeros((n_new, old_fc.in_features))]),
            np.concatenate([vb, np.zeros(n_new)]),
        ]
        new_velocity = wider.layout.flatten(vel_per_layer)
    return wider, new_velocity


def network_from_config(arch, input_shape, num_classes: int, rng,
                        weight_scale: float = DEFAULT_WEIGHT_SCALE) -> Network:
    """Build a network from a list of layer descriptors.

    ``arch`` holds dicts like ``{"kind": "fully_connected", "out_features": 32}``;
    the final classifier (fully-connected to ``num_classes`` plus softmax) is
    appended automatically.
    """
    layers = []
    shape = tuple(int(s) for s in input_shape)
    for entry in arch:
        entry = dict(entry)
        kind = entry.pop("kind")
        if kind not in LAYER_KINDS:
            raise ShapeError(f"unknown layer kind {kind!r}")
        if kind == "fully_connected" and "in_features" not in entry:
            entry["in_features"] = int(np.prod(shape))
        if kind == "convolution2d" and "in_channels" not in entry:
            entry["in_channels"] = int(shape[0])
        layer = LAYER_KINDS[kind](**entry)
        shape = layer.out_shape(shape)
        layers.append(layer)
    layers.append(FullyConnected(int(np.prod(shape)), num_classes))
    layers.append(Softmax())
    return Network(layers, input_shape, rng=rng, weight_scale=weight_scale)
