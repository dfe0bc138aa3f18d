from __future__ import annotations

import numpy as np
import pytest

from emocnet.layers import Convolution2D, FullyConnected, MaxPool2D, ReLU, Softmax
from emocnet.network import Network

FD_STEP = 1e-5


def finite_difference(fn, theta, step=FD_STEP):
    """Independent central-difference oracle over a flat parameter vector."""
    grad = np.zeros_like(theta)
    for j in range(theta.size):
        orig = theta[j]
        theta[j] = orig + step
        f_plus = fn()
        theta[j] = orig - step
        f_minus = fn()
        theta[j] = orig
        grad[j] = (f_plus - f_minus) / (2.0 * step)
    return grad


def max_rel_error(approx, reference):
    scale = max(float(np.abs(reference).max()), 1e-8)
    return float(np.abs(np.asarray(approx) - np.asarray(reference)).max()) / scale


def random_mlp(rng, max_params=500):
    d = int(rng.integers(2, 7))
    hidden = int(rng.integers(3, 12))
    c = int(rng.integers(2, 6))
    while d * hidden + hidden + hidden * c + c > max_params:
        hidden -= 1
    layers = [FullyConnected(d, hidden), ReLU(), FullyConnected(hidden, c), Softmax()]
    return Network(layers, (d,), rng=rng, weight_scale=0.5)


def random_convnet(rng):
    c_out = int(rng.integers(2, 4))
    classes = int(rng.integers(2, 5))
    layers = [
        Convolution2D(1, c_out, 3),
        ReLU(),
        MaxPool2D(2),
        FullyConnected(c_out * 2 * 2, classes),
        Softmax(),
    ]
    return Network(layers, (1, 6, 6), rng=rng, weight_scale=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
