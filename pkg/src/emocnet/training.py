"""Learning objective, per-sample gradients, and the continual-update loop.

The objective is mean loss plus an elastic-net penalty
``omega(theta) = l2 * ||theta||_2^2 + l1 * ||theta||_1`` whose gradient
contributes ``2 * l2 * theta + l1 * sign(theta)``. Weight decay is the l2
term inside the gradient, not a separate decoupled decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .network import Network

_POSTERIOR_FLOOR = 1e-300  # keeps log/ratio finite if a class underflows


class LossKind(Enum):
    SOFTMAX_CROSS_ENTROPY = "softmax_cross_entropy"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class RegularizerConfig:
    l2_coefficient: float = 0.0005
    l1_coefficient: float = 0.0

    def __post_init__(self):
        for name in ("l2_coefficient", "l1_coefficient"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative")


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-4
    momentum: float = 0.9
    mini_batch_size: int = 64
    iterations_per_update: int = 1000
    old_data_weight: float = 0.9
    rng_seed: int = 0
    initial_iterations: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.old_data_weight <= 1.0:
            raise ValueError("old_data_weight must lie in [0, 1]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.mini_batch_size < 1:
            raise ValueError("mini_batch_size must be >= 1")


@dataclass
class OptimizerState:
    velocity: np.ndarray

    @classmethod
    def zeros(cls, param_count: int) -> "OptimizerState":
        return cls(velocity=np.zeros(param_count))


def _check_label(y: int, num_classes: int) -> int:
    y = int(y)
    if not 0 <= y < num_classes:
        raise ValueError(f"label {y} outside [0, {num_classes})")
    return y


def loss_value(posterior: np.ndarray, y: int, kind: LossKind) -> float:
    y = _check_label(y, len(posterior))
    if kind is LossKind.SOFTMAX_CROSS_ENTROPY:
        return -math.log(max(posterior[y], _POSTERIOR_FLOOR))
    target = np.zeros(len(posterior))
    target[y] = 1.0
    return 0.5 * float(np.sum((posterior - target) ** 2))


def loss_cotangent(posterior: np.ndarray, y: int, kind: LossKind) -> np.ndarray:
    """d loss / d posterior, fed into the network's backward pass."""
    y = _check_label(y, len(posterior))
    if kind is LossKind.SOFTMAX_CROSS_ENTROPY:
        ct = np.zeros(len(posterior))
        ct[y] = -1.0 / max(posterior[y], _POSTERIOR_FLOOR)
        return ct
    target = np.zeros(len(posterior))
    target[y] = 1.0
    return posterior - target


def regularizer_value(theta: np.ndarray, reg: RegularizerConfig) -> float:
    return reg.l2_coefficient * float(theta @ theta) + reg.l1_coefficient * float(
        np.abs(theta).sum()
    )


def regularizer_gradient(theta: np.ndarray, reg: RegularizerConfig) -> np.ndarray:
    return 2.0 * reg.l2_coefficient * theta + reg.l1_coefficient * np.sign(theta)


def objective(net: Network, data, loss: LossKind, reg: RegularizerConfig) -> float:
    """Mean loss over ``data`` (pairs of features and label) plus omega(theta)."""
    data = list(data)
    if not data:
        raise ValueError("objective needs at least one labeled sample")
    total = 0.0
    for x, y in data:
        total += loss_value(net.forward(x), y, loss)
    return total / len(data) + regularizer_value(net.theta, reg)


def sample_gradient(net: Network, x, y: int, loss: LossKind,
                    reg: RegularizerConfig,
                    include_regularizer: bool = True) -> np.ndarray:
    """Gradient of the single-sample objective at (x, y)."""
    posterior, caches = net._forward_cached(x)
    _check_label(y, net.num_classes)
    grad = net._backward_from(caches, loss_cotangent(posterior, y, loss))
    if include_regularizer:
        grad += regularizer_gradient(net.theta, reg)
    return grad


def mean_gradient(net: Network, batch, loss: LossKind,
                  reg: RegularizerConfig) -> np.ndarray:
    """Mean of per-sample gradients, in fixed order, for one mini-batch."""
    grads = np.stack([sample_gradient(net, x, y, loss, reg) for x, y in batch])
    return grads.mean(axis=0)


def sgd_step(net: Network, state: OptimizerState, gradient: np.ndarray,
             cfg: TrainingConfig) -> None:
    """One momentum step: v <- m*v - lr*g; theta <- theta + v. In place."""
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.shape != net.theta.shape:
        raise ValueError(
            f"gradient length {gradient.shape} does not match "
            f"{net.theta.shape} parameters"
        )
    state.velocity *= cfg.momentum
    state.velocity -= cfg.learning_rate * gradient
    net.theta += state.velocity


def draw_mixed_batch(rng: np.random.Generator, n_old: int, n_new: int,
                     size: int, old_weight: float):
    """Per-slot mixture draw: each slot comes from the old pool with
    probability ``old_weight``, else from the new batch; uniform within the
    chosen pool, with replacement.

    Returns ``(from_old, indices)`` where ``from_old`` is a boolean mask and
    ``indices`` index into the chosen side's pool.
    """
    if old_weight > 0.0 and n_old == 0:
        raise ValueError("old pool is empty but old_weight > 0")
    if old_weight < 1.0 and n_new == 0:
        raise ValueError("new batch is empty but old_weight < 1")
    from_old = rng.random(size) < old_weight
    indices = np.empty(size, dtype=np.int64)
    n_from_old = int(from_old.sum())
    if n_from_old:
        indices[from_old] = rng.integers(0, n_old, size=n_from_old)
    if size - n_from_old:
        indices[~from_old] = rng.integers(0, n_new, size=size - n_from_old)
    return from_old, indices


def continual_update(net: Network, state: OptimizerState, old_data, new_data,
                     cfg: TrainingConfig, loss: LossKind,
                     reg: RegularizerConfig, rng=None) -> None:
    """Run ``iterations_per_update`` mini-batch steps mixing old and new data.

    ``old_data``/``new_data`` are sequences of (features, label) pairs. Only
    this function (and ``sgd_step``) mutates the network's parameters.
    """
    old_data = list(old_data)
    new_data = list(new_data)
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    for _ in range(cfg.iterations_per_update):
        from_old, idx = draw_mixed_batch(
            rng, len(old_data), len(new_data), cfg.mini_batch_size,
            cfg.old_data_weight,
        )
        batch = [
            old_data[i] if is_old else new_data[i]
            for is_old, i in zip(from_old, idx)
        ]
        sgd_step(net, state, mean_gradient(net, batch, loss, reg), cfg)
