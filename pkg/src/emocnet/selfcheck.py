"""Built-in verification of the differentiation and scoring machinery
against independent oracles (finite differences and plain-loop math)."""

from __future__ import annotations

import numpy as np

from .data import Sample, UnlabeledPool
from .layers import FullyConnected, ReLU, Softmax
from .network import Network
from .selection import CandidateSet, SelectionConfig, emoc_score, map_label
from .training import LossKind, RegularizerConfig, objective, sample_gradient


def finite_difference_gradient(fn, theta: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar function of the parameter vector."""
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


def max_relative_error(approx: np.ndarray, reference: np.ndarray) -> float:
    scale = max(float(np.abs(reference).max()), 1e-8)
    return float(np.abs(approx - reference).max()) / scale


def random_small_network(rng: np.random.Generator) -> Network:
    hidden = int(rng.integers(3, 9))
    d = int(rng.integers(2, 6))
    c = int(rng.integers(2, 5))
    layers = [FullyConnected(d, hidden), ReLU(), FullyConnected(hidden, c), Softmax()]
    return Network(layers, (d,), rng=rng, weight_scale=0.5)


def check_gradients(num_nets: int = 20, tol: float = 1e-4, seed: int = 0) -> float:
    """Worst relative error of backprop gradients vs finite differences."""
    worst = 0.0
    for i in range(num_nets):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        net = random_small_network(rng)
        x = rng.normal(size=net.input_shape)
        y = int(rng.integers(net.num_classes))
        reg = RegularizerConfig(l2_coefficient=1e-3, l1_coefficient=0.0)
        grad = sample_gradient(net, x, y, LossKind.SOFTMAX_CROSS_ENTROPY, reg)
        fd = finite_difference_gradient(
            lambda: objective(net, [(x, y)], LossKind.SOFTMAX_CROSS_ENTROPY, reg),
            net.theta,
        )
        worst = max(worst, max_relative_error(grad, fd))
    if worst > tol:
        raise AssertionError(f"gradient error {worst:.3g} exceeds {tol:.3g}")
    return worst


def check_jacobians(num_nets: int = 10, tol: float = 1e-4, seed: int = 1) -> float:
    worst = 0.0
    for i in range(num_nets):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        net = random_small_network(rng)
        x = rng.normal(size=net.input_shape)
        jac = net.output_jacobian(x)
        col_sums = np.abs(jac.sum(axis=0)).max() if net.param_count else 0.0
        if col_sums > 1e-9:
            raise AssertionError(f"jacobian columns sum to {col_sums:.3g}, not 0")
        for c in range(net.num_classes):
            fd = finite_difference_gradient(lambda: float(net.forward(x)[c]),
                                            net.theta)
            worst = max(worst, max_relative_error(jac[c], fd))
    if worst > tol:
        raise AssertionError(f"jacobian error {worst:.3g} exceeds {tol:.3g}")
    return worst


def emoc_score_bruteforce(net: Network, cset: CandidateSet, eval_ids, pool,
                          loss, reg, cfg) -> float:
    """Plain-loop reference: materialize Jacobians and gradients, multiply
    and accumulate absolute values one scalar at a time."""
    total = 0.0
    jacobians = [net.output_jacobian(pool.features(i)) for i in eval_ids]
    for sample_id in cset.sample_ids:
        g = sample_gradient(net, pool.features(sample_id),
                            cset.hypothesized_label, loss, reg,
                            include_regularizer=cfg.include_regularizer)
        per_sample = 0.0
        for jac in jacobians:
            for c in range(net.num_classes):
                dot = 0.0
                for j in range(net.param_count):
                    dot += jac[c, j] * g[j]
                per_sample += abs(dot)
        total += per_sample / len(eval_ids)
    return cfg.gamma * total


def check_emoc_oracle(num_cases: int = 100, tol: float = 1e-12,
                      seed: int = 2) -> float:
    """Vectorized score vs brute-force loops on models with few parameters."""
    worst = 0.0
    loss = LossKind.SOFTMAX_CROSS_ENTROPY
    reg = RegularizerConfig(l2_coefficient=5e-4)
    for i in range(num_cases):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        net = Network([FullyConnected(2, 2), Softmax()], (2,), rng=rng,
                      weight_scale=0.5)  # P = 6
        pool = UnlabeledPool([
            Sample(id=k, features=rng.normal(size=2), oracle_label=0)
            for k in range(6)
        ])
        cfg = SelectionConfig(num_sets=1, set_size=2, eval_subset_size=3,
                              gamma=float(rng.uniform(0.5, 2.0)))
        cset = CandidateSet(sample_ids=[0, 1])
        cset.hypothesized_label = map_label(net, cset.sample_ids, pool)
        eval_ids = [3, 4, 5]
        fast = emoc_score(net, cset, eval_ids, pool, loss, reg, cfg)
        slow = emoc_score_bruteforce(net, cset, eval_ids, pool, loss, reg, cfg)
        rel = abs(fast - slow) / max(abs(slow), 1e-300)
        worst = max(worst, rel)
    if worst > tol:
        raise AssertionError(f"score mismatch {worst:.3g} exceeds {tol:.3g}")
    return worst


def run_self_checks(verbose: bool = False) -> bool:
    checks = [
        ("gradient vs finite differences", check_gradients),
        ("jacobian vs finite differences", check_jacobians),
        ("score vs brute-force oracle", check_emoc_oracle),
    ]
    ok = True
    for name, fn in checks:
        try:
            worst = fn()
            if verbose:
                print(f"PASS {name} (worst relative error {worst:.3g})")
        except AssertionError as exc:
            ok = False
            if verbose:
                print(f"FAIL {name}: {exc}")
    return ok
