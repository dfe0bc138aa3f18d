"""Candidate-set generation and batch query scoring.

The change-based score for a candidate set sums, over its samples x', the
empirical mean over reference points x of the L1 norm of the output
Jacobian at x applied to the single-sample training gradient at
(x', hypothesized label). Uncertainty baselines (least-confidence, top-two
margin, most-confident) and random selection share the same
argmax-over-sets selection rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .data import UnlabeledPool
from .network import Network
from .training import LossKind, RegularizerConfig, sample_gradient


class Strategy(str, Enum):
    EMOC = "emoc"
    RANDOM = "random"
    MIN = "min"
    ONE_VS_TWO = "1-vs-2"
    MAX = "max"


@dataclass(frozen=True)
class SelectionConfig:
    num_sets: int = 1000
    set_size: int = 25
    eval_subset_size: int = 100
    gamma: float = 1.0
    strategy: Strategy = Strategy.EMOC
    rng_seed: int = 0
    # literal reading of the min criterion: prefer lowest average per-sample
    # minimum posterior instead of least confidence
    min_literal_minimum: bool = False
    include_regularizer: bool = True

    def __post_init__(self):
        if self.num_sets < 1 or self.set_size < 1 or self.eval_subset_size < 1:
            raise ValueError("num_sets, set_size and eval_subset_size must be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass
class CandidateSet:
    sample_ids: list[int]
    hypothesized_label: int | None = None
    score: float = math.nan


@dataclass
class ScoredRound:
    candidate_sets: list[CandidateSet]
    selected_index: int
    eval_ids: list[int] = field(default_factory=list)

    @property
    def selected(self) -> CandidateSet:
        return self.candidate_sets[self.selected_index]


def generate_candidate_sets(pool: UnlabeledPool, cfg: SelectionConfig,
                            rng: np.random.Generator) -> list[CandidateSet]:
    """Draw ``num_sets`` single-class candidate sets from the pool.

    Each set picks a class uniformly among classes with remaining samples
    (hidden oracle labels; simulation mode), then up to ``set_size`` of that
    class's samples uniformly without replacement.
    """
    if len(pool) == 0:
        raise ValueError("unlabeled pool is empty")
    classes = pool.oracle_classes()
    by_class = {c: np.array(pool.ids_by_oracle_class(c)) for c in classes}
    sets = []
    for _ in range(cfg.num_sets):
        cls = classes[int(rng.integers(len(classes)))]
        ids = by_class[cls]
        chosen = rng.choice(ids, size=min(cfg.set_size, len(ids)), replace=False)
        sets.append(CandidateSet(sample_ids=[int(i) for i in chosen]))
    return sets


def map_label(net: Network, sample_ids, pool: UnlabeledPool,
              posterior_cache: dict | None = None) -> int:
    """Most likely class of the set's mean posterior; ties go to the lowest
    class index."""
    sample_ids = list(sample_ids)
    if not sample_ids:
        raise ValueError("candidate set is empty")
    mean = np.zeros(net.num_classes)
    for i in sample_ids:
        mean += _posterior(net, pool, i, posterior_cache)
    mean /= len(sample_ids)
    return int(np.argmax(mean))


def l1_distance(z, z_prime) -> float:
    z = np.asarray(z, dtype=np.float64)
    z_prime = np.asarray(z_prime, dtype=np.float64)
    if z.shape != z_prime.shape:
        raise ValueError(f"length mismatch: {z.shape} vs {z_prime.shape}")
    return float(np.abs(z - z_prime).sum())


def _posterior(net, pool, sample_id, cache):
    if cache is None:
        return net.forward(pool.features(sample_id))
    if sample_id not in cache:
        cache[sample_id] = net.forward(pool.features(sample_id))
    return cache[sample_id]


def _stacked_jacobian(net: Network, pool: UnlabeledPool, eval_ids) -> np.ndarray:
    """Output Jacobians of the evaluation subset, stacked to (R*C, P)."""
    rows = [net.output_jacobian(pool.features(i)) for i in eval_ids]
    return np.concatenate(rows, axis=0)


def _emoc_score_given_jacobian(net, pool, cset: CandidateSet, jac_stack,
                               n_eval: int, loss, reg, cfg,
                               gradient_cache: dict | None = None) -> float:
    if cset.hypothesized_label is None:
        raise ValueError("candidate set has no hypothesized label")
    total = 0.0
    for i in cset.sample_ids:
        key = (i, cset.hypothesized_label)
        if gradient_cache is not None and key in gradient_cache:
            g = gradient_cache[key]
        else:
            g = sample_gradient(net, pool.features(i), cset.hypothesized_label,
                                loss, reg,
                                include_regularizer=cfg.include_regularizer)
            if gradient_cache is not None:
                gradient_cache[key] = g
        total += float(np.abs(jac_stack @ g).sum()) / n_eval
    return cfg.gamma * total


def emoc_score(net: Network, cset: CandidateSet, eval_ids, pool: UnlabeledPool,
               loss: LossKind, reg: RegularizerConfig,
               cfg: SelectionConfig) -> float:
    """Approximated expected-output-change score for one candidate set.

    Read-only on the network; ``hypothesized_label`` must already be set
    (see ``map_label``).
    """
    eval_ids = list(eval_ids)
    if not cset.sample_ids or not eval_ids:
        raise ValueError("candidate set and evaluation subset must be non-empty")
    jac = _stacked_jacobian(net, pool, eval_ids)
    return _emoc_score_given_jacobian(net, pool, cset, jac, len(eval_ids),
                                      loss, reg, cfg)


def baseline_score(net: Network, cset: CandidateSet, pool: UnlabeledPool,
                   strategy: Strategy, rng: np.random.Generator | None = None,
                   posterior_cache: dict | None = None,
                   min_literal_minimum: bool = False) -> float:
    """Score one set under a non-EMOC strategy; higher is preferred for all."""
    if not cset.sample_ids:
        raise ValueError("candidate set is empty")
    if strategy == Strategy.RANDOM:
        if rng is None:
            raise ValueError("random strategy needs a seeded generator")
        return float(rng.random())
    posteriors = np.stack(
        [_posterior(net, pool, i, posterior_cache) for i in cset.sample_ids]
    )
    if strategy == Strategy.MIN:
        if min_literal_minimum:
            return -float(posteriors.min(axis=1).mean())
        return float((1.0 - posteriors.max(axis=1)).mean())
    if strategy == Strategy.ONE_VS_TWO:
        top2 = np.sort(posteriors, axis=1)[:, -2:]
        return -float((top2[:, 1] - top2[:, 0]).mean())
    if strategy == Strategy.MAX:
        return float(posteriors.max(axis=1).mean())
    raise ValueError(f"unknown strategy {strategy!r}")


def select_batch(net: Network, pool: UnlabeledPool, cfg: SelectionConfig,
                 loss: LossKind = LossKind.SOFTMAX_CROSS_ENTROPY,
                 reg: RegularizerConfig = RegularizerConfig(),
                 rng: np.random.Generator | None = None,
                 eval_ids=None) -> ScoredRound:
    """Score all candidate sets with the configured strategy and return the
    round with the argmax set (ties to the lowest set index).

    The whole round is a pure function of the model snapshot, the pool
    snapshot, and the seed. The evaluation subset is drawn once and shared
    by every set, and their Jacobians are computed once.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    sets = generate_candidate_sets(pool, cfg, rng)
    posterior_cache: dict = {}
    if cfg.strategy == Strategy.EMOC:
        if eval_ids is None:
            ids = np.array(pool.ids())
            take = min(cfg.eval_subset_size, len(ids))
            eval_ids = [int(i) for i in rng.choice(ids, size=take, replace=False)]
        else:
            eval_ids = [int(i) for i in eval_ids]
        jac = _stacked_jacobian(net, pool, eval_ids)
        gradient_cache: dict = {}
        for cset in sets:
            cset.hypothesized_label = map_label(net, cset.sample_ids, pool,
                                                posterior_cache)
            cset.score = _emoc_score_given_jacobian(
                net, pool, cset, jac, len(eval_ids), loss, reg, cfg,
                gradient_cache,
            )
    else:
        eval_ids = []
        for cset in sets:
            cset.score = baseline_score(
                net, cset, pool, cfg.strategy, rng, posterior_cache,
                min_literal_minimum=cfg.min_literal_minimum,
            )
    scores = np.array([s.score for s in sets])
    return ScoredRound(candidate_sets=sets, selected_index=int(np.argmax(scores)),
                       eval_ids=list(eval_ids))
