"""Canned configurations.

``paper_scale`` mirrors the full-size image protocol (10 known + 10 novel
classes, 100 samples each for the initial set and pool, batches of 25 from
1000 candidate sets). ``synthetic_default`` is the desk-scale analog used
by the acceptance suite: 20 Gaussian-blob classes in 16 dimensions, 60
samples per class, batches of 5 from 50 candidate sets, sized so a full
strategy comparison runs in minutes on one core.
"""

from __future__ import annotations

from .data import SyntheticSpec
from .protocol import ProtocolConfig
from .selection import SelectionConfig, Strategy
from .training import TrainingConfig

SYNTHETIC_TEST_PER_CLASS = 20


def paper_scale(strategy: Strategy = Strategy.EMOC, seed: int = 0):
    return {
        "protocol": ProtocolConfig(),
        "training": TrainingConfig(rng_seed=seed),
        "selection": SelectionConfig(strategy=strategy, rng_seed=seed),
        "architecture": None,
    }


def synthetic_default(strategy: Strategy = Strategy.EMOC, seed: int = 0):
    # the 80-step budget leaves 100 of 500 pool samples unconsumed, so the
    # curves still differ at the right edge instead of collapsing to a tie
    return {
        "synthetic": SyntheticSpec(
            num_classes=20, feature_dim=16, class_mean_scale=3.0,
            noise_sigma=0.9, samples_per_class=60, rng_seed=20,
        ),
        "protocol": ProtocolConfig(
            num_known_classes=10, num_novel_classes=10,
            initial_per_class=20, pool_per_class=25, steps_budget=80,
        ),
        "training": TrainingConfig(
            learning_rate=0.02, momentum=0.9, mini_batch_size=16,
            iterations_per_update=60, old_data_weight=0.9, rng_seed=seed,
            initial_iterations=500,
        ),
        "selection": SelectionConfig(
            num_sets=50, set_size=5, eval_subset_size=30,
            strategy=strategy, rng_seed=seed,
        ),
        "architecture": [{"kind": "fully_connected", "out_features": 32},
                         {"kind": "relu"}],
    }
