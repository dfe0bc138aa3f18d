"""Exploration-with-discovery experiment protocol, metrics, and export.

A run starts from an initial labeled set of known classes, repeatedly
selects a batch from a pool that also hides novel classes, reveals oracle
labels, fine-tunes on a mix of old and new data, and records test accuracy
and the number of discovered classes per step. All randomness derives from
the run seed, so strategies compared under the same seed share the
partition and the initial model bit for bit.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset, LabeledPool, Sample, UnlabeledPool
from .network import Network, network_from_config
from .selection import ScoredRound, SelectionConfig, Strategy, select_batch
from .training import (
    LossKind,
    OptimizerState,
    RegularizerConfig,
    TrainingConfig,
    continual_update,
)

# fixed stream tags for deriving per-purpose generators from one run seed
_STREAM_PROTOCOL = 1
_STREAM_NET_INIT = 2
_STREAM_INITIAL_TRAIN = 3
_STREAM_SELECT = 4
_STREAM_UPDATE = 5


def derived_rng(seed: int, stream: int, step: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream, step]))


@dataclass(frozen=True)
class ProtocolConfig:
    num_known_classes: int = 10
    num_novel_classes: int = 10
    initial_per_class: int = 100
    pool_per_class: int = 100
    num_initializations: int = 9
    steps_budget: int | None = None
    metrics_every: int = 1

    def __post_init__(self):
        for name in ("num_known_classes", "num_novel_classes",
                     "initial_per_class", "pool_per_class",
                     "num_initializations", "metrics_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class ExperimentRecord:
    strategy: str
    seed: int
    labeled_count: int
    accuracy_pct: float
    discovered_classes: int


@dataclass
class ProtocolParts:
    initial: LabeledPool
    pool: UnlabeledPool
    test: list[Sample]
    class_map: dict[int, int]  # original class -> protocol-local label
    num_classes: int
    input_shape: tuple[int, ...]


def _center_image_features(parts: ProtocolParts) -> None:
    # per-channel mean of the initial labeled set, frozen at protocol start;
    # applies to image-shaped features only
    feats = [s.features for s in parts.initial]
    if not feats or feats[0].ndim != 3:
        return
    mean = np.stack(feats).mean(axis=(0, 2, 3))[:, None, None]
    for s in list(parts.initial) + [parts.pool.get(i) for i in parts.pool.ids()] + parts.test:
        s.features = s.features - mean


def build_protocol(data: Dataset, cfg: ProtocolConfig, seed: int) -> ProtocolParts:
    """Partition a dataset into initial labeled set, unlabeled pool, and test
    set, with known classes drawn first and novel classes from the rest."""
    rng = derived_rng(seed, _STREAM_PROTOCOL)
    by_class: dict[int, list[Sample]] = {}
    for s in data.train:
        by_class.setdefault(s.oracle_label, []).append(s)
    classes = sorted(by_class)
    need = cfg.num_known_classes + cfg.num_novel_classes
    if len(classes) < need:
        raise ValueError(
            f"dataset has {len(classes)} classes, protocol needs {need}"
        )
    drawn = rng.permutation(np.array(classes))
    known = [int(c) for c in drawn[: cfg.num_known_classes]]
    novel = [int(c) for c in drawn[cfg.num_known_classes : need]]
    class_map = {c: i for i, c in enumerate(known + novel)}

    initial = LabeledPool()
    pool_samples: list[Sample] = []
    for c in known + novel:
        members = by_class[c]
        want = cfg.pool_per_class + (cfg.initial_per_class if c in known else 0)
        if len(members) < want:
            raise ValueError(
                f"class {c} has {len(members)} train samples, needs {want}"
            )
        order = rng.permutation(len(members))
        picked = [members[int(i)] for i in order[:want]]
        local = class_map[c]
        if c in known:
            for s in picked[: cfg.initial_per_class]:
                s = dataclasses.replace(s, oracle_label=local, assigned_label=None)
                initial.add(s, label=local)
            picked = picked[cfg.initial_per_class :]
        for s in picked:
            pool_samples.append(dataclasses.replace(s, oracle_label=local,
                                                    assigned_label=None))

    chosen = set(known + novel)
    test = [
        dataclasses.replace(s, oracle_label=class_map[s.oracle_label],
                            assigned_label=None)
        for s in data.test
        if s.oracle_label in chosen
    ]
    sample = next(iter(initial))
    parts = ProtocolParts(
        initial=initial,
        pool=UnlabeledPool(pool_samples),
        test=test,
        class_map=class_map,
        num_classes=need,
        input_shape=tuple(sample.features.shape),
    )
    _center_image_features(parts)
    return parts


def evaluate(net: Network, test_samples, labeled: LabeledPool):
    """(accuracy percent over the test set, distinct labeled classes)."""
    test_samples = list(test_samples)
    if not test_samples:
        raise ValueError("test set is empty")
    correct = sum(
        1 for s in test_samples
        if int(np.argmax(net.forward(s.features))) == s.oracle_label
    )
    return 100.0 * correct / len(test_samples), len(labeled.classes())


DEFAULT_ARCHITECTURE = [{"kind": "fully_connected", "out_features": 32},
                        {"kind": "relu"}]


def _initial_model(parts: ProtocolParts, training_cfg: TrainingConfig,
                   arch, loss, reg, seed: int):
    net = network_from_config(arch or DEFAULT_ARCHITECTURE, parts.input_shape,
                              parts.num_classes,
                              rng=derived_rng(seed, _STREAM_NET_INIT))
    state = OptimizerState.zeros(net.param_count)
    warmup = dataclasses.replace(
        training_cfg,
        old_data_weight=1.0,
        iterations_per_update=training_cfg.initial_iterations,
    )
    continual_update(net, state, parts.initial.as_pairs(), [], warmup, loss,
                     reg, rng=derived_rng(seed, _STREAM_INITIAL_TRAIN))
    return net, state


def run_experiment(data: Dataset, protocol_cfg: ProtocolConfig,
                   training_cfg: TrainingConfig, selection_cfg: SelectionConfig,
                   strategy: Strategy, seeds, arch=None,
                   loss: LossKind = LossKind.SOFTMAX_CROSS_ENTROPY,
                   reg: RegularizerConfig = RegularizerConfig(),
                   on_round=None) -> list[ExperimentRecord]:
    """Run the full protocol for one strategy over the given seeds.

    Per seed: build the partition, train the initial model, then loop
    select -> label -> continual update -> evaluate until the pool is
    exhausted or the step budget is hit. A failed seed aborts only that
    seed and is re-raised at the end.
    """
    selection_cfg = dataclasses.replace(selection_cfg, strategy=strategy)
    records: list[ExperimentRecord] = []
    failures: list[tuple[int, Exception]] = []
    for seed in seeds:
        try:
            records.extend(
                _run_single_seed(data, protocol_cfg, training_cfg,
                                 selection_cfg, strategy, int(seed), arch,
                                 loss, reg, on_round)
            )
        except Exception as exc:  # keep other seeds alive, report at the end
            failures.append((int(seed), exc))
    if failures:
        seeds_failed = ", ".join(str(s) for s, _ in failures)
        raise RuntimeError(
            f"{len(failures)} seed(s) failed ({seeds_failed})"
        ) from failures[0][1]
    return records


def _run_single_seed(data, protocol_cfg, training_cfg, selection_cfg,
                     strategy, seed, arch, loss, reg, on_round):
    parts = build_protocol(data, protocol_cfg, seed)
    net, state = _initial_model(parts, training_cfg, arch, loss, reg, seed)
    labeled = parts.initial
    records = []

    def emit():
        acc, discovered = evaluate(net, parts.test, labeled)
        records.append(ExperimentRecord(
            strategy=strategy.value, seed=seed, labeled_count=len(labeled),
            accuracy_pct=acc, discovered_classes=discovered,
        ))

    emit()
    step = 0
    budget = protocol_cfg.steps_budget
    while len(parts.pool) > 0 and (budget is None or step < budget):
        step += 1
        round_result: ScoredRound = select_batch(
            net, parts.pool, selection_cfg, loss, reg,
            rng=derived_rng(seed, _STREAM_SELECT, step),
        )
        chosen = parts.pool.take(round_result.selected.sample_ids)
        old_pairs = labeled.as_pairs()
        for s in chosen:
            labeled.add(s, label=s.oracle_label)
        continual_update(net, state, old_pairs,
                         [(s.features, s.assigned_label) for s in chosen],
                         training_cfg, loss, reg,
                         rng=derived_rng(seed, _STREAM_UPDATE, step))
        if step % protocol_cfg.metrics_every == 0 or len(parts.pool) == 0:
            emit()
        if on_round is not None:
            on_round(seed, step, round_result, net, labeled, parts)
    return records


def summarize(records) -> dict:
    """Per-strategy mean accuracy/discovery curves across seeds, aligned on
    the labeled-count grid."""
    by_strategy: dict[str, dict[int, list[ExperimentRecord]]] = {}
    for r in records:
        by_strategy.setdefault(r.strategy, {}).setdefault(r.labeled_count, []).append(r)
    out = {}
    for strategy, by_count in sorted(by_strategy.items()):
        counts = sorted(by_count)
        out[strategy] = {
            "labeled_counts": counts,
            "mean_accuracy_pct": [
                float(np.mean([r.accuracy_pct for r in by_count[c]])) for c in counts
            ],
            "mean_discovered_classes": [
                float(np.mean([r.discovered_classes for r in by_count[c]]))
                for c in counts
            ],
            "num_seeds": len({r.seed for rs in by_count.values() for r in rs}),
        }
    return out


CSV_HEADER = ["strategy", "seed", "labeled_count", "accuracy_pct",
              "discovered_classes"]


def format_float(v: float) -> str:
    """Locale-independent decimal serialization: exact round trip, padded to
    at least six significant digits."""
    s = repr(float(v))
    if "e" in s or "E" in s or "n" in s:  # exponent form or nan/inf
        return s
    stripped = s.replace("-", "").replace(".", "")
    digits = len(stripped.lstrip("0"))
    if digits == 0:
        digits = len(stripped)  # zero: displayed zeros carry the precision
    if digits >= 6:
        return s
    if "." not in s:
        s += "."
    return s + "0" * (6 - digits)


def export_results(records, path) -> None:
    """Write records as CSV (UTF-8, LF) plus a sibling JSON summary."""
    records = list(records)
    if not records:
        raise ValueError("no records to export")
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([
                r.strategy, r.seed, r.labeled_count,
                format_float(r.accuracy_pct), r.discovered_classes,
            ])
    summary_path = _summary_path(path)
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(summarize(records), f, indent=2, sort_keys=True)
        f.write("\n")


def _summary_path(path) -> str:
    path = str(path)
    return (path[: -len(".csv")] if path.endswith(".csv") else path) + ".summary.json"


def import_results(path) -> list[ExperimentRecord]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        return [
            ExperimentRecord(
                strategy=row[0], seed=int(row[1]), labeled_count=int(row[2]),
                accuracy_pct=float(row[3]), discovered_classes=int(row[4]),
            )
            for row in reader
        ]
