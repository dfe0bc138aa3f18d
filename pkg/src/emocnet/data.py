"""Sample stores and dataset ingestion.

CIFAR-100 binary records are 3074 bytes: one coarse-label byte, one
fine-label byte, then 3072 pixel bytes stored as three 1024-byte channel
planes of row-major 32x32 values. The fine label is the class; pixels are
scaled to [0, 1].
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

CIFAR_RECORD_BYTES = 3074
CIFAR_NUM_CLASSES = 100
CIFAR_IMAGE_SHAPE = (3, 32, 32)


class DataFormatError(ValueError):
    """A dataset file does not match its declared format."""


class TruncatedRecordError(DataFormatError):
    """File size is not a whole number of records."""


class LabelRangeError(DataFormatError):
    """A stored label is outside the class range."""


@dataclass
class Sample:
    id: int
    features: np.ndarray
    oracle_label: int | None = None
    assigned_label: int | None = None

    def assign(self, label: int) -> None:
        if self.assigned_label is not None:
            raise ValueError(f"sample {self.id} already labeled")
        self.assigned_label = int(label)


@dataclass
class Dataset:
    train: list[Sample]
    test: list[Sample] = field(default_factory=list)


class UnlabeledPool:
    """Unlabeled samples; oracle labels stay hidden except to simulation
    helpers that group candidates by true class."""

    def __init__(self, samples):
        self._samples: dict[int, Sample] = {}
        for s in samples:
            if s.id in self._samples:
                raise ValueError(f"duplicate sample id {s.id}")
            self._samples[s.id] = s

    def __len__(self) -> int:
        return len(self._samples)

    def __contains__(self, sample_id: int) -> bool:
        return sample_id in self._samples

    def ids(self) -> list[int]:
        return sorted(self._samples)

    def get(self, sample_id: int) -> Sample:
        return self._samples[sample_id]

    def features(self, sample_id: int) -> np.ndarray:
        return self._samples[sample_id].features

    def oracle_classes(self) -> list[int]:
        """Distinct hidden classes with at least one remaining sample."""
        return sorted({s.oracle_label for s in self._samples.values()})

    def ids_by_oracle_class(self, cls: int) -> list[int]:
        return sorted(
            i for i, s in self._samples.items() if s.oracle_label == cls
        )

    def take(self, sample_ids) -> list[Sample]:
        """Remove and return the given samples."""
        out = []
        for i in sample_ids:
            if i not in self._samples:
                raise KeyError(f"sample {i} not in pool")
            out.append(self._samples.pop(i))
        return out


class LabeledPool:
    def __init__(self, samples=()):
        self._samples: list[Sample] = []
        self._ids: set[int] = set()
        for s in samples:
            self.add(s)

    def __len__(self) -> int:
        return len(self._samples)

    def __iter__(self):
        return iter(self._samples)

    def __contains__(self, sample_id: int) -> bool:
        return sample_id in self._ids

    def add(self, sample: Sample, label: int | None = None) -> None:
        if label is not None:
            sample.assign(label)
        if sample.assigned_label is None:
            raise ValueError(f"sample {sample.id} has no assigned label")
        if sample.id in self._ids:
            raise ValueError(f"sample {sample.id} already labeled")
        self._samples.append(sample)
        self._ids.add(sample.id)

    def classes(self) -> list[int]:
        return sorted({s.assigned_label for s in self._samples})

    def as_pairs(self) -> list[tuple[np.ndarray, int]]:
        return [(s.features, s.assigned_label) for s in self._samples]


def _cifar_file(path, split: str):
    if os.path.isdir(path):
        return os.path.join(path, f"{split}.bin")
    return path


def load_cifar100(path, split: str = "train", start_id: int = 0) -> list[Sample]:
    """Read one CIFAR-100 binary file into samples with sequential ids."""
    filename = _cifar_file(path, split)
    if not os.path.exists(filename):
        raise FileNotFoundError(f"CIFAR-100 file not found: {filename}")
    raw = np.fromfile(filename, dtype=np.uint8)
    if raw.size == 0 or raw.size % CIFAR_RECORD_BYTES != 0:
        raise TruncatedRecordError(
            f"{filename}: {raw.size} bytes is not a multiple of "
            f"{CIFAR_RECORD_BYTES}-byte records"
        )
    records = raw.reshape(-1, CIFAR_RECORD_BYTES)
    fine = records[:, 1]
    if fine.max(initial=0) >= CIFAR_NUM_CLASSES:
        bad = int(fine.max())
        raise LabelRangeError(f"{filename}: fine label {bad} out of range")
    pixels = records[:, 2:].astype(np.float64) / 255.0
    samples = []
    for i in range(records.shape[0]):
        samples.append(
            Sample(
                id=start_id + i,
                features=pixels[i].reshape(CIFAR_IMAGE_SHAPE),
                oracle_label=int(fine[i]),
            )
        )
    return samples


def write_cifar100(samples, path) -> None:
    """Inverse of ``load_cifar100`` for fixtures; features must sit on the
    1/255 grid."""
    records = np.empty((len(samples), CIFAR_RECORD_BYTES), dtype=np.uint8)
    for i, s in enumerate(samples):
        records[i, 0] = 0
        records[i, 1] = s.oracle_label
        records[i, 2:] = np.rint(s.features.reshape(-1) * 255.0).astype(np.uint8)
    records.tofile(path)


def load_cifar100_dataset(directory) -> Dataset:
    train = load_cifar100(directory, "train", start_id=0)
    test = load_cifar100(directory, "test", start_id=len(train))
    return Dataset(train=train, test=test)


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 20
    feature_dim: int = 16
    class_mean_scale: float = 3.0
    noise_sigma: float = 0.5
    samples_per_class: int = 60
    rng_seed: int = 0

    def __post_init__(self):
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be positive")
        if self.feature_dim < 2:
            raise ValueError("feature_dim must be >= 2")
        if self.num_classes < 1 or self.samples_per_class < 1:
            raise ValueError("num_classes and samples_per_class must be >= 1")


def _synthetic_means(spec: SyntheticSpec) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([spec.rng_seed, 0]))
    means = rng.normal(size=(spec.num_classes, spec.feature_dim))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    return means * spec.class_mean_scale


def _draw_blobs(spec: SyntheticSpec, means, per_class: int, stream: int,
                start_id: int) -> list[Sample]:
    rng = np.random.default_rng(np.random.SeedSequence([spec.rng_seed, stream]))
    samples = []
    sid = start_id
    for c in range(spec.num_classes):
        noise = rng.normal(0.0, spec.noise_sigma,
                           size=(per_class, spec.feature_dim))
        for row in means[c] + noise:
            samples.append(Sample(id=sid, features=row, oracle_label=c))
            sid += 1
    return samples


def generate_synthetic(spec: SyntheticSpec, start_id: int = 0) -> list[Sample]:
    """Gaussian blobs around seeded random unit-direction class means."""
    return _draw_blobs(spec, _synthetic_means(spec), spec.samples_per_class,
                       stream=1, start_id=start_id)


def synthetic_dataset(spec: SyntheticSpec, test_per_class: int) -> Dataset:
    """Train/test split drawn around the same class means."""
    means = _synthetic_means(spec)
    train = _draw_blobs(spec, means, spec.samples_per_class, stream=1, start_id=0)
    test = _draw_blobs(spec, means, test_per_class, stream=2,
                       start_id=len(train))
    return Dataset(train=train, test=test)
