"""Dataset ingestion, client partitioning, and synthetic image fixtures.

Supported on-disk formats:

* IDX (big-endian, magic 0x00000803 for images and 0x00000801 for labels),
  the format used by the MNIST and fashionMNIST distributions;
* CIFAR-10 binary batches (records of 1 label byte + 3072 pixel bytes).

Pixel values are scaled to [0, 1]; no other preprocessing is applied.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR_PIXELS = 3072
CIFAR_RECORD_BYTES = 1 + CIFAR_PIXELS
CIFAR_CLASSES = 10


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """A labelled sample matrix: features in [0, 1], integer labels in [0, n_classes)."""

    features: np.ndarray  # (n_samples, n_features) float64
    labels: np.ndarray  # (n_samples,) int64
    n_classes: int

    def __post_init__(self) -> None:
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if features.ndim != 2 or labels.ndim != 1:
            raise ConfigError("features must be 2-D and labels 1-D")
        if features.shape[0] != labels.shape[0]:
            raise ConfigError(
                f"feature/label count mismatch: {features.shape[0]} vs {labels.shape[0]}"
            )
        if features.shape[0] < 1:
            raise ConfigError("a dataset needs at least one sample")
        if not np.all(np.isfinite(features)):
            raise ConfigError("features contain non-finite values")
        if self.n_classes < 1:
            raise ConfigError(f"n_classes must be >= 1, got {self.n_classes}")
        if labels.min() < 0 or labels.max() >= self.n_classes:
            raise ConfigError(
                f"labels must lie in [0, {self.n_classes}), got range "
                f"[{labels.min()}, {labels.max()}]"
            )
        object.__setattr__(self, "features", _readonly(features))
        object.__setattr__(self, "labels", _readonly(labels))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, n: int) -> "Dataset":
        """First ``n`` samples as a new dataset (class count preserved)."""
        if not 1 <= n <= self.n_samples:
            raise ConfigError(f"cannot take {n} of {self.n_samples} samples")
        return Dataset(self.features[:n].copy(), self.labels[:n].copy(), self.n_classes)


@dataclass(frozen=True)
class DataShard:
    """One client's view of a dataset plus the sample count it reports upstream."""

    owner_id: int
    dataset: Dataset
    rows: np.ndarray  # (k,) int64 indices into dataset
    reported_size: int

    def __post_init__(self) -> None:
        rows = np.ascontiguousarray(self.rows, dtype=np.int64)
        if rows.ndim != 1 or rows.size < 1:
            raise ConfigError("a shard needs at least one row")
        if rows.min() < 0 or rows.max() >= self.dataset.n_samples:
            raise ConfigError("shard rows out of dataset range")
        if self.reported_size < 1:
            raise ConfigError(f"reported_size must be >= 1, got {self.reported_size}")
        object.__setattr__(self, "rows", _readonly(rows))

    @property
    def n_samples(self) -> int:
        return self.rows.size

    @property
    def features(self) -> np.ndarray:
        return self.dataset.features[self.rows]

    @property
    def labels(self) -> np.ndarray:
        return self.dataset.labels[self.rows]

    @property
    def n_classes(self) -> int:
        return self.dataset.n_classes


def as_shard(dataset: Dataset, owner_id: int = -1) -> DataShard:
    """Wrap a whole dataset as a single shard (used for global-loss probes)."""
    return DataShard(owner_id, dataset, np.arange(dataset.n_samples), dataset.n_samples)


# ---------------------------------------------------------------------------
# IDX files


def _read_bytes(path: str | Path) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise FormatError(f"{p}: no such file")
    return p.read_bytes()


def load_idx_images(path: str | Path) -> np.ndarray:
    """Read an IDX image file into a (n, rows, cols) uint8 array."""
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated IDX image header ({len(raw)} bytes)")
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(f"{path}: bad IDX image magic 0x{magic:08x}")
    expected = 16 + n * rows * cols
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(n, rows, cols)


def load_idx_labels(path: str | Path) -> np.ndarray:
    """Read an IDX label file into a (n,) uint8 array."""
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated IDX label header ({len(raw)} bytes)")
    magic, n = struct.unpack(">II", raw[:8])
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(f"{path}: bad IDX label magic 0x{magic:08x}")
    if len(raw) != 8 + n:
        raise FormatError(f"{path}: expected {8 + n} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, offset=8)


def load_idx_dataset(images_path: str | Path, labels_path: str | Path) -> Dataset:
    """Load an IDX image/label pair as a flat dataset with pixels in [0, 1]."""
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{labels_path}: {labels.shape[0]} labels for {images.shape[0]} images"
        )
    if images.shape[0] == 0:
        raise FormatError(f"{images_path}: contains no samples")
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(features, labels.astype(np.int64), int(labels.max()) + 1)


def write_idx_images(path: str | Path, images: np.ndarray) -> None:
    """Write a (n, rows, cols) uint8 array as an IDX image file."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ConfigError(f"images must be (n, rows, cols), got shape {images.shape}")
    header = struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape)
    Path(path).write_bytes(header + images.tobytes())


def write_idx_labels(path: str | Path, labels: np.ndarray) -> None:
    """Write a (n,) integer array as an IDX label file."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if labels.ndim != 1:
        raise ConfigError(f"labels must be 1-D, got shape {labels.shape}")
    header = struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0])
    Path(path).write_bytes(header + labels.tobytes())


# ---------------------------------------------------------------------------
# CIFAR-10 binary batches


def load_cifar10(batch_paths: list[str | Path] | tuple[str | Path, ...]) -> Dataset:
    """Load one or more CIFAR-10 binary batches (1 label byte + 3072 pixel bytes)."""
    if not batch_paths:
        raise ConfigError("no CIFAR-10 batch paths given")
    all_labels = []
    all_pixels = []
    for path in batch_paths:
        raw = _read_bytes(path)
        if len(raw) == 0:
            raise FormatError(f"{path}: contains no records")
        if len(raw) % CIFAR_RECORD_BYTES != 0:
            raise FormatError(
                f"{path}: length {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        labels = records[:, 0]
        if labels.max() >= CIFAR_CLASSES:
            raise FormatError(f"{path}: label {labels.max()} out of range for CIFAR-10")
        all_labels.append(labels)
        all_pixels.append(records[:, 1:])
    labels = np.concatenate(all_labels).astype(np.int64)
    features = np.concatenate(all_pixels).astype(np.float64) / 255.0
    return Dataset(features, labels, CIFAR_CLASSES)


# ---------------------------------------------------------------------------
# Partitioning


def partition_iid(dataset: Dataset, n_shards: int, seed: int) -> list[DataShard]:
    """Split a dataset into near-equal disjoint shards by seeded shuffling.

    Shard sizes differ by at most one; the first ``n_samples % n_shards``
    shards receive the extra sample. ``reported_size`` equals the actual size.
    """
    if n_shards < 1:
        raise ConfigError(f"need at least one shard, got {n_shards}")
    if n_shards > dataset.n_samples:
        raise ConfigError(
            f"cannot split {dataset.n_samples} samples into {n_shards} shards"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n_samples)
    base, extra = divmod(dataset.n_samples, n_shards)
    shards = []
    start = 0
    for owner in range(n_shards):
        size = base + (1 if owner < extra else 0)
        rows = np.sort(perm[start : start + size])
        shards.append(DataShard(owner, dataset, rows, size))
        start += size
    return shards


# ---------------------------------------------------------------------------
# Synthetic image fixtures
#
# The build environment has no copy of the real MNIST-family corpora, so
# experiments and the acceptance suite run on a deterministic synthetic
# stand-in: 10 smooth class prototypes sharing a common background, sampled
# with amplitude jitter, pixel noise, and a small label-noise floor that keeps
# hinge pressure alive near convergence.


def _blur(field: np.ndarray) -> np.ndarray:
    kernel = np.array([1.0, 4.0, 6.0, 4.0, 1.0])
    kernel /= kernel.sum()
    out = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="same"), 1, field)
    return np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="same"), 0, out)


def synthetic_image_dataset(
    n_samples: int,
    seed: int,
    *,
    n_classes: int = 10,
    side: int = 28,
    shared_weight: float = 0.55,
    noise: float = 0.32,
    label_noise: float = 0.03,
) -> Dataset:
    """Deterministic MNIST-shaped classification dataset.

    Every class is a smoothed random prototype mixed with a shared background
    (``shared_weight`` controls class overlap). Samples add per-image amplitude
    jitter and Gaussian pixel noise, are clipped to [0, 1], and quantized to
    uint8 so the dataset round-trips exactly through IDX files.
    """
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    background = _blur(_blur(rng.normal(0.0, 1.0, (side, side))))
    prototypes = []
    for _ in range(n_classes):
        own = _blur(_blur(rng.normal(0.0, 1.0, (side, side))))
        p = shared_weight * background + (1.0 - shared_weight) * own
        p = (p - p.min()) / max(p.max() - p.min(), 1e-12)
        prototypes.append(0.1 + 0.8 * p)
    labels = rng.integers(0, n_classes, n_samples)
    amps = rng.uniform(0.65, 1.0, n_samples)
    images = np.empty((n_samples, side, side))
    for i in range(n_samples):
        images[i] = amps[i] * prototypes[labels[i]] + rng.normal(0.0, noise, (side, side))
    flipped = rng.random(n_samples) < label_noise
    labels = np.where(flipped, rng.integers(0, n_classes, n_samples), labels)
    quantized = np.round(np.clip(images, 0.0, 1.0) * 255.0).astype(np.uint8)
    features = quantized.reshape(n_samples, -1).astype(np.float64) / 255.0
    return Dataset(features, labels.astype(np.int64), n_classes)


def write_synthetic_idx(
    out_dir: str | Path,
    n_train: int = 2000,
    n_test: int = 1000,
    seed: int = 1234,
    **kwargs,
) -> dict[str, Path]:
    """Write a synthetic train/test pair as standard-named IDX files.

    Train and test are disjoint slices of one draw, so they share prototypes.
    Returns the four file paths keyed by config name.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    full = synthetic_image_dataset(n_train + n_test, seed, **kwargs)
    side = int(round(full.n_features**0.5))
    images = np.round(full.features * 255.0).astype(np.uint8).reshape(-1, side, side)
    paths = {
        "train_images": out / "train-images-idx3-ubyte",
        "train_labels": out / "train-labels-idx1-ubyte",
        "test_images": out / "t10k-images-idx3-ubyte",
        "test_labels": out / "t10k-labels-idx1-ubyte",
    }
    write_idx_images(paths["train_images"], images[:n_train])
    write_idx_labels(paths["train_labels"], full.labels[:n_train])
    write_idx_images(paths["test_images"], images[n_train:])
    write_idx_labels(paths["test_labels"], full.labels[n_train:])
    return paths
