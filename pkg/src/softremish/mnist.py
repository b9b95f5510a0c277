"""MNIST IDX reader/writer, batching and a synthetic stand-in dataset."""

from __future__ import annotations

import gzip
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .errors import ConfigError, DataError, IdxFormatError, IdxTruncatedError, LabelValueError

IMAGE_MAGIC = 2051  # 0x00000803: unsigned bytes, 3 dimensions
LABEL_MAGIC = 2049  # 0x00000801: unsigned bytes, 1 dimension
GZIP_SIGNATURE = b"\x1f\x8b"

TRAIN_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
TEST_FILES = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
NUM_CLASSES = 10


@dataclass(frozen=True)
class IdxHeader:
    magic: int
    dims: tuple[int, ...]

    @property
    def payload_size(self) -> int:
        return math.prod(self.dims)


@dataclass(frozen=True)
class Dataset:
    """Images ``[n, 28, 28, 1]`` scaled to [0, 1] and integer labels 0-9."""

    images: np.ndarray
    labels: np.ndarray
    split: str = "train"

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise DataError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )

    def __len__(self) -> int:
        return self.labels.shape[0]

    def subset(self, index, split: Optional[str] = None) -> "Dataset":
        return Dataset(self.images[index], self.labels[index], split or self.split)


def _maybe_gunzip(data: bytes) -> bytes:
    if data[:2] == GZIP_SIGNATURE:
        try:
            return gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise IdxFormatError(f"corrupt gzip container: {exc}") from None
    return data


def read_header(data: bytes, expected_magic: int, ndim: int, what: str) -> IdxHeader:
    header_len = 4 + 4 * ndim
    if len(data) < 4:
        raise IdxTruncatedError(f"{what} header", header_len, len(data))
    (magic,) = struct.unpack(">i", data[:4])
    if magic != expected_magic:
        raise IdxFormatError(
            f"bad magic number for {what}: expected {expected_magic}, got {magic}"
        )
    if len(data) < header_len:
        raise IdxTruncatedError(f"{what} header", header_len, len(data))
    dims = struct.unpack(f">{ndim}i", data[4:header_len])
    if any(d < 0 for d in dims):
        raise IdxFormatError(f"negative extent in {what} header: {dims}")
    return IdxHeader(magic, tuple(dims))


def _payload(data: bytes, header: IdxHeader, what: str) -> np.ndarray:
    start = 4 + 4 * len(header.dims)
    actual = len(data) - start
    if actual < header.payload_size:
        raise IdxTruncatedError(what, header.payload_size, actual)
    if actual > header.payload_size:
        raise IdxFormatError(
            f"{what} has {actual - header.payload_size} trailing bytes beyond the declared "
            f"{header.payload_size}"
        )
    return np.frombuffer(data, dtype=np.uint8, offset=start).reshape(header.dims)


def parse_idx_images(data: bytes) -> np.ndarray:
    """Raw ``uint8`` array ``[n, rows, cols]`` from an IDX image stream (raw or gzip)."""
    data = _maybe_gunzip(bytes(data))
    header = read_header(data, IMAGE_MAGIC, 3, "image file")
    return _payload(data, header, "image payload").copy()


def parse_idx_labels(data: bytes) -> np.ndarray:
    data = _maybe_gunzip(bytes(data))
    header = read_header(data, LABEL_MAGIC, 1, "label file")
    labels = _payload(data, header, "label payload").copy()
    if labels.size and labels.max() >= NUM_CLASSES:
        bad = int(np.argmax(labels >= NUM_CLASSES))
        raise LabelValueError(f"label {labels[bad]} at index {bad} is outside 0-9")
    return labels


def encode_idx_images(images: np.ndarray, compress: bool = False) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError(f"expected [n, rows, cols] images, got shape {images.shape}")
    data = struct.pack(">4i", IMAGE_MAGIC, *images.shape) + images.tobytes()
    return gzip.compress(data, mtime=0) if compress else data


def encode_idx_labels(labels: np.ndarray, compress: bool = False) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8).ravel()
    data = struct.pack(">2i", LABEL_MAGIC, labels.size) + labels.tobytes()
    return gzip.compress(data, mtime=0) if compress else data


def normalize(raw: np.ndarray, dtype=np.float32) -> np.ndarray:
    """Scale byte pixels by 1/255 and append a channel axis."""
    dtype = np.dtype(dtype)
    return (np.asarray(raw, dtype=dtype) / dtype.type(255.0))[..., None]


def _find(data_dir: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        path = data_dir / name
        if path.is_file():
            return path
    raise DataError(f"missing MNIST file {stem}[.gz] in {data_dir}")


def load_split(data_dir, split: str = "train", dtype=np.float32) -> Dataset:
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise ConfigError(f"data directory {data_dir} does not exist")
    img_stem, lbl_stem = TRAIN_FILES if split == "train" else TEST_FILES
    raw = parse_idx_images(_find(data_dir, img_stem).read_bytes())
    labels = parse_idx_labels(_find(data_dir, lbl_stem).read_bytes())
    if raw.shape[0] != labels.shape[0]:
        raise DataError(f"{split}: {raw.shape[0]} images but {labels.shape[0]} labels")
    return Dataset(normalize(raw, dtype), labels.astype(np.int64), split)


def load_mnist(data_dir, dtype=np.float32) -> tuple[Dataset, Dataset]:
    """``(train, test)``; the test split doubles as the validation set."""
    return load_split(data_dir, "train", dtype), load_split(data_dir, "test", dtype)


def mnist_available(data_dir) -> bool:
    if data_dir is None:
        return False
    try:
        for stem in TRAIN_FILES + TEST_FILES:
            _find(Path(data_dir), stem)
    except DataError:
        return False
    return True


def epoch_order(n: int, shuffle: bool, seed: int, epoch: int = 0) -> np.ndarray:
    if not shuffle:
        return np.arange(n)
    rng = np.random.default_rng([int(seed), int(epoch)])
    return rng.permutation(n)


def batches(
    ds: Dataset, batch_size: int, shuffle: bool = False, seed: int = 0, epoch: int = 0
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(images, labels)`` covering every sample exactly once.

    The permutation depends only on ``(seed, epoch)``.
    """
    if batch_size < 1:
        raise ConfigError(f"batch size must be >= 1, got {batch_size}")
    order = epoch_order(len(ds), shuffle, seed, epoch)
    for start in range(0, len(ds), batch_size):
        idx = order[start : start + batch_size]
        yield ds.images[idx], ds.labels[idx]


# --------------------------------------------------------------------------
# synthetic data

_SIZE = 28


def _stroke_templates() -> np.ndarray:
    """Ten 20x20 stroke drawings, one per class, on a 0/1 grid."""
    n = 20
    yy, xx = np.mgrid[0:n, 0:n]
    c = (n - 1) / 2
    r = np.hypot(yy - c, xx - c)
    t = 2
    ring = np.abs(r - 7.5) < t / 2 + 0.3
    vbar = np.abs(xx - c) < t / 2 + 0.1
    hbar = np.abs(yy - c) < t / 2 + 0.1
    diag = np.abs(yy - xx) < t / 2 + 0.3
    anti = np.abs(yy + xx - (n - 1)) < t / 2 + 0.3
    top = (yy < t) & (xx > 2) & (xx < n - 3)
    bottom = (yy >= n - t) & (xx > 2) & (xx < n - 3)
    left = (xx < t) & (yy > 2) & (yy < n - 3)
    right = (xx >= n - t) & (yy > 2) & (yy < n - 3)
    upper_ring = np.abs(np.hypot(yy - 5, xx - c) - 4) < 1.1
    lower_ring = np.abs(np.hypot(yy - 14, xx - c) - 4.5) < 1.1
    shapes = [
        ring,                                   # 0
        vbar,                                   # 1
        top | diag & (yy > n // 2) | bottom,    # 2 (z-like)
        top | hbar | bottom | right,            # 3
        left & (yy < n // 2) | hbar | vbar,     # 4
        top | left & (yy < c) | hbar | right & (yy > c) | bottom,  # 5
        lower_ring | left,                      # 6
        top | anti,                             # 7
        upper_ring | lower_ring,                # 8
        upper_ring | right,                     # 9
    ]
    return np.stack([s.astype(np.float64) for s in shapes])


def synthetic_dataset(seed: int, n: int, split: str = "train", dtype=np.float32) -> Dataset:
    """Deterministic, learnable digit-like images with balanced labels.

    Each class is a fixed stroke pattern, placed with a random offset of up to
    +/-3 pixels, random stroke intensity, and additive clipped Gaussian noise.
    Labels cycle ``0, 1, ..., 9`` so any prefix of length ``10k`` is balanced.
    """
    if n < 1:
        raise ConfigError(f"synthetic dataset size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    templates = _stroke_templates()
    labels = np.arange(n, dtype=np.int64) % NUM_CLASSES
    images = np.zeros((n, _SIZE, _SIZE), dtype=np.float64)
    offsets = rng.integers(1, 8, size=(n, 2))
    intensity = rng.uniform(0.6, 1.0, size=n)
    noise = rng.normal(0.0, 0.15, size=(n, _SIZE, _SIZE))
    for i in range(n):
        oy, ox = offsets[i]
        images[i, oy : oy + 20, ox : ox + 20] = templates[labels[i]] * intensity[i]
    images = np.clip(images + noise, 0.0, 1.0)
    # quantise like real MNIST bytes so IDX export is lossless
    raw = np.round(images * 255).astype(np.uint8)
    return Dataset(normalize(raw, dtype), labels, split)


def synthetic_split(seed: int, n: int, holdout: float = 0.2, dtype=np.float32) -> tuple[Dataset, Dataset]:
    """Split ``synthetic_dataset(seed, n)`` into a training part and a held-out tail."""
    ds = synthetic_dataset(seed, n, dtype=dtype)
    n_val = max(1, int(round(n * holdout)))
    if n_val >= n:
        raise ConfigError(f"synthetic dataset of {n} samples is too small to hold out {n_val}")
    cut = n - n_val
    return ds.subset(slice(0, cut), "train"), ds.subset(slice(cut, n), "test")
