"""MNIST IDX reader / writer and schedule-driven subset selection."""

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX file: bad magic, truncated payload or mismatched counts."""


@dataclass(frozen=True)
class MnistSet:
    images: np.ndarray  # (n, rows * cols) uint8
    labels: np.ndarray  # (n,) uint8
    rows: int = 28
    cols: int = 28

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise IdxFormatError(f"count mismatch: {len(self.images)} images vs {len(self.labels)} labels")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices) -> "MnistSet":
        indices = np.asarray(indices, dtype=np.int64)
        return MnistSet(images=self.images[indices], labels=self.labels[indices], rows=self.rows, cols=self.cols)


def _read_bytes(path: Path) -> bytes:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"IDX file not found: {path}")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _parse(path: Path, expected_magic: int, header_ints: int) -> tuple[tuple[int, ...], bytes]:
    data = _read_bytes(path)
    name = Path(path).name
    if len(data) < 4:
        raise IdxFormatError(f"{name}: truncated header: expected {4 * header_ints} bytes, got {len(data)}")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise IdxFormatError(f"{name}: bad magic 0x{magic:08x} (expected 0x{expected_magic:08x})")
    header_len = 4 * header_ints
    if len(data) < header_len:
        raise IdxFormatError(f"{name}: truncated header: expected {header_len} bytes, got {len(data)}")
    dims = struct.unpack(f">{header_ints - 1}I", data[4:header_len])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = data[header_len:]
    if len(payload) != expected:
        kind = "truncated payload" if len(payload) < expected else "trailing bytes after payload"
        raise IdxFormatError(f"{name}: {kind}: expected {expected} bytes, got {len(payload)}")
    return dims, payload


def read_idx_images(path: Path) -> np.ndarray:
    """(n, rows, cols) uint8 array from an IDX3 image file."""
    (n, rows, cols), payload = _parse(path, IMAGE_MAGIC, 4)
    return np.frombuffer(payload, dtype=np.uint8).reshape(n, rows, cols)


def read_idx_labels(path: Path) -> np.ndarray:
    """(n,) uint8 array from an IDX1 label file; values must be digits."""
    (n,), payload = _parse(path, LABEL_MAGIC, 2)
    labels = np.frombuffer(payload, dtype=np.uint8)
    if n and labels.max() > 9:
        raise IdxFormatError(f"{Path(path).name}: label {int(labels.max())} outside 0..9")
    return labels


def load_idx(images_path: Path, labels_path: Path) -> MnistSet:
    """Load an image/label file pair."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise IdxFormatError(
            f"count mismatch: {Path(images_path).name} has {len(images)} images, "
            f"{Path(labels_path).name} has {len(labels)} labels"
        )
    n, rows, cols = images.shape
    logger.info(f"loaded {n} images ({rows}x{cols}) from {Path(images_path).name}")
    return MnistSet(images=images.reshape(n, rows * cols), labels=labels, rows=rows, cols=cols)


def write_idx_images(images: np.ndarray, path: Path) -> Path:
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError(f"expected (n, rows, cols) images, got shape {images.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(struct.pack(">4I", IMAGE_MAGIC, *images.shape) + images.tobytes())
    return path


def write_idx_labels(labels: np.ndarray, path: Path) -> Path:
    labels = np.asarray(labels, dtype=np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(struct.pack(">2I", LABEL_MAGIC, labels.size) + labels.tobytes())
    return path


def select_per_class(labels: np.ndarray, classes, count: int, offset: int = 0) -> dict[int, np.ndarray]:
    """Indices of images [offset, offset + count) of each class, in dataset order."""
    labels = np.asarray(labels)
    out = {}
    for c in classes:
        idx = np.flatnonzero(labels == c)[offset : offset + count]
        if len(idx) < count:
            logger.warning(f"class {c}: only {len(idx)} of {count} requested images available")
        out[int(c)] = idx
    return out


def select_test(labels: np.ndarray, classes, limit: int) -> np.ndarray:
    """First `limit` indices whose label is one of `classes`."""
    return np.flatnonzero(np.isin(np.asarray(labels), list(classes)))[:limit]
