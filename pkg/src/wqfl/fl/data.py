"""Datasets, MNIST IDX ingestion and per-user partitioning."""
from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
DATA_DIR_ENV = "WQFL_DATA_DIR"

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass
class Dataset:
    inputs: np.ndarray   # (n, features), float
    labels: np.ndarray   # (n,), int

    def __post_init__(self):
        if len(self.inputs) != len(self.labels):
            raise ValueError("inputs and labels differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.labels[idx])


@dataclass
class DataShard(Dataset):
    owner: int = 0
    indices: np.ndarray | None = None


def _open(path: Path):
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def _resolve(path) -> Path:
    path = Path(path)
    if path.exists():
        return path
    gz = path.with_name(path.name + ".gz")
    if gz.exists():
        return gz
    raise FileNotFoundError(path)


def read_idx(path) -> np.ndarray:
    """Read an unsigned-byte IDX file (images or labels), optionally gzipped."""
    with _open(_resolve(path)) as fh:
        magic = struct.unpack(">I", fh.read(4))[0]
        if magic == IMAGE_MAGIC:
            n, rows, cols = struct.unpack(">III", fh.read(12))
            shape = (n, rows, cols)
        elif magic == LABEL_MAGIC:
            shape = struct.unpack(">I", fh.read(4))
        else:
            raise ValueError(f"{path}: bad IDX magic {magic:#010x}")
        raw = np.frombuffer(fh.read(), dtype=np.uint8)
    if raw.size != int(np.prod(shape)):
        raise ValueError(f"{path}: expected {int(np.prod(shape))} bytes, found {raw.size}")
    return raw.reshape(shape)


def write_idx(path, array) -> None:
    """Write images ``(n, rows, cols)`` or labels ``(n,)`` as uint8 IDX."""
    arr = np.asarray(array)
    if arr.ndim == 3:
        header = struct.pack(">IIII", IMAGE_MAGIC, *arr.shape)
    elif arr.ndim == 1:
        header = struct.pack(">II", LABEL_MAGIC, arr.shape[0])
    else:
        raise ValueError("IDX writer handles 3-D images or 1-D labels only")
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype(np.uint8).tobytes())


def load_mnist(directory=None) -> tuple[Dataset, Dataset]:
    """Train and test sets from the four standard IDX files, pixels scaled to [0, 1]."""
    directory = Path(directory or os.environ.get(DATA_DIR_ENV, "."))
    out = []
    for split in ("train", "test"):
        images = read_idx(directory / MNIST_FILES[f"{split}_images"])
        labels = read_idx(directory / MNIST_FILES[f"{split}_labels"])
        if len(images) != len(labels):
            raise ValueError(f"{split}: {len(images)} images but {len(labels)} labels")
        out.append(Dataset(images.reshape(len(images), -1).astype(np.float64) / 255.0,
                           labels.astype(np.int64)))
    return out[0], out[1]


def make_synthetic(n_train: int, n_test: int, rng: np.random.Generator, n_classes: int = 10,
                   dim: int = 784, shared: float = 0.1, distinct: float = 0.02, keep: float = 0.5,
                   salt: float = 0.05) -> tuple[Dataset, Dataset]:
    """Sparse MNIST-like images in [0, 1] drawn around random class templates.

    Each template lights a ``shared`` fraction of pixels common to all classes
    plus a ``distinct`` fraction of its own.  A sample keeps each template
    pixel with probability ``keep`` and gets a ``salt`` fraction of random
    bright pixels.  Needs no files, so the full pipeline runs offline.
    """
    common = rng.random(dim) < shared
    masks = common | (rng.random((n_classes, dim)) < distinct)
    templates = masks * rng.uniform(0.5, 1.0, (n_classes, dim))

    def draw(n):
        y = rng.integers(0, n_classes, size=n)
        x = templates[y] * (rng.random((n, dim)) < keep)
        x = np.maximum(x, (rng.random((n, dim)) < salt) * rng.random((n, dim)))
        return Dataset(x, y)

    return draw(n_train), draw(n_test)


def partition(dataset: Dataset, n_users: int, mode: str, rng: np.random.Generator,
              samples_per_user: int = 200, labels_per_user: int = 5) -> list[DataShard]:
    """Split a dataset into disjoint per-user shards.

    ``iid``: shuffled and dealt out.  ``noniid``: each user receives
    ``labels_per_user`` equal label-pure chunks from distinct labels.
    """
    total = n_users * samples_per_user
    if total > len(dataset):
        raise ValueError(f"dataset has {len(dataset)} samples, need {total}")
    if mode == "iid":
        order = rng.permutation(len(dataset))[:total]
        groups = np.split(order, n_users)
    elif mode == "noniid":
        groups = _label_chunks(dataset.labels, n_users, samples_per_user, labels_per_user, rng)
    else:
        raise ValueError(f"unknown partition mode {mode!r}")
    return [DataShard(dataset.inputs[g], dataset.labels[g], owner=u, indices=g)
            for u, g in enumerate(groups)]


def _label_chunks(labels, n_users, samples_per_user, k, rng) -> list[np.ndarray]:
    if samples_per_user % k:
        raise ValueError("samples_per_user must be divisible by labels_per_user")
    classes = rng.permutation(np.unique(labels))
    n_chunks = n_users * k
    per_class = -(-n_chunks // len(classes))
    if per_class > n_users or k > len(classes):
        raise ValueError("not enough distinct labels for the requested split")
    size = samples_per_user // k
    chunks = []
    for c in classes:
        pool = rng.permutation(np.flatnonzero(labels == c))
        if len(pool) < per_class * size:
            raise ValueError(f"label {c} has {len(pool)} samples, need {per_class * size}")
        chunks.extend(pool[i * size:(i + 1) * size] for i in range(per_class))
    # chunks are grouped by label; a stride of n_users never lands on one label twice
    return [np.concatenate(chunks[u::n_users][:k]) for u in range(n_users)]


def aggregation_weights(shards) -> np.ndarray:
    sizes = np.array([len(s) for s in shards], dtype=float)
    return sizes / sizes.sum()
