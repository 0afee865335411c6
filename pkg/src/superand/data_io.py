"""Dataset ingestion and embedding export.

Datasets hold float images in [0, 1]. Labels, when present, are quarantined
behind an evaluation-only accessor: the training path has no way to read
them, keeping the learning loop structurally label-free.
"""

import os
import struct

import numpy as np

from .errors import DataFormatError, ParameterError, StateError

_CIFAR_RECORD = 3073  # 1 label byte + 32*32*3 pixel bytes
_CIFAR_TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
_CIFAR_TEST_FILES = ["test_batch.bin"]


class Dataset:
    """Immutable image collection with optional evaluation-only labels."""

    def __init__(self, images: np.ndarray, name: str = "", split: str = "", labels=None):
        images = np.asarray(images, dtype=np.float64)
        if images.ndim != 4 or images.shape[3] != 3:
            raise ParameterError(f"expected (N, H, W, 3) images, got shape {images.shape}")
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (images.shape[0],):
                raise ParameterError(
                    f"labels shape {labels.shape} does not cover {images.shape[0]} images"
                )
        self.images = images
        self.name = name
        self.split = split
        self._labels = labels

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def image_shape(self):
        return self.images.shape[1:]

    @property
    def has_labels(self) -> bool:
        return self._labels is not None

    def labels_for_evaluation(self) -> np.ndarray:
        """Cheat labels for post-hoc scoring only, never for training."""
        if self._labels is None:
            raise StateError(f"dataset {self.name!r} carries no labels")
        return self._labels


def load_cifar10(directory, split: str = "train") -> Dataset:
    """Parse the standard binary batch files: per record one label byte then
    3072 channel-planar pixel bytes, scaled to [0, 1]."""
    if split == "train":
        names = _CIFAR_TRAIN_FILES
    elif split == "test":
        names = _CIFAR_TEST_FILES
    else:
        raise ParameterError(f"split must be 'train' or 'test', got {split!r}")
    images, labels = [], []
    for name in names:
        path = os.path.join(directory, name)
        if not os.path.isfile(path):
            raise DataFormatError(f"missing CIFAR-10 batch file: {path}")
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) % _CIFAR_RECORD != 0:
            offset = len(blob) - (len(blob) % _CIFAR_RECORD)
            raise DataFormatError(
                f"{path}: size {len(blob)} is not a multiple of {_CIFAR_RECORD} "
                f"(trailing bytes start at offset {offset})"
            )
        records = np.frombuffer(blob, dtype=np.uint8).reshape(-1, _CIFAR_RECORD)
        labels.append(records[:, 0].astype(np.int64))
        pixels = records[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
        images.append(pixels.astype(np.float64) / 255.0)
    return Dataset(
        np.concatenate(images),
        name="cifar10",
        split=split,
        labels=np.concatenate(labels),
    )


def gen_synthetic_blobs(
    classes: int, per_class: int, image_size: int, noise_sigma: float, seed: int
) -> Dataset:
    """Color-pattern blob classes: one random base image per class, samples
    are the base plus Gaussian pixel noise clamped to [0, 1]."""
    if classes < 2:
        raise ParameterError(f"need at least 2 classes, got {classes}")
    if per_class < 1 or image_size < 3:
        raise ParameterError(f"invalid per_class={per_class} or image_size={image_size}")
    rng = np.random.default_rng(seed)
    bases = rng.uniform(size=(classes, image_size, image_size, 3))
    images = []
    for c in range(classes):
        noise = rng.normal(0.0, noise_sigma, size=(per_class, image_size, image_size, 3))
        images.append(np.clip(bases[c] + noise, 0.0, 1.0))
    labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    return Dataset(np.concatenate(images), name="blobs", split="all", labels=labels)


def hold_out_split(dataset: Dataset, test_per_class: int):
    """Deterministic stratified split: the last test_per_class samples of
    each class become the held-out set."""
    labels = dataset.labels_for_evaluation()
    test_mask = np.zeros(len(dataset), dtype=bool)
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if test_per_class >= len(members):
            raise ParameterError(
                f"holding out {test_per_class} leaves class {int(c)} without training samples"
            )
        test_mask[members[len(members) - test_per_class :]] = True
    train = Dataset(
        dataset.images[~test_mask], dataset.name, "train", labels[~test_mask]
    )
    test = Dataset(dataset.images[test_mask], dataset.name, "test", labels[test_mask])
    return train, test


def export_embeddings(matrix: np.ndarray, path, fmt: str) -> None:
    """Write an (N, D) embedding matrix as csv (9 significant digits) or as
    a raw little-endian file: u32 N, u32 D, then N*D float32 values."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ParameterError(f"expected an (N, D) matrix, got shape {matrix.shape}")
    n, d = matrix.shape
    try:
        if fmt == "csv":
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("index," + ",".join(f"e{j}" for j in range(d)) + "\n")
                for i in range(n):
                    fh.write(str(i) + "," + ",".join(f"{x:.9g}" for x in matrix[i]) + "\n")
        elif fmt == "raw":
            with open(path, "wb") as fh:
                fh.write(struct.pack("<II", n, d))
                fh.write(matrix.astype("<f4").tobytes())
        else:
            raise ParameterError(f"export format must be 'csv' or 'raw', got {fmt!r}")
    except OSError as exc:
        raise DataFormatError(f"cannot write embeddings to {path}: {exc}") from exc


def load_raw_embeddings(path) -> np.ndarray:
    """Read back a raw embedding file written by :func:`export_embeddings`."""
    try:
        with open(path, "rb") as fh:
            header = fh.read(8)
            if len(header) != 8:
                raise DataFormatError(f"{path}: truncated header")
            n, d = struct.unpack("<II", header)
            payload = fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read embeddings from {path}: {exc}") from exc
    expected = n * d * 4
    if len(payload) != expected:
        raise DataFormatError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float64)
