"""Dataset loading: delimited-text IRIS/SONAR files and MNIST IDX files.

Features are always returned in ``[0, 1]``. Data already inside that range
is left untouched; anything else is rescaled with statistics from the
training split (see :func:`scale_features`) and clipped.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Dataset",
    "DatasetParseError",
    "IdxError",
    "load_delimited",
    "load_iris",
    "load_mnist",
    "load_sonar",
    "read_idx",
    "write_idx",
    "scale_features",
    "stratified_split",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

_IDX_TYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


class DatasetParseError(ValueError):
    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where += f"{os.fspath(path)}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line


class IdxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass
class Dataset:
    name: str
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    train_idx: np.ndarray
    val_idx: np.ndarray
    class_names: Optional[List[str]] = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.features)):
            raise ValueError(f"{self.name}: non-finite features")
        if self.features.size and (self.features.min() < 0 or self.features.max() > 1):
            raise ValueError(f"{self.name}: features outside [0, 1]")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError(f"{self.name}: labels outside [0, {self.n_classes})")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def train(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.features[self.train_idx], self.labels[self.train_idx]

    @property
    def validation(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.features[self.val_idx], self.labels[self.val_idx]


def stratified_split(labels: np.ndarray, train_fraction: float, seed: int):
    """Per-class seeded split; returns sorted ``(train_idx, val_idx)``."""
    rng = np.random.default_rng(seed)
    train: List[int] = []
    val: List[int] = []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n = int(round(train_fraction * idx.size))
        train.extend(idx[:n])
        val.extend(idx[n:])
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(val), dtype=np.int64)


def scale_features(features: np.ndarray, train_idx: np.ndarray) -> np.ndarray:
    """Map features into ``[0, 1]`` using training-split statistics.

    Non-negative data is divided by the per-feature maximum, which keeps
    zero at zero; data with negative values is min-max scaled.
    """
    x = np.asarray(features, dtype=float)
    if x.size == 0 or (x.min() >= 0 and x.max() <= 1):
        return x
    ref = x[train_idx] if len(train_idx) else x
    lo = ref.min(axis=0) if x.min() < 0 else np.zeros(x.shape[1])
    span = ref.max(axis=0) - lo
    span[span == 0] = 1.0
    return np.clip((x - lo) / span, 0.0, 1.0)


def load_delimited(path, n_features: Optional[int] = None, delimiter: Optional[str] = None):
    """Parse ``f1,f2,...,label`` rows. Labels may be names or integers.

    Returns ``(features, labels, class_names)``; class ids follow the sorted
    class names (or the integer values themselves).
    """
    rows: List[List[float]] = []
    raw_labels: List[str] = []
    width = None
    with open(os.fspath(path), encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = [t.strip() for t in (text.split(delimiter) if delimiter else text.replace(";", ",").split(","))]
            if len(fields) == 1:
                fields = text.split()
            if width is None:
                width = len(fields)
                if n_features is not None and width != n_features + 1:
                    raise DatasetParseError(f"expected {n_features + 1} fields, found {width}", path, lineno)
            elif len(fields) != width:
                raise DatasetParseError(f"expected {width} fields, found {len(fields)}", path, lineno)
            try:
                rows.append([float(v) for v in fields[:-1]])
            except ValueError:
                bad = next(v for v in fields[:-1] if not _is_float(v))
                raise DatasetParseError(f"non-numeric field {bad!r}", path, lineno) from None
            raw_labels.append(fields[-1])
    if not rows:
        raise DatasetParseError("no data rows", path)
    features = np.array(rows, dtype=float)
    if not np.all(np.isfinite(features)):
        raise DatasetParseError("non-finite feature value", path)
    if all(_is_int(v) for v in raw_labels):
        labels = np.array([int(float(v)) for v in raw_labels], dtype=np.int64)
        names = [str(i) for i in range(int(labels.max()) + 1)]
    else:
        names = sorted(set(raw_labels))
        lookup = {n: i for i, n in enumerate(names)}
        labels = np.array([lookup[v] for v in raw_labels], dtype=np.int64)
    return features, labels, names


def _is_float(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False


def _is_int(v: str) -> bool:
    return _is_float(v) and float(v) == int(float(v))


def _tabular(name, path, n_features, seed, train_fraction, split=None) -> Dataset:
    x, y, names = load_delimited(path, n_features)
    if split is not None:
        train_idx, val_idx = (np.asarray(s, dtype=np.int64) for s in split)
    else:
        train_idx, val_idx = stratified_split(y, train_fraction, seed)
    x = scale_features(x, train_idx)
    return Dataset(name, x, y, max(len(names), int(y.max()) + 1), train_idx, val_idx, names)


def load_iris(path, seed: int = 0) -> Dataset:
    """IRIS as 150 x 4 features, half of each class for training."""
    return _tabular("iris", path, 4, seed, 0.5)


def load_sonar(path, seed: int = 0, split: Optional[Tuple[Sequence[int], Sequence[int]]] = None) -> Dataset:
    """SONAR as 208 x 60 features, 2 classes.

    ``split`` gives explicit ``(train, validation)`` row indices; without it
    a seeded stratified half split is used.
    """
    return _tabular("sonar", path, 60, seed, 0.5, split)


# -- IDX ----------------------------------------------------------------------


def read_idx(data: bytes, expected_magic: Optional[int] = None) -> np.ndarray:
    if len(data) < 4:
        raise IdxError("truncated header", len(data))
    zero, type_code, ndim = struct.unpack(">HBB", data[:4])
    magic = struct.unpack(">I", data[:4])[0]
    if zero != 0 or type_code not in _IDX_TYPES or ndim == 0:
        raise IdxError(f"bad magic number 0x{magic:08x}", 0)
    if expected_magic is not None and magic != expected_magic:
        raise IdxError(f"bad magic number 0x{magic:08x}, expected 0x{expected_magic:08x}", 0)
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxError("truncated dimension header", len(data))
    dims = struct.unpack(">" + "I" * ndim, data[4:header])
    dtype = _IDX_TYPES[type_code]
    need = int(np.prod(dims)) * dtype.itemsize
    if len(data) - header < need:
        raise IdxError(f"truncated payload: need {need} bytes, have {len(data) - header}", len(data))
    if len(data) - header > need:
        raise IdxError("trailing bytes after payload", header + need)
    return np.frombuffer(data, dtype=dtype, count=int(np.prod(dims)), offset=header).reshape(dims)


def write_idx(path, array: np.ndarray) -> None:
    arr = np.asarray(array)
    codes = {v: k for k, v in _IDX_TYPES.items()}
    dtype = arr.dtype.newbyteorder(">") if arr.dtype.itemsize > 1 else arr.dtype
    code = codes.get(np.dtype(dtype))
    if code is None:
        raise ValueError(f"unsupported dtype {arr.dtype} for IDX")
    with open(os.fspath(path), "wb") as f:
        f.write(struct.pack(">HBB", 0, code, arr.ndim))
        f.write(struct.pack(">" + "I" * arr.ndim, *arr.shape))
        f.write(arr.astype(dtype).tobytes())


def load_mnist(images_path, labels_path, name: str = "mnist") -> Dataset:
    """Images scaled by 1/255 and flattened; every row is a validation row."""
    with open(os.fspath(images_path), "rb") as f:
        images = read_idx(f.read(), IDX_IMAGES_MAGIC)
    with open(os.fspath(labels_path), "rb") as f:
        labels = read_idx(f.read(), IDX_LABELS_MAGIC)
    if images.ndim != 3 or labels.ndim != 1:
        raise IdxError("unexpected IDX dimensionality", 0)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    x = images.reshape(images.shape[0], -1).astype(float) / 255.0
    y = labels.astype(np.int64)
    idx = np.arange(len(y), dtype=np.int64)
    n_classes = max(10, int(y.max()) + 1) if y.size else 10
    ds = Dataset(name, x, y, n_classes, np.array([], dtype=np.int64), idx)
    ds.image_shape = tuple(images.shape[1:])
    return ds
