"""Dataset ingestion: MNIST IDX files or an image directory with a labels CSV."""
import csv
import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from ..imagecore import load_image

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

# train / val / test sizes of the full MNIST split
MNIST_FULL_SPLIT = (48_000, 12_000, 10_000)
DESK_SPLIT = (2000, 500, 500)
# train / val / test fractions for generic image directories in full mode
DIR_FULL_FRACTIONS = (0.70, 0.15, 0.15)


class DatasetError(Exception):
    pass


def _open(path):
    path = Path(path)
    if not path.exists() and path.with_suffix(path.suffix + ".gz").exists():
        path = path.with_suffix(path.suffix + ".gz")
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        with opener(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc


def read_idx(path, expect_magic=None):
    """Parse an IDX file of unsigned bytes (optionally gzipped)."""
    data = _open(path)
    if len(data) < 8:
        raise DatasetError(f"{path}: truncated IDX header")
    (magic,) = struct.unpack_from(">I", data)
    if expect_magic is not None and magic != expect_magic:
        raise DatasetError(f"{path}: bad magic 0x{magic:08x}, expected 0x{expect_magic:08x}")
    if magic >> 16 != 0 or (magic >> 8) & 0xFF != 0x08:
        raise DatasetError(f"{path}: bad magic 0x{magic:08x} (only ubyte IDX is supported)")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise DatasetError(f"{path}: truncated IDX header")
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    count = int(np.prod(dims))
    if len(data) - header < count:
        raise DatasetError(f"{path}: truncated, expected {count} bytes of data, found {len(data) - header}")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=header).reshape(dims)


def read_idx_pair(images_path, labels_path):
    images = read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx(labels_path, IDX_LABELS_MAGIC)
    if len(images) != len(labels):
        raise DatasetError(f"{len(images)} images but {len(labels)} labels")
    return images[..., None].astype(np.float64) / 255.0, labels.astype(np.int64)


def load_mnist(directory):
    """Returns (train_x, train_y, test_x, test_y) from the four standard files."""
    d = Path(directory)
    tx, ty = read_idx_pair(d / "train-images-idx3-ubyte", d / "train-labels-idx1-ubyte")
    ex, ey = read_idx_pair(d / "t10k-images-idx3-ubyte", d / "t10k-labels-idx1-ubyte")
    return tx, ty, ex, ey


def load_image_dir(labels_csv):
    """Images listed in a ``path,label`` CSV; paths relative to the CSV."""
    labels_csv = Path(labels_csv)
    root = labels_csv.parent
    try:
        with labels_csv.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DatasetError(f"cannot read {labels_csv}: {exc}") from exc
    if rows and rows[0][:2] == ["path", "label"]:
        rows = rows[1:]
    if not rows:
        raise DatasetError(f"{labels_csv}: no rows")
    images, labels = [], []
    for lineno, row in enumerate(rows, 1):
        if len(row) != 2:
            raise DatasetError(f"{labels_csv}:{lineno}: expected 'path,label'")
        images.append(load_image(root / row[0]))
        labels.append(int(row[1]))
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise DatasetError(f"{labels_csv}: images have differing shapes {sorted(shapes)}")
    return np.stack(images), np.asarray(labels, dtype=np.int64)


class Split(NamedTuple):
    x: np.ndarray
    y: np.ndarray


class Splits(NamedTuple):
    train: Split
    val: Split
    test: Split


@dataclass(frozen=True)
class DatasetSpec:
    mnist_dir: Optional[str] = None
    labels_csv: Optional[str] = None
    n_train: int = DESK_SPLIT[0]
    n_val: int = DESK_SPLIT[1]
    n_test: int = DESK_SPLIT[2]
    full: bool = False

    def __post_init__(self):
        if (self.mnist_dir is None) == (self.labels_csv is None):
            raise DatasetError("give exactly one of mnist_dir or labels_csv")


def _take(rng, n_avail, counts, what):
    if sum(counts) > n_avail:
        raise DatasetError(f"requested {sum(counts)} {what} images, only {n_avail} available")
    order = rng.permutation(n_avail)
    out, start = [], 0
    for c in counts:
        out.append(order[start:start + c])
        start += c
    return out


def load_dataset(spec, seed=0):
    """Seeded, disjoint train/val/test split; pixels already scaled by 1/255."""
    rng = np.random.default_rng(seed)
    if spec.mnist_dir is not None:
        tx, ty, ex, ey = load_mnist(spec.mnist_dir)
        n_train, n_val, n_test = MNIST_FULL_SPLIT if spec.full else (spec.n_train, spec.n_val, spec.n_test)
        tr, va = _take(rng, len(tx), (n_train, n_val), "training-file")
        (te,) = _take(rng, len(ex), (n_test,), "test-file")
        return Splits(Split(tx[tr], ty[tr]), Split(tx[va], ty[va]), Split(ex[te], ey[te]))
    x, y = load_image_dir(spec.labels_csv)
    if spec.full:
        n_train = int(round(DIR_FULL_FRACTIONS[0] * len(x)))
        n_val = int(round(DIR_FULL_FRACTIONS[1] * len(x)))
        counts = (n_train, n_val, len(x) - n_train - n_val)
    else:
        counts = (spec.n_train, spec.n_val, spec.n_test)
    tr, va, te = _take(rng, len(x), counts, "listed")
    return Splits(Split(x[tr], y[tr]), Split(x[va], y[va]), Split(x[te], y[te]))
