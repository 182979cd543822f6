"""Dataset generation, ingestion and preprocessing for quadnet-landscape.

This module provides:
- gen_synthetic(): Uniform[-1, 1] inputs and labels with unit-norm rows
- load_idx(): MNIST-style IDX image/label files (optionally gzipped)
- pca_fit(), pca_project(): Projection onto top principal components
- normalize_rows(), add_input_noise(), randomize_labels(), subsample():
  Explicit preprocessing steps

Nothing here normalizes implicitly: every transformation is its own call,
so the caller decides exactly what training and the certificates see.
"""

import gzip
import logging
import struct
from pathlib import Path
from typing import Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .constants import (
    IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
    MNIST_NUM_CLASSES,
    PIXEL_SCALE,
    SEED_DATA,
)
from .errors import FormatError, InvalidArgumentError
from .models import Dataset, PcaProjection
from .utils import make_rng

logger = logging.getLogger(__name__)

IDX_UBYTE = 0x08


def normalize_rows(data: Dataset) -> Dataset:
    """Scale every nonzero row of X to unit norm; zero rows stay zero."""
    norms = np.linalg.norm(data.X, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return Dataset(data.X / safe[:, None], data.y.copy())


def gen_synthetic(n: int, d: int, seed: int = SEED_DATA) -> Dataset:
    """Random dataset with unit-norm inputs and labels in [-1, 1].

    X and y are drawn i.i.d. Uniform[-1, 1] (X first), then the rows of X are
    normalized. Labels are left as drawn.

    Raises:
        InvalidArgumentError: If n or d is below 1
    """
    if n < 1 or d < 1:
        raise InvalidArgumentError(f"n and d must be at least 1, got n={n}, d={d}")
    rng = make_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, d))
    y = rng.uniform(-1.0, 1.0, size=n)
    return normalize_rows(Dataset(X, y))


def add_input_noise(data: Dataset, std: float, seed: int) -> Dataset:
    """Add i.i.d. N(0, std^2) noise to every input coordinate."""
    if std < 0:
        raise InvalidArgumentError(f"noise std must be >= 0, got {std}")
    if std == 0:
        return Dataset(data.X.copy(), data.y.copy())
    noise = std * make_rng(seed).standard_normal(data.X.shape)
    return Dataset(data.X + noise, data.y.copy())


def randomize_labels(data: Dataset, seed: int, num_classes: int = MNIST_NUM_CLASSES) -> Dataset:
    """Replace the labels by uniform integers in {0, ..., num_classes - 1}."""
    if num_classes < 1:
        raise InvalidArgumentError(f"num_classes must be at least 1, got {num_classes}")
    labels = make_rng(seed).integers(0, num_classes, size=data.n).astype(np.float64)
    return Dataset(data.X.copy(), labels)


def subsample(data: Dataset, n: int, seed: int) -> Dataset:
    """Keep n rows chosen without replacement, in their original order."""
    if not 1 <= n <= data.n:
        raise InvalidArgumentError(f"subsample size must lie in [1, {data.n}], got {n}")
    idx = np.sort(make_rng(seed).choice(data.n, size=n, replace=False))
    return Dataset(data.X[idx], data.y[idx])


# =============================================================================
# IDX files
# =============================================================================


def _read_bytes(path: Path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _parse_idx(raw: bytes, expected_magic: int, what: str) -> NDArray[np.uint8]:
    if len(raw) < 4:
        raise FormatError(f"{what} file too short for an IDX header", offset=len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(
            f"{what} file has magic 0x{magic:08x}, expected 0x{expected_magic:08x}", offset=0
        )
    ndim = magic & 0xFF
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise FormatError(f"{what} file truncated inside its dimension header", offset=len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    size = int(np.prod(dims, dtype=np.int64))
    payload = len(raw) - header_end
    if payload != size:
        raise FormatError(
            f"{what} payload has {payload} bytes, dimensions {dims} need {size}",
            offset=header_end + min(payload, size),
        )
    if size == 0:
        return np.zeros(dims, dtype=np.uint8)
    return np.frombuffer(raw, dtype=np.uint8, offset=header_end).reshape(dims)


def load_idx(path_images: Path, path_labels: Path) -> Dataset:
    """Read an IDX image file and its label file.

    Pixels are scaled to [0, 1] and flattened to one row per image; labels
    become floats. Rows are not normalized.

    Raises:
        FormatError: On a wrong magic number, a truncated file or a count
            mismatch between the two files; the message carries a byte offset
    """
    images = _parse_idx(_read_bytes(path_images), IDX_IMAGES_MAGIC, "images")
    labels = _parse_idx(_read_bytes(path_labels), IDX_LABELS_MAGIC, "labels")
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{images.shape[0]} images but {labels.shape[0]} labels", offset=4
        )
    n = images.shape[0]
    width = int(np.prod(images.shape[1:], dtype=np.int64))
    X = images.reshape(n, width).astype(np.float64) / PIXEL_SCALE
    logger.info("loaded %d images of %d pixels from %s", n, width, path_images)
    return Dataset(X, labels.astype(np.float64))


# =============================================================================
# PCA
# =============================================================================


def pca_fit(data: Dataset, k_dims: int) -> PcaProjection:
    """Top ``k_dims`` principal directions of the centered inputs.

    The sign of each component makes its largest-magnitude coordinate
    positive.

    Raises:
        InvalidArgumentError: If k_dims is outside [1, d] or the dataset is empty
    """
    if not 1 <= k_dims <= data.d:
        raise InvalidArgumentError(f"k_dims must lie in [1, {data.d}], got {k_dims}")
    if data.n < 1:
        raise InvalidArgumentError("cannot fit PCA on an empty dataset")
    mean = data.X.mean(axis=0)
    centered = data.X - mean
    full = k_dims > min(centered.shape)
    _, s, vt = scipy.linalg.svd(centered, full_matrices=full)
    components = vt[:k_dims].copy()
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(k_dims), pivots])
    components *= np.where(signs == 0, 1.0, signs)[:, None]

    variance = np.zeros(k_dims)
    kept = min(k_dims, s.size)
    variance[:kept] = s[:kept] ** 2
    total = float(np.sum(s**2))
    ratio = variance / total if total > 0 else variance
    return PcaProjection(components=components, mean=mean, explained_variance_ratio=ratio)


def apply_pca(data: Dataset, projection: PcaProjection) -> Dataset:
    """Project centered inputs onto fitted components."""
    if projection.mean.shape != (data.d,):
        raise InvalidArgumentError("projection was fitted on a different input dimension")
    return Dataset((data.X - projection.mean) @ projection.components.T, data.y.copy())


def pca_project(data: Dataset, k_dims: int) -> Tuple[Dataset, PcaProjection]:
    """Fit PCA on ``data`` and return the projected dataset with the fit."""
    projection = pca_fit(data, k_dims)
    return apply_pca(data, projection), projection
