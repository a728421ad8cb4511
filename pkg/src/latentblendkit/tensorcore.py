"""Minimal dense array types plus the handful of kernels everything else uses.

All values are float64 and immutable once constructed: the wrapped arrays
are defensive copies with the writeable flag cleared, so instances are safe
to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidShape, ZeroVector

DEFAULT_EPS_STD = 1e-5


def _frozen_f64(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, order="C")
    if arr.ndim != ndim:
        raise InvalidShape(f"{what} must be {ndim}-D, got shape {arr.shape}")
    if arr.size == 0 or min(arr.shape) < 1:
        raise InvalidShape(f"{what} must be non-empty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidShape(f"{what} contains NaN or Inf entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LatentVector:
    """A 1-D latent/embedding vector (style vector, image embedding, ...)."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_f64(self.data, 1, "LatentVector"))

    @property
    def d_z(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class FeatureMap:
    """A (channels x positions) activation map."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_f64(self.data, 2, "FeatureMap"))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def positions(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Matrix:
    """A dense (rows x cols) matrix; houses token stacks such as Q, K, V."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_f64(self.data, 2, "Matrix"))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel population mean and (floored) standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen_f64(self.mean, 1, "ChannelStats.mean"))
        object.__setattr__(self, "std", _frozen_f64(self.std, 1, "ChannelStats.std"))
        if self.mean.shape != self.std.shape:
            raise DimensionMismatch(
                f"mean/std length mismatch: {self.mean.shape[0]} vs {self.std.shape[0]}"
            )


def dot(a: LatentVector, b: LatentVector) -> float:
    """Inner product a . b; symmetric, requires equal dimension."""
    if a.d_z != b.d_z:
        raise DimensionMismatch(f"dot: dimensions differ ({a.d_z} vs {b.d_z})")
    return float(np.dot(a.data, b.data))


def norm(a: LatentVector) -> float:
    """Euclidean norm sqrt(a . a)."""
    return float(np.linalg.norm(a.data))


def channel_stats(f: FeatureMap, eps_std: float = DEFAULT_EPS_STD) -> ChannelStats:
    """Population mean/std per channel, std floored at ``eps_std``.

    The floor keeps downstream divisions well-defined on constant channels.
    """
    if not eps_std > 0:
        raise InvalidShape(f"eps_std must be > 0, got {eps_std}")
    mean = f.data.mean(axis=1)
    std = f.data.std(axis=1)  # population: divide by N
    std = np.maximum(std, eps_std)
    return ChannelStats(mean=mean, std=std)


def softmax_rows(m: Matrix) -> Matrix:
    """Row-wise softmax with max-subtraction for overflow safety."""
    return Matrix(_softmax_rows_array(m.data))


def _softmax_rows_array(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _row_matmul(a: np.ndarray, b_t: np.ndarray) -> np.ndarray:
    """a @ b_t.T via einsum.

    einsum (without ``optimize``) runs a fixed-order single-threaded loop,
    so results are bit-identical regardless of BLAS thread settings; all
    matrices here are desk-scale, so the performance cost is irrelevant.
    """
    return np.einsum("id,jd->ij", a, b_t)


def _weighted_rows(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """weights @ values with the same fixed-order guarantee as _row_matmul."""
    return np.einsum("ij,jv->iv", weights, values)


def unit(i: int, d: int) -> LatentVector:
    """Standard basis vector e_i in R^d (convenience for fixtures and CLIs)."""
    if not 0 <= i < d:
        raise InvalidShape(f"basis index {i} outside dimension {d}")
    v = np.zeros(d)
    v[i] = 1.0
    return LatentVector(v)


def angle_between(a: LatentVector, b: LatentVector) -> float:
    """Angle in [0, pi] between the directions of two nonzero vectors."""
    na = norm(a)
    nb = norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("angle undefined for a zero-norm vector")
    c = dot(a, b) / (na * nb)
    return math.acos(min(1.0, max(-1.0, c)))
