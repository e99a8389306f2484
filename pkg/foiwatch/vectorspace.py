"""Embedding ingestion and the similarity / distance primitives"""
from typing import Optional, Sequence, Union

import numpy as np

from foiwatch.errors import DimensionMismatchError, NonFiniteError, ZeroNormError

ArrayLike = Union[np.ndarray, Sequence[float]]

STORAGE_DTYPE = np.float32
ACCUMULATOR_DTYPE = np.float64


def as_embedding(values: ArrayLike, dim: Optional[int] = None) -> np.ndarray:
    """
    Validates an embedding payload and returns it as a read-only float32 vector.

    Args:
        values: Sequence of feature activations
        dim: Session dimension to enforce (skipped when None)

    Returns:
        1-D float32 numpy array

    Raises:
        DimensionMismatchError: wrong shape or length
        NonFiniteError: NaN or Inf present
        ZeroNormError: all components zero
    """
    array = np.asarray(values, dtype=STORAGE_DTYPE)
    if array.ndim != 1 or array.size == 0:
        raise DimensionMismatchError(f"embedding must be a non-empty 1-D vector, got shape {array.shape}")
    if dim is not None and array.shape[0] != dim:
        raise DimensionMismatchError(f"embedding has dim {array.shape[0]}, session dim is {dim}")
    if not np.all(np.isfinite(array)):
        raise NonFiniteError("embedding contains NaN or Inf")
    if not np.any(array):
        raise ZeroNormError("embedding has zero norm")
    array.setflags(write=False)
    return array


def _pair(x: ArrayLike, y: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=ACCUMULATOR_DTYPE)
    b = np.asarray(y, dtype=ACCUMULATOR_DTYPE)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NonFiniteError("vector contains NaN or Inf")
    return a, b


def _direction(a: np.ndarray) -> np.ndarray:
    """Unit vector along `a`; dividing by the largest magnitude first keeps the norm finite and non-zero"""
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        raise ZeroNormError("cannot take the direction of a zero-norm vector")
    scaled = a / scale
    return scaled / np.linalg.norm(scaled)


def cosine_similarity(x: ArrayLike, y: ArrayLike) -> float:
    a, b = _pair(x, y)
    similarity = float(np.dot(_direction(a), _direction(b)))
    if not np.isfinite(similarity):
        raise NonFiniteError("cosine similarity is not finite")
    return min(1.0, max(-1.0, similarity))


def squared_l2_distance(x: ArrayLike, y: ArrayLike) -> float:
    a, b = _pair(x, y)
    diff = a - b
    return float(np.dot(diff, diff))


def l2_normalize(x: ArrayLike) -> np.ndarray:
    a = np.asarray(x, dtype=ACCUMULATOR_DTYPE)
    if a.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("vector contains NaN or Inf")
    return _direction(a)
