"""Lattice operations on vectors of [0, 1]^n.

Vectors are plain one-dimensional float64 numpy arrays. The helpers here
validate dimensions and the unit box; everything else in the package passes
arrays around directly.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

# Membership / invariant slack and the clamp applied to box coordinates.
TOL = 1e-9
CLAMP = 1e-12


class DimensionError(ValueError):
    pass


def as_vec01(x, n: int | None = None, *, clamp: bool = True) -> np.ndarray:
    """Return ``x`` as a float array inside the unit box.

    Coordinates outside [0, 1] by more than ``CLAMP`` raise; smaller
    excursions are clipped when ``clamp`` is set.
    """
    arr = np.array(x, dtype=float).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise DimensionError(f"expected dimension {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite coordinates")
    if arr.size and (arr.min() < -CLAMP or arr.max() > 1.0 + CLAMP):
        raise ValueError("vector leaves the unit box [0, 1]^n")
    if clamp:
        np.clip(arr, 0.0, 1.0, out=arr)
    return arr


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def psum(a, b) -> np.ndarray:
    """Coordinate-wise probabilistic sum ``1 - (1 - a)(1 - b)``."""
    a, b = _pair(a, b)
    return 1.0 - (1.0 - a) * (1.0 - b)


def hprod(a, b) -> np.ndarray:
    a, b = _pair(a, b)
    return a * b


def vee(a, b) -> np.ndarray:
    a, b = _pair(a, b)
    return np.maximum(a, b)


def wedge(a, b) -> np.ndarray:
    a, b = _pair(a, b)
    return np.minimum(a, b)


def psum_many(vectors: Iterable, n: int | None = None) -> np.ndarray:
    """Probabilistic sum of a family of vectors.

    The empty family sums to the zero vector, which needs ``n``.
    """
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    if not vecs:
        if n is None:
            raise ValueError("psum_many of an empty family needs the dimension n")
        return np.zeros(n)
    comp = np.ones_like(vecs[0])
    for v in vecs:
        if v.shape != comp.shape:
            raise DimensionError(f"dimension mismatch: {v.shape} vs {comp.shape}")
        comp = comp * (1.0 - v)
    return 1.0 - comp


def indicator(n: int, members: Sequence[int]) -> np.ndarray:
    """Characteristic vector of a subset of ``range(n)``."""
    x = np.zeros(n)
    x[list(members)] = 1.0
    return x
