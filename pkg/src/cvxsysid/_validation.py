"""Shared input validation helpers."""

from __future__ import annotations

import numpy as np


def as_rng(seed) -> np.random.Generator:
    """Coerce an integer seed, SeedSequence, or Generator into a Generator."""
    return np.random.default_rng(seed)


def as_float_array(x, name: str, ndim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def as_vector(x, name: str, dim: int | None = None) -> np.ndarray:
    vec = as_float_array(x, name, ndim=1)
    if dim is not None and vec.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}, got {vec.shape[0]}")
    return vec


def as_matrix(x, name: str, shape: tuple[int, int] | None = None) -> np.ndarray:
    mat = as_float_array(x, name, ndim=2)
    if shape is not None and mat.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {mat.shape}")
    return mat


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite scalar, got {value}")
    return value


def check_unit_vector(w, name: str, tol: float = 1e-10) -> np.ndarray:
    vec = as_float_array(w, name, ndim=1)
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{name} must have unit Euclidean norm, got {norm!r}")
    return vec


def check_index(value, name: str, minimum: int = 0) -> int:
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value
