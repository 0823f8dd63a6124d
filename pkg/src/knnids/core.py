"""Domain types, min-max normalization and training-set partitioning.

Observations are d-dimensional real vectors. A :class:`DataInstance` wraps one
observation together with its time index and the stream it came from; the
numeric operations below accept either instances or plain (n, d) arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateDimension, DimensionMismatch, InsufficientData


@dataclass(frozen=True)
class DataInstance:
    """One observation: a vehicle beacon's numeric fields, or per-segment rates."""

    values: tuple
    t: int = 0
    source_id: str = ""

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 1:
            raise DimensionMismatch("instance must have at least one dimension")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite value in instance at t={self.t}")
        if self.t < 0:
            raise ValueError("time index must be non-negative")
        object.__setattr__(self, "values", vals)

    @property
    def d(self):
        return len(self.values)


def as_matrix(data) -> np.ndarray:
    """Coerce a list of DataInstance or array-like to a float (n, d) matrix."""
    if isinstance(data, np.ndarray):
        mat = np.asarray(data, dtype=float)
    elif len(data) > 0 and isinstance(data[0], DataInstance):
        d = data[0].d
        if any(inst.d != d for inst in data):
            raise DimensionMismatch("instances have inconsistent dimensions")
        mat = np.array([inst.values for inst in data], dtype=float)
    else:
        mat = np.asarray(data, dtype=float)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    if mat.ndim != 2:
        raise DimensionMismatch(f"expected 2-d data, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("non-finite value in data")
    return mat


@dataclass(frozen=True)
class NormalizationBounds:
    """Per-dimension training min/max used to map raw values into [0, 1]."""

    mins: tuple
    maxs: tuple

    def __post_init__(self):
        mins = tuple(float(v) for v in self.mins)
        maxs = tuple(float(v) for v in self.maxs)
        if len(mins) != len(maxs):
            raise DimensionMismatch("mins and maxs lengths differ")
        for n, (lo, hi) in enumerate(zip(mins, maxs)):
            if not lo < hi:
                raise DegenerateDimension(f"dimension {n}: min == max == {lo}")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def d(self):
        return len(self.mins)


@dataclass(frozen=True)
class Partition:
    """Random split of the training set into a query part and a reference part.

    set1 (size N1) supplies the points whose total distances define the
    baseline; set2 (size N2 > N1 by default) is the reference set.
    """

    set1: np.ndarray
    set2: np.ndarray
    seed: int

    @property
    def n1(self):
        return self.set1.shape[0]

    @property
    def n2(self):
        return self.set2.shape[0]


def fit_bounds(training) -> NormalizationBounds:
    """Per-dimension min/max over the training data.

    Raises DegenerateDimension if any dimension is constant.
    """
    mat = as_matrix(training)
    if mat.shape[0] == 0:
        raise InsufficientData("empty training set")
    return NormalizationBounds(mins=tuple(mat.min(axis=0)), maxs=tuple(mat.max(axis=0)))


def normalize(x, bounds: NormalizationBounds):
    """Map values through (v - min) / (max - min) per dimension.

    Values outside the training range are not clamped; distances growing past
    [0, 1] are exactly the anomaly signal.
    """
    mins = np.asarray(bounds.mins)
    span = np.asarray(bounds.maxs) - mins
    if isinstance(x, DataInstance):
        if x.d != bounds.d:
            raise DimensionMismatch(f"instance d={x.d}, bounds d={bounds.d}")
        vals = (np.asarray(x.values) - mins) / span
        return DataInstance(values=tuple(vals), t=x.t, source_id=x.source_id)
    mat = as_matrix(x)
    if mat.shape[1] != bounds.d:
        raise DimensionMismatch(f"data d={mat.shape[1]}, bounds d={bounds.d}")
    return (mat - mins) / span


def partition(data, ratio: float = 1.0 / 3.0, seed: int = 0) -> Partition:
    """Seeded uniform split; set1 receives floor(ratio * N) points.

    Deterministic for a given (data, ratio, seed) triple.
    """
    mat = as_matrix(data)
    n = mat.shape[0]
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n1 = int(np.floor(ratio * n))
    if n < 2 or n1 < 1 or n - n1 < 1:
        raise InsufficientData(f"cannot split N={n} with ratio={ratio}")
    rng = np.random.default_rng(np.uint64(seed))
    order = rng.permutation(n)
    return Partition(set1=mat[order[:n1]], set2=mat[order[n1:]], seed=int(seed))
