"""Exact brute-force k-nearest-neighbor total distances.

Correctness is the product here: every query is answered by an exact scan of
the reference set (no approximate index), with ties broken by reference-point
insertion order so that results are reproducible bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, NotEnoughReferencePoints


def _check(reference: np.ndarray, d: int, k: int, s: int, gamma: float):
    if reference.ndim != 2:
        raise DimensionMismatch("reference must be an (N, d) matrix")
    if reference.shape[1] != d:
        raise DimensionMismatch(
            f"query d={d} but reference d={reference.shape[1]}"
        )
    if not (1 <= s <= k):
        raise ValueError(f"need 1 <= s <= k, got s={s}, k={k}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if reference.shape[0] < k:
        raise NotEnoughReferencePoints(
            f"reference has {reference.shape[0]} points, need at least k={k}"
        )


def _select_ranked(dist2: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest points in rank order, stable under ties."""
    n = dist2.shape[0]
    if k >= n:
        cand = np.arange(n)
    else:
        part = np.argpartition(dist2, k - 1)[:k]
        # include every point tied with the k-th smallest value so that the
        # stable sort below decides the boundary, not argpartition
        dk = dist2[part].max()
        cand = np.flatnonzero(dist2 <= dk)
    order = cand[np.argsort(dist2[cand], kind="stable")]
    return order[:k]


def total_distance(x, reference, k: int = 1, s: int = 1, gamma: float = 1.0):
    """Sum of the gamma-powered Euclidean distances to neighbors k-s+1 .. k.

    Returns (L, neighbor_indices) where the indices are those of the s summed
    neighbors in rank order. The ranking itself is gamma-invariant.
    """
    q = np.asarray(x, dtype=float).reshape(-1)
    ref = np.asarray(reference, dtype=float)
    _check(ref, q.shape[0], k, s, gamma)
    dist2 = np.square(ref - q).sum(axis=1)
    ranked = _select_ranked(dist2, k)
    chosen = ranked[k - s :]
    L = float((np.sqrt(dist2[chosen]) ** gamma).sum())
    return L, [int(i) for i in chosen]


def batch_total_distance(
    X, reference, k: int = 1, s: int = 1, gamma: float = 1.0, chunk: int = 256
):
    """Vectorized total distances for an (n, d) query block.

    Returns (L, neighbors) with L shape (n,) and neighbors shape (n, s),
    neighbor columns in rank order. Ranks match total_distance exactly; L
    agrees to floating-point rounding (reduction order may differ).
    """
    Q = np.asarray(X, dtype=float)
    if Q.ndim == 1:
        Q = Q.reshape(1, -1)
    ref = np.asarray(reference, dtype=float)
    _check(ref, Q.shape[1], k, s, gamma)
    n = Q.shape[0]
    L = np.empty(n)
    neighbors = np.empty((n, s), dtype=np.intp)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        block = Q[lo:hi]
        dist2 = np.square(block[:, None, :] - ref[None, :, :]).sum(axis=2)
        if k == 1:
            # fast path; argmin picks the lowest index on ties, matching the
            # stable ranking
            idx = np.argmin(dist2, axis=1)
            neighbors[lo:hi, 0] = idx
            L[lo:hi] = np.sqrt(dist2[np.arange(hi - lo), idx]) ** gamma
        else:
            for i in range(hi - lo):
                ranked = _select_ranked(dist2[i], k)
                chosen = ranked[k - s :]
                neighbors[lo + i] = chosen
                L[lo + i] = (np.sqrt(dist2[i][chosen]) ** gamma).sum()
    return L, neighbors
