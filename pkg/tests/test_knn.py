import math

import numpy as np
import pytest

from knnids.exceptions import DimensionMismatch, NotEnoughReferencePoints
from knnids.knn import batch_total_distance, total_distance


def oracle_total_distance(q, ref, k, s, gamma):
    """Independent full-sort brute force with insertion-order tie-breaking."""
    dists = [math.dist(q, r) for r in ref]
    order = sorted(range(len(ref)), key=lambda i: (dists[i], i))
    chosen = order[k - s : k]
    return sum(dists[i] ** gamma for i in chosen), chosen


class TestTotalDistance:
    def test_query_in_reference_is_zero(self):
        ref = np.array([[0.2, 0.3], [0.5, 0.5], [0.9, 0.1]])
        L, nbrs = total_distance(ref[1], ref, k=1, s=1, gamma=1.0)
        assert L == 0.0
        assert nbrs == [1]

    def test_three_four_five_triangle(self):
        ref = np.array([[3.0, 4.0]])
        L, nbrs = total_distance(np.array([0.0, 0.0]), ref, k=1, s=1, gamma=1.0)
        assert L == pytest.approx(5.0, abs=1e-15)
        assert nbrs == [0]

    def test_matches_oracle_k4_s2_gamma2(self):
        rng = np.random.default_rng(3)
        ref = rng.uniform(0, 1, (50, 3))
        for _ in range(200):
            q = rng.uniform(0, 1, 3)
            L, nbrs = total_distance(q, ref, k=4, s=2, gamma=2.0)
            L_o, nbrs_o = oracle_total_distance(q, ref, 4, 2, 2.0)
            assert nbrs == nbrs_o
            assert L == pytest.approx(L_o, rel=1e-12)

    def test_tie_break_by_insertion_order(self):
        ref = np.array([[1.0, 0.0], [2.0, 0.0], [1.0, 0.0]])  # 0 and 2 tie
        _, nbrs = total_distance(np.zeros(2), ref, k=2, s=2, gamma=1.0)
        assert nbrs == [0, 2]

    def test_not_enough_reference_points(self):
        with pytest.raises(NotEnoughReferencePoints):
            total_distance(np.zeros(2), np.ones((2, 2)), k=3, s=1)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            total_distance(np.zeros(3), np.ones((5, 2)), k=1, s=1)

    def test_invalid_hyperparams(self):
        ref = np.ones((5, 2))
        with pytest.raises(ValueError):
            total_distance(np.zeros(2), ref, k=2, s=3)
        with pytest.raises(ValueError):
            total_distance(np.zeros(2), ref, k=1, s=1, gamma=0.0)


class TestInvariances:
    def test_reference_permutation_invariance(self):
        rng = np.random.default_rng(4)
        ref = rng.uniform(0, 1, (40, 4))
        q = rng.uniform(0, 1, 4)
        L, _ = total_distance(q, ref, k=3, s=2, gamma=1.5)
        perm = rng.permutation(40)
        L_p, _ = total_distance(q, ref[perm], k=3, s=2, gamma=1.5)
        assert L_p == pytest.approx(L, rel=1e-12)

    def test_translation_invariance(self):
        rng = np.random.default_rng(5)
        ref = rng.uniform(0, 1, (30, 3))
        q = rng.uniform(0, 1, 3)
        shift = np.array([7.0, -2.0, 3.5])
        L, nbrs = total_distance(q, ref, k=2, s=2, gamma=1.0)
        L_s, nbrs_s = total_distance(q + shift, ref + shift, k=2, s=2, gamma=1.0)
        assert nbrs_s == nbrs
        assert L_s == pytest.approx(L, rel=1e-9)

    def test_monotone_in_query_scaling(self):
        rng = np.random.default_rng(6)
        ref = rng.uniform(0, 1, (60, 2))
        centroid = ref.mean(axis=0)
        # start outside the cloud so every per-point gap grows with the scale
        direction = np.array([2.0, 1.5])
        prev = -1.0
        for scale in (1.0, 2.0, 5.0, 20.0):
            L, _ = total_distance(centroid + scale * direction, ref,
                                  k=3, s=2, gamma=1.0)
            assert L >= prev
            prev = L


class TestBatch:
    @pytest.mark.parametrize("k,s,gamma", [(1, 1, 1.0), (4, 2, 2.0), (5, 5, 0.7)])
    def test_batch_matches_single(self, k, s, gamma):
        rng = np.random.default_rng(7)
        ref = rng.uniform(0, 1, (80, 3))
        X = rng.uniform(0, 1, (300, 3))
        L_b, nbrs_b = batch_total_distance(X, ref, k=k, s=s, gamma=gamma, chunk=64)
        for i in range(X.shape[0]):
            L, nbrs = total_distance(X[i], ref, k=k, s=s, gamma=gamma)
            assert L_b[i] == L
            assert list(nbrs_b[i]) == nbrs

    def test_batch_k1_tie_break(self):
        ref = np.array([[0.5, 0.5], [0.5, 0.5], [0.9, 0.9]])
        _, nbrs = batch_total_distance(np.array([[0.5, 0.5]]), ref, k=1, s=1)
        assert nbrs[0, 0] == 0
