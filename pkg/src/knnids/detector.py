"""Training phase and sequential test phase of the kNN-distance detector.

Training computes total kNN distances for one partition half against the
other, takes the (1-alpha) percentile as the nominal baseline, and records the
largest observed exceedance as the evidence bound. The test phase accumulates
per-observation anomaly evidence in a CUSUM-like statistic floored at zero and
alarms when it crosses the decision threshold h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import core
from .core import DataInstance, NormalizationBounds, Partition
from .exceptions import DimensionMismatch, InsufficientData
from .knn import batch_total_distance, total_distance


@dataclass(frozen=True)
class Hyperparams:
    """Detector knobs: neighbor count k, summed neighbors s, distance exponent
    gamma, training significance level alpha, decision threshold h."""

    k: int = 1
    s: int = 1
    gamma: float = 1.0
    alpha: float = 0.05
    h: float | None = None

    def __post_init__(self):
        if not (1 <= self.s <= self.k):
            raise ValueError(f"need 1 <= s <= k, got s={self.s}, k={self.k}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.h is not None and self.h <= 0:
            raise ValueError("h must be positive")


@dataclass(frozen=True)
class TrainedModel:
    """Immutable product of the training phase.

    reference is the normalized second partition half; baseline_LM the M-th
    smallest total distance over the first half; evidence_bound_phi the
    largest (L_i)^d - (L_M)^d seen in training.
    """

    reference: np.ndarray
    baseline_LM: float
    evidence_bound_phi: float
    bounds: NormalizationBounds
    params: Hyperparams
    d: int
    M: int
    calibration: "object | None" = None

    def with_threshold(self, h: float, calibration=None) -> "TrainedModel":
        params = Hyperparams(
            k=self.params.k, s=self.params.s, gamma=self.params.gamma,
            alpha=self.params.alpha, h=h,
        )
        return TrainedModel(
            reference=self.reference, baseline_LM=self.baseline_LM,
            evidence_bound_phi=self.evidence_bound_phi, bounds=self.bounds,
            params=params, d=self.d, M=self.M,
            calibration=calibration if calibration is not None else self.calibration,
        )


@dataclass
class DetectorState:
    """Mutable per-stream sequential state; one logical writer per stream."""

    s_stat: float = 0.0
    t: int = 0
    q: int = 0
    evidence_log: list = field(default_factory=list)


@dataclass(frozen=True)
class DetectionReport:
    """Alarm outcome: detection time T, onset estimate q, trailing evidence."""

    alarm_time_T: int
    onset_q: int
    final_stat: float
    evidence_window: tuple
    source_id: str = ""


def train(part: Partition, params: Hyperparams, bounds: NormalizationBounds | None = None) -> TrainedModel:
    """Training phase over a partition; bounds default to the full-set min/max."""
    if bounds is None:
        bounds = core.fit_bounds(np.vstack([part.set1, part.set2]))
    set1 = core.normalize(part.set1, bounds)
    set2 = core.normalize(part.set2, bounds)
    n1 = set1.shape[0]
    d = set1.shape[1]
    M = int(np.floor(n1 * (1.0 - params.alpha)))
    if M < 1:
        raise InsufficientData(
            f"floor(N1*(1-alpha)) = {M}; need N1*(1-alpha) >= 1 (N1={n1})"
        )
    L, _ = batch_total_distance(set1, set2, k=params.k, s=params.s, gamma=params.gamma)
    L_sorted = np.sort(L, kind="stable")
    baseline = float(L_sorted[M - 1])
    phi = float(np.max(L**d) - baseline**d)
    return TrainedModel(
        reference=set2, baseline_LM=baseline, evidence_bound_phi=phi,
        bounds=bounds, params=params, d=d, M=M,
    )


def evidence(x, model: TrainedModel):
    """Anomaly evidence D = (L_t)^d - (L_M)^d and per-dimension contributions.

    x must already be normalized with model.bounds. Contributions are summed
    squared coordinate differences over the s selected neighbors regardless of
    gamma; the neighbor ranking itself is gamma-invariant.
    """
    q = np.asarray(x.values if isinstance(x, DataInstance) else x, dtype=float).reshape(-1)
    p = model.params
    L, neighbors = total_distance(q, model.reference, k=p.k, s=p.s, gamma=p.gamma)
    diffs = q - model.reference[neighbors]
    per_dim = np.square(diffs).sum(axis=0)
    D = L**model.d - model.baseline_LM**model.d
    return float(D), per_dim


def evidence_batch(X_norm, model: TrainedModel):
    """Vectorized evidence for an (n, d) block of normalized observations."""
    X_norm = np.asarray(X_norm, dtype=float)
    p = model.params
    L, neighbors = batch_total_distance(
        X_norm, model.reference, k=p.k, s=p.s, gamma=p.gamma
    )
    diffs = X_norm[:, None, :] - model.reference[neighbors]
    per_dim = np.square(diffs).sum(axis=1)
    D = L**model.d - model.baseline_LM**model.d
    return D, per_dim


def step(state: DetectorState, D: float, per_dim, h: float) -> bool:
    """One sequential update; mutates state, returns whether the alarm fired."""
    state.t += 1
    state.s_stat = max(state.s_stat + D, 0.0)
    if state.s_stat == 0.0:
        state.q = state.t
    state.evidence_log.append((state.t, float(D), np.asarray(per_dim, dtype=float)))
    return state.s_stat >= h


def run_stream(stream, model: TrainedModel, h: float | None = None,
               source_id: str = "", collect_evidence: bool = True):
    """Normalize, score and accumulate until an alarm or end of stream.

    Returns a DetectionReport on alarm, None if the stream ends clean. Raises
    per-instance errors annotated with the offending time index.
    """
    if h is None:
        h = model.params.h
    if h is None or h <= 0:
        raise ValueError("decision threshold h not set; calibrate or pass h")
    if len(stream) > 0 and isinstance(stream[0], DataInstance):
        raw = core.as_matrix(stream)
        sid = source_id or stream[0].source_id
    else:
        raw = core.as_matrix(stream)
        sid = source_id
    if raw.shape[1] != model.d:
        raise DimensionMismatch(f"stream d={raw.shape[1]}, model d={model.d}")
    X = core.normalize(raw, model.bounds)
    state = DetectorState()
    block = 256
    for lo in range(0, X.shape[0], block):
        D_blk, per_dim_blk = evidence_batch(X[lo : lo + block], model)
        for D, per_dim in zip(D_blk, per_dim_blk):
            if step(state, float(D), per_dim if collect_evidence else (), h):
                window = tuple(
                    entry for entry in state.evidence_log if state.q < entry[0] <= state.t
                )
                return DetectionReport(
                    alarm_time_T=state.t, onset_q=state.q,
                    final_stat=state.s_stat, evidence_window=window,
                    source_id=sid,
                )
        if not collect_evidence:
            state.evidence_log.clear()
    return None


def fit(data, params: Hyperparams, ratio: float = 1.0 / 3.0, seed: int = 0) -> TrainedModel:
    """Convenience pipeline: full-set bounds, seeded partition, train."""
    mat = core.as_matrix(data)
    bounds = core.fit_bounds(mat)
    part = core.partition(mat, ratio=ratio, seed=seed)
    return train(part, params, bounds=bounds)


class SequentialKnnDetector(BaseEstimator):
    """Estimator-style front end so the detector composes with the wider
    ecosystem: fit on a nominal training matrix, then score new observations
    or scan a stream sequentially.
    """

    def __init__(self, k=1, s=1, gamma=1.0, alpha=0.05, h=None,
                 partition_ratio=1.0 / 3.0, random_state=0):
        self.k = k
        self.s = s
        self.gamma = gamma
        self.alpha = alpha
        self.h = h
        self.partition_ratio = partition_ratio
        self.random_state = random_state

    def fit(self, X, y=None):
        params = Hyperparams(k=self.k, s=self.s, gamma=self.gamma,
                             alpha=self.alpha, h=self.h)
        self.model_ = fit(X, params, ratio=self.partition_ratio,
                          seed=self.random_state)
        return self

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before scoring")

    def decision_function(self, X):
        """Anomaly evidence per row; positive means farther than the baseline."""
        self._require_fitted()
        Xn = core.normalize(core.as_matrix(X), self.model_.bounds)
        D, _ = evidence_batch(Xn, self.model_)
        return D

    def score_samples(self, X):
        """Negated evidence: higher means more nominal."""
        return -self.decision_function(X)

    def calibrate_threshold(self, beta):
        """Set h from the asymptotic false-alarm bound for target rate beta."""
        self._require_fitted()
        from .calibrate import threshold_for_far

        cal = threshold_for_far(self.model_, beta)
        self.model_ = self.model_.with_threshold(cal.h, calibration=cal)
        self.h = cal.h
        return cal

    def predict_stream(self, X, h=None, source_id=""):
        """Sequential scan; returns a DetectionReport or None."""
        self._require_fitted()
        return run_stream(X, self.model_, h=h if h is not None else self.h,
                          source_id=source_id)
