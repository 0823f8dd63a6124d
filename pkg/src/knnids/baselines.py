"""Comparison detectors: known-parameter Gaussian CUSUM and the total-rate
data filter.

The Gaussian CUSUM is the idealized parametric competitor: it is told the
exact pre- and post-change means and deviations and runs one univariate test
per monitored dimension, alarming when any of them crosses its threshold. The
data filter simply compares the summed rate vector against a fixed threshold
and cannot localize.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GaussianCusumSpec:
    """Per-dimension nominal (mu0, sigma0) and attack (mu1, sigma1) plus the
    shared decision threshold h_g."""

    mu0: tuple
    sigma0: tuple
    mu1: tuple
    sigma1: tuple
    h_g: float

    def __post_init__(self):
        if min(self.sigma0) <= 0 or min(self.sigma1) <= 0:
            raise ValueError("sigmas must be positive")
        lengths = {len(self.mu0), len(self.sigma0), len(self.mu1), len(self.sigma1)}
        if len(lengths) != 1:
            raise ValueError("per-dimension parameter lengths differ")


@dataclass
class GaussianCusumState:
    stats: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t: int = 0


def _llr(x, spec):
    mu0 = np.asarray(spec.mu0)
    s0 = np.asarray(spec.sigma0)
    mu1 = np.asarray(spec.mu1)
    s1 = np.asarray(spec.sigma1)
    return (np.log(s0 / s1)
            - 0.5 * ((x - mu1) / s1) ** 2
            + 0.5 * ((x - mu0) / s0) ** 2)


def gcusum_step(state: GaussianCusumState, x, spec: GaussianCusumSpec):
    """One update of the per-dimension CUSUM statistics; alarms if any
    dimension reaches h_g."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if state.stats.shape[0] != x.shape[0]:
        state.stats = np.zeros(x.shape[0])
    state.t += 1
    state.stats = np.maximum(state.stats + _llr(x, spec), 0.0)
    return bool(np.any(state.stats >= spec.h_g))


def gcusum_run(X, spec: GaussianCusumSpec):
    """Scan a (n, d) stream; returns the 1-based alarm time or None."""
    state = GaussianCusumState()
    for row in np.asarray(X, dtype=float):
        if gcusum_step(state, row, spec):
            return state.t
    return None


def data_filter(X, threshold: float):
    """Times t (1-based) where the summed rate vector reaches the threshold.

    The first entry is the detection time; there is no localization output.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    totals = np.asarray(X, dtype=float).sum(axis=1)
    return [int(t) + 1 for t in np.flatnonzero(totals >= threshold)]
