"""Post-detection identification of the attacked dimensions.

After an alarm, the per-dimension squared-distance contributions logged over
the window (q, T] are averaged; dimensions whose average meets the threshold
lambda are declared under attack. For DDoS streams the dimensions are road
segments, so a flagged dimension is a flagged segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import DetectionReport
from .exceptions import EmptyWindow


@dataclass(frozen=True)
class LocalizationReport:
    """Mean per-dimension contributions over (q, T] and the flagged set."""

    mean_contributions: tuple
    lam: float
    flagged: tuple
    window: tuple
    source_id: str = ""


def localize(report: DetectionReport, lam: float) -> LocalizationReport:
    """Average the logged contributions over (q, T] and threshold at lambda."""
    if not report.evidence_window:
        raise EmptyWindow(f"empty window (q={report.onset_q}, T={report.alarm_time_T}]")
    contribs = np.array([entry[2] for entry in report.evidence_window], dtype=float)
    mean = contribs.mean(axis=0)
    flagged = tuple(int(n) for n in np.flatnonzero(mean >= lam))
    return LocalizationReport(
        mean_contributions=tuple(float(v) for v in mean),
        lam=float(lam), flagged=flagged,
        window=(report.onset_q, report.alarm_time_T),
        source_id=report.source_id,
    )


def nominal_contribution_quantile(model, nominal_stream, q: float = 0.99) -> float:
    """Lambda pick: a high quantile of per-dimension contributions on held-out
    nominal data. The paper-style alternative of tuning lambda against a false
    positive constraint is available through roc_sweep.
    """
    from . import core
    from .detector import evidence_batch

    X = core.normalize(core.as_matrix(nominal_stream), model.bounds)
    _, per_dim = evidence_batch(X, model)
    return float(np.quantile(per_dim, q))


def roc_sweep(reports, lambdas):
    """Aggregate localization ROC over (report, ground_truth_dims) pairs.

    For each lambda: TPR is the flagged fraction of truly attacked dimensions,
    FPR the flagged fraction of clean dimensions, pooled over all reports.
    """
    points = []
    for lam in lambdas:
        tp = fn = fp = tn = 0
        for report, truth_dims in reports:
            d = len(report.evidence_window[0][2])
            truth = set(truth_dims)
            flagged = set(localize(report, lam).flagged)
            tp += len(flagged & truth)
            fn += len(truth - flagged)
            fp += len(flagged - truth)
            tn += d - len(truth) - len(flagged - truth)
        tpr = tp / (tp + fn) if tp + fn else 0.0
        fpr = fp / (fp + tn) if fp + tn else 0.0
        points.append((float(lam), tpr, fpr))
    return points
