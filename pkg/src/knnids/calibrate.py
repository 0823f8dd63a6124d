"""Closed-form decision-threshold selection from a target false alarm rate.

The nominal anomaly evidence is modeled asymptotically as a (shifted)
exponential supported on [-(L_M)^d, phi]. The positive root omega0 of the
moment condition E[exp(omega0 * D)] = 1 under that model converts a false
alarm target beta into the threshold h = -ln(beta) / omega0.

The closed form involves the Lambert-W function; the defining equation
exp(phi * x) = a0 * (x + theta) always admits the trivial root x = 0
(omega0 = v_d), so both W branches are evaluated and the trivial candidate is
discarded. The surviving candidate is then refined against the model's moment
integral so that the defining condition holds to solver precision rather than
only asymptotically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.optimize import brentq

from .exceptions import (
    ConvergenceError,
    DegenerateTrivialOnly,
    NoPositiveRoot,
    OutOfDomain,
)

_BRANCH_POINT = -1.0 / math.e


def lebesgue_constant(d: int) -> float:
    """Volume of the d-dimensional unit ball: pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def lambert_w(x: float, branch: str = "principal", tol: float = 1e-14,
              max_iter: int = 100) -> float:
    """Solve w * exp(w) = x by Halley iteration on the requested branch.

    principal: x >= -1/e, w >= -1. minus_one: -1/e <= x < 0, w <= -1.
    """
    if branch not in ("principal", "minus_one"):
        raise ValueError(f"unknown branch {branch!r}")
    if x < _BRANCH_POINT - 1e-300:
        # tolerate rounding right at the branch point
        if x < _BRANCH_POINT * (1 + 1e-12):
            raise OutOfDomain(f"x={x} below -1/e")
    if branch == "minus_one" and x >= 0:
        raise OutOfDomain(f"minus_one branch needs x < 0, got {x}")
    x = max(x, _BRANCH_POINT)

    p2 = 2.0 * (math.e * x + 1.0)
    if p2 <= 0.0:
        return -1.0
    p = math.sqrt(p2)
    if p < 1e-4:
        # so close to the branch point that Halley steps stall against the
        # branch clamp; the series is accurate to O(p^4) ~ 1e-16 here
        series = p - p * p / 3.0 + 11.0 / 72.0 * p**3
        return -1.0 + series if branch == "principal" else -1.0 - series
    if branch == "principal":
        if x > math.e:
            lx = math.log(x)
            w = lx - math.log(lx)
        elif p < 0.5:
            # series around the branch point
            w = -1.0 + p - p * p / 3.0
        else:
            w = x * math.exp(-x) if abs(x) < 0.5 else math.log1p(x)
    else:
        if x > -1e-300:
            raise OutOfDomain("minus_one branch needs x < 0")
        if p < 0.5:
            w = -1.0 - p - p * p / 3.0
        else:
            l1 = math.log(-x)
            w = l1 - math.log(-l1)

    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            return w
        if abs(w + 1.0) < 1e-12:
            # Halley step degenerates at the branch point; nudge off it
            w += 1e-8 if branch == "principal" else -1e-8
            continue
        denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0)
        dw = f / denom
        w_new = w - dw
        if branch == "principal":
            w_new = max(w_new, -1.0)
        else:
            w_new = min(w_new, -1.0)
        if abs(w_new - w) <= tol * (1.0 + abs(w_new)):
            return w_new
        w = w_new
    raise ConvergenceError(f"lambert_w({x}, {branch}) failed to converge")


@dataclass(frozen=True)
class Calibration:
    """Threshold calibration for a target false alarm rate beta."""

    beta: float
    v_d: float
    theta: float
    phi: float
    omega0: float
    h: float


def moment_integral(omega: float, v_d: float, lm_d: float, phi: float) -> float:
    """E[exp(omega * D)] under the asymptotic exponential evidence model.

    Closed-form antiderivative of the model density theta * exp(-v_d * y) over
    the support [-lm_d, phi].
    """
    theta = v_d * math.exp(-v_d * lm_d)
    x = omega - v_d
    if abs(x) * max(phi, lm_d) < 1e-12:
        width = phi + lm_d
        return theta * (width + x * (phi * phi - lm_d * lm_d) / 2.0)
    return theta * (math.exp(x * phi) - math.exp(-x * lm_d)) / x


def solve_omega0(model, refine: bool = True) -> float:
    """Positive non-trivial root of the moment condition for the model.

    Evaluates both Lambert-W branches of the closed form, discards the
    trivial root omega0 = v_d, and (by default) refines the survivor so the
    moment integral equals one to solver precision.
    """
    p = model.params
    if not (p.k == 1 and p.s == 1 and p.gamma == 1.0):
        warnings.warn(
            "threshold calibration is derived for k=s=1, gamma=1; "
            f"got k={p.k}, s={p.s}, gamma={p.gamma}",
            stacklevel=2,
        )
    d = model.d
    phi = model.evidence_bound_phi
    if phi <= 0:
        raise NoPositiveRoot("evidence bound phi must be positive")
    v_d = lebesgue_constant(d)
    lm_d = model.baseline_LM**d
    theta = v_d * math.exp(-v_d * lm_d)
    pt = phi * theta
    arg = -pt * math.exp(-pt)

    candidates = []
    for branch in ("principal", "minus_one"):
        try:
            w = lambert_w(arg, branch)
        except OutOfDomain:
            continue
        omega = v_d - theta - w / phi
        trivial = abs(omega - v_d) <= 1e-9 * max(1.0, v_d)
        if not trivial:
            candidates.append(omega)
    if not candidates:
        raise DegenerateTrivialOnly(
            f"both branches give the trivial root omega0 = v_d (phi*theta = {pt})"
        )
    positive = [c for c in candidates if c > 0]
    if not positive:
        raise NoPositiveRoot(
            f"non-trivial root is not positive (candidates: {candidates}); "
            "training data too sparse for the asymptotic threshold"
        )
    omega = positive[0]
    if not refine:
        return omega

    def residual(om):
        return moment_integral(om, v_d, lm_d, phi) - 1.0

    lo, hi = omega, omega
    r0 = residual(omega)
    for _ in range(200):
        if r0 > 0:
            lo = lo / 1.05
            if residual(lo) < 0:
                return brentq(residual, lo, hi, xtol=1e-12 * omega, rtol=1e-15)
            hi = lo
        else:
            hi = hi * 1.05
            if residual(hi) > 0:
                return brentq(residual, lo, hi, xtol=1e-12 * omega, rtol=1e-15)
            lo = hi
    raise ConvergenceError("failed to bracket the moment-integral root")


def threshold_for_far(model, beta: float, refine: bool = True) -> Calibration:
    """Full calibration: h = -ln(beta) / omega0 for the false alarm target."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    omega = solve_omega0(model, refine=refine)
    v_d = lebesgue_constant(model.d)
    theta = v_d * math.exp(-v_d * model.baseline_LM**model.d)
    h = -math.log(beta) / omega
    return Calibration(beta=beta, v_d=v_d, theta=theta,
                       phi=model.evidence_bound_phi, omega0=omega, h=h)


def validate_moment_condition(model, omega0: float, sampler, n_samples: int = 50000,
                              seed: int = 0) -> float:
    """Monte Carlo estimate of E[exp(omega0 * D)] under fresh nominal data.

    sampler(n, rng) must return an (n, d) array of raw-unit nominal draws from
    the model's training distribution.
    """
    import numpy as np

    from . import core
    from .detector import evidence_batch

    rng = np.random.default_rng(seed)
    raw = np.asarray(sampler(n_samples, rng), dtype=float)
    X = core.normalize(raw, model.bounds)
    D, _ = evidence_batch(X, model)
    return float(np.exp(omega0 * D).mean())
