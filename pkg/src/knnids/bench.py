"""Experiment harness: methods x scenarios over seeded trials.

Measures average detection delay inside the attack window, per-window false
alarm fraction on attack-free twins, and localization ROC tables, then emits
plot-ready CSV. Per-trial seeds are derived from the master seed by hashing
(run name, trial index), so trial order never affects aggregates.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace

import numpy as np

from . import detector, streams
from .baselines import GaussianCusumSpec, data_filter, gcusum_run
from .exceptions import ConfigError
from .localize import roc_sweep


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 63-bit seed from the master seed and a label path."""
    text = ":".join([str(int(master_seed))] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class BenchResult:
    """Aggregates for one (method, scenario, threshold) cell."""

    method: str
    scenario: str
    threshold: float
    trials: int
    avg_detection_delay: float
    miss_rate: float
    empirical_far: float
    far_bound: float
    roc_points: tuple = ()


# --------------------------------------------------------------------------
# config parsing


def _generator_from_dict(g: dict):
    kind = g.get("type")
    if kind == "uniform_box":
        return streams.UniformBox(low=g.get("low", 0.0), high=g.get("high", 1.0))
    if kind == "gaussian_mixture":
        comps = tuple(
            (float(w), tuple(means), tuple(stds)) for w, means, stds in g["components"]
        )
        return streams.GaussianMixture(components=comps)
    if kind == "negative_binomial_rates":
        return streams.NegativeBinomialRates(r=tuple(g["r"]), p=tuple(g["p"]))
    if kind == "gaussian_rates":
        return streams.GaussianRates(mean=tuple(g["mean"]), std=tuple(g["std"]))
    raise ConfigError(f"unknown generator type {kind!r}")


def scenario_from_dict(s: dict, seed: int = 0) -> streams.ScenarioSpec:
    attack = None
    if s.get("attack"):
        a = s["attack"]
        attack = streams.AttackSpec(
            kind=a["kind"], target_dims=tuple(a["target_dims"]),
            window=tuple(a["window"]), magnitude=float(a["magnitude"]),
        )
    spec = streams.ScenarioSpec(
        generator=_generator_from_dict(s["generator"]),
        d=int(s["d"]), horizon=int(s["horizon"]),
        attack=attack, seed=int(s.get("seed", seed)),
    )
    spec.validate()
    return spec


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# per-window statistics for threshold matching


def knn_window_max_stat(X, model):
    """Maximum of the CUSUM statistic over one nominal window."""
    from . import core

    Xn = core.normalize(core.as_matrix(X), model.bounds)
    D, _ = detector.evidence_batch(Xn, model)
    s = 0.0
    peak = 0.0
    for Dt in D:
        s = max(s + Dt, 0.0)
        peak = max(peak, s)
    return peak


def gcusum_window_max_stat(X, spec: GaussianCusumSpec):
    from .baselines import GaussianCusumState, gcusum_step

    state = GaussianCusumState()
    peak = 0.0
    big = replace(spec, h_g=float("inf"))
    for row in np.asarray(X, dtype=float):
        gcusum_step(state, row, big)
        peak = max(peak, float(state.stats.max()))
    return peak


def filter_window_max_stat(X):
    return float(np.asarray(X, dtype=float).sum(axis=1).max())


def threshold_for_window_far(window_stats, far_target: float) -> float:
    """Threshold whose empirical per-window alarm fraction is far_target:
    the (1 - far_target) quantile of the nominal window maxima, nudged up so
    ties do not overshoot the target."""
    stats = np.sort(np.asarray(window_stats, dtype=float))
    k = int(np.ceil((1.0 - far_target) * stats.size))
    k = min(k, stats.size - 1)
    return float(np.nextafter(stats[k], np.inf))


def gcusum_spec_for_rate_attack(generator, magnitude: float, d: int,
                                h_g: float) -> GaussianCusumSpec:
    """Idealized single-Gaussian CUSUM that knows the attack magnitude.

    Univariate per segment: every dimension tests nominal moments against the
    same hypothesized mean increase, since the attacked segments are unknown.
    """
    mu0 = np.asarray(generator.means(d), dtype=float)
    if isinstance(generator, streams.NegativeBinomialRates):
        r = np.asarray(generator.r, dtype=float)
        p = np.asarray(generator.p, dtype=float)
        var0 = r * (1.0 - p) / p**2
    elif isinstance(generator, streams.GaussianRates):
        var0 = np.asarray(generator.std, dtype=float) ** 2
    else:
        raise ConfigError("gcusum baseline needs a rate generator")
    extra_mean = magnitude * mu0
    extra_var = (2.0 * extra_mean) ** 2 / 12.0
    return GaussianCusumSpec(
        mu0=tuple(mu0), sigma0=tuple(np.sqrt(var0)),
        mu1=tuple(mu0 + extra_mean), sigma1=tuple(np.sqrt(var0 + extra_var)),
        h_g=h_g,
    )


# --------------------------------------------------------------------------
# trial execution


def _alarm_time(method, X, threshold, model=None, gspec=None):
    if method == "knn":
        report = detector.run_stream(X, model, h=threshold, collect_evidence=True)
        return (None, None) if report is None else (report.alarm_time_T, report)
    if method == "gcusum":
        t = gcusum_run(X, replace(gspec, h_g=threshold))
        return t, None
    if method == "data_filter":
        times = data_filter(X, threshold)
        return (times[0] if times else None), None
    raise ConfigError(f"unknown method {method!r}")


def run_cell(method, scenario_dict, threshold, trials, master_seed, run_name,
             model=None, gspec=None, far_window=200, far_trials=None,
             lambdas=(), far_bound=float("nan")):
    """One (method, scenario, threshold) aggregate."""
    far_trials = trials if far_trials is None else far_trials
    delays = []
    misses = 0
    localization = []
    attacked = scenario_dict.get("attack") is not None
    if attacked:
        start, end = scenario_dict["attack"]["window"]
        grace = end - start + 1
        truth_dims = tuple(scenario_dict["attack"]["target_dims"])
        for trial in range(trials):
            spec = scenario_from_dict(
                scenario_dict, seed=derive_seed(master_seed, run_name, "atk", trial)
            )
            spec = replace(spec, seed=derive_seed(master_seed, run_name, "atk", trial))
            X, _ = streams.generate(spec)
            T, report = _alarm_time(method, X, threshold, model=model, gspec=gspec)
            if T is None or T > end + grace:
                misses += 1
            elif T < start:
                misses += 1  # early alarm inside an attack trial: not a detection
            else:
                delays.append(T - start)
                if report is not None and lambdas:
                    localization.append((report, truth_dims))
    fa = 0
    clean = dict(scenario_dict, attack=None, horizon=far_window)
    for trial in range(far_trials):
        spec = scenario_from_dict(
            clean, seed=derive_seed(master_seed, run_name, "far", trial)
        )
        X, _ = streams.generate(spec)
        T, _ = _alarm_time(method, X, threshold, model=model, gspec=gspec)
        if T is not None:
            fa += 1
    roc = tuple(roc_sweep(localization, lambdas)) if localization else ()
    return BenchResult(
        method=method, scenario=run_name, threshold=float(threshold),
        trials=trials,
        avg_detection_delay=float(np.mean(delays)) if delays else float("nan"),
        miss_rate=misses / trials if trials else 0.0,
        empirical_far=fa / far_trials if far_trials else 0.0,
        far_bound=far_bound, roc_points=roc,
    )


def run_bench(config: dict):
    """Execute every run in a declarative config; see README for the schema."""
    for key in ("master_seed", "scenarios", "runs"):
        if key not in config:
            raise ConfigError(f"config missing required key {key!r}")
    master = int(config["master_seed"])
    far_window = int(config.get("far_window", 200))
    scenarios = config["scenarios"]
    models = {}
    for name, mspec in config.get("models", {}).items():
        models[name] = _train_model(mspec, scenarios, master, name)
    results = []
    for run in config["runs"]:
        name = run.get("name") or f"{run['method']}_{run['scenario']}"
        if run["scenario"] not in scenarios:
            raise ConfigError(f"run {name!r}: unknown scenario {run['scenario']!r}")
        sdict = scenarios[run["scenario"]]
        method = run["method"]
        model = gspec = None
        far_bound = float("nan")
        if method == "knn":
            model = models[run["model"]]
            if model.calibration is not None:
                cal = model.calibration
                far_bound = float(np.exp(-cal.omega0 * cal.h))
        elif method == "gcusum":
            g = scenario_from_dict(sdict).generator
            magnitude = sdict["attack"]["magnitude"] if sdict.get("attack") else 0.0
            gspec = gcusum_spec_for_rate_attack(g, magnitude, sdict["d"], h_g=1.0)
        for threshold in run["threshold_grid"]:
            results.append(run_cell(
                method, sdict, threshold, int(run.get("trials", 100)),
                master, name, model=model, gspec=gspec,
                far_window=far_window,
                far_trials=run.get("far_trials"),
                lambdas=tuple(run.get("lambdas", ())),
                far_bound=far_bound,
            ))
    return results


def _train_model(mspec: dict, scenarios: dict, master: int, name: str):
    from .calibrate import threshold_for_far

    if mspec["scenario"] not in scenarios:
        raise ConfigError(f"model {name!r}: unknown scenario {mspec['scenario']!r}")
    sdict = dict(scenarios[mspec["scenario"]], attack=None,
                 horizon=int(mspec["n_train"]))
    spec = scenario_from_dict(sdict, seed=derive_seed(master, "train", name))
    spec = replace(spec, seed=derive_seed(master, "train", name))
    X, _ = streams.generate(spec)
    params = detector.Hyperparams(
        k=int(mspec.get("k", 1)), s=int(mspec.get("s", 1)),
        gamma=float(mspec.get("gamma", 1.0)), alpha=float(mspec.get("alpha", 0.05)),
    )
    model = detector.fit(X, params, ratio=float(mspec.get("ratio", 1.0 / 3.0)),
                         seed=derive_seed(master, "partition", name))
    if mspec.get("beta") is not None:
        cal = threshold_for_far(model, float(mspec["beta"]))
        model = model.with_threshold(cal.h, calibration=cal)
    elif mspec.get("h") is not None:
        model = model.with_threshold(float(mspec["h"]))
    return model


# --------------------------------------------------------------------------
# export


DELAY_HEADER = "threshold,trials,avg_detection_delay,miss_rate,empirical_far,far_bound"
ROC_HEADER = "threshold,lambda,tpr,fpr"


def export_results(results, out_dir):
    """One delay-vs-FAR CSV per (method, scenario) and one ROC CSV where
    localization points exist. Deterministic layout and row order."""
    os.makedirs(out_dir, exist_ok=True)
    if not results:
        path = os.path.join(out_dir, "delay_far.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(DELAY_HEADER + "\n")
        return [path]
    groups = {}
    for res in results:
        groups.setdefault((res.method, res.scenario), []).append(res)
    paths = []
    for (method, scenario), cells in sorted(groups.items()):
        cells = sorted(cells, key=lambda r: r.threshold)
        path = os.path.join(out_dir, f"delay_far_{method}_{scenario}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(DELAY_HEADER + "\n")
            for r in cells:
                fh.write(",".join(repr(float(v)) for v in (
                    r.threshold, r.trials, r.avg_detection_delay,
                    r.miss_rate, r.empirical_far, r.far_bound)) + "\n")
        paths.append(path)
        if any(r.roc_points for r in cells):
            rpath = os.path.join(out_dir, f"roc_{method}_{scenario}.csv")
            with open(rpath, "w", encoding="utf-8") as fh:
                fh.write(ROC_HEADER + "\n")
                for r in cells:
                    for lam, tpr, fpr in r.roc_points:
                        fh.write(",".join(repr(float(v)) for v in (
                            r.threshold, lam, tpr, fpr)) + "\n")
            paths.append(rpath)
    return paths
