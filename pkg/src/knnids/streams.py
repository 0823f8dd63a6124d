"""Synthetic scenarios, stream ingestion, and model persistence.

Everything that feeds detector data or stores detector state lives here:
nominal traffic generators (uniform box, Gaussian mixture for beacon fields,
count-valued rate generators for road segments), attack injection (uniform
falsification and synchronized rate increases), CSV/JSONL ingestion, and the
versioned, checksummed model file format.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .calibrate import Calibration
from .core import DataInstance, NormalizationBounds
from .detector import Hyperparams, TrainedModel
from .exceptions import (
    CorruptModel,
    DimensionMismatch,
    InvalidSpec,
    ParseError,
    VersionMismatch,
)

MODEL_FORMAT_VERSION = 1

_ATTACK_STREAM_SALT = 0x5EED_A77A  # keeps non-target cells identical to the clean run


# --------------------------------------------------------------------------
# nominal generators


@dataclass(frozen=True)
class UniformBox:
    """Independent uniform draws on [low, high] per dimension."""

    low: float = 0.0
    high: float = 1.0

    def validate(self, d):
        if not self.low < self.high:
            raise InvalidSpec("uniform_box needs low < high")

    def sample(self, n, d, rng):
        return rng.uniform(self.low, self.high, size=(n, d))

    def means(self, d):
        return np.full(d, (self.low + self.high) / 2.0)


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted mixture of diagonal Gaussians; one (weight, means, stds) per
    component, means/stds of length d."""

    components: tuple

    def validate(self, d):
        if not self.components:
            raise InvalidSpec("gaussian_mixture needs at least one component")
        weights = [c[0] for c in self.components]
        if abs(sum(weights) - 1.0) > 1e-9 or min(weights) <= 0:
            raise InvalidSpec("mixture weights must be positive and sum to 1")
        for _, means, stds in self.components:
            if len(means) != d or len(stds) != d:
                raise InvalidSpec("component means/stds must have length d")
            if min(stds) <= 0:
                raise InvalidSpec("component stds must be positive")

    def sample(self, n, d, rng):
        weights = np.array([c[0] for c in self.components])
        means = np.array([c[1] for c in self.components], dtype=float)
        stds = np.array([c[2] for c in self.components], dtype=float)
        which = rng.choice(len(weights), size=n, p=weights)
        return rng.normal(means[which], stds[which])

    def means(self, d):
        weights = np.array([c[0] for c in self.components])
        means = np.array([c[1] for c in self.components], dtype=float)
        return weights @ means


@dataclass(frozen=True)
class NegativeBinomialRates:
    """Per-segment message counts from a negative binomial; r and p per segment."""

    r: tuple
    p: tuple

    def validate(self, d):
        if len(self.r) != d or len(self.p) != d:
            raise InvalidSpec("negative_binomial_rates needs r and p of length d")
        if min(self.r) <= 0 or not all(0 < pi < 1 for pi in self.p):
            raise InvalidSpec("need r > 0 and 0 < p < 1 per segment")

    def sample(self, n, d, rng):
        return rng.negative_binomial(self.r, self.p, size=(n, d)).astype(float)

    def means(self, d):
        r = np.asarray(self.r, dtype=float)
        p = np.asarray(self.p, dtype=float)
        return r * (1.0 - p) / p


@dataclass(frozen=True)
class GaussianRates:
    """Per-segment message counts: rounded, non-negative Gaussian draws."""

    mean: tuple
    std: tuple

    def validate(self, d):
        if len(self.mean) != d or len(self.std) != d:
            raise InvalidSpec("gaussian_rates needs mean and std of length d")
        if min(self.std) <= 0:
            raise InvalidSpec("stds must be positive")

    def sample(self, n, d, rng):
        draws = rng.normal(self.mean, self.std, size=(n, d))
        return np.maximum(np.rint(draws), 0.0)

    def means(self, d):
        return np.asarray(self.mean, dtype=float)


_RATE_GENERATORS = (NegativeBinomialRates, GaussianRates)


@dataclass(frozen=True)
class AttackSpec:
    """What to inject: kind, attacked dimensions, tick window, magnitude.

    fdi_uniform redraws each target value uniformly within
    magnitude * nominal of the nominal value; ddos_rate_increase adds uniform
    extra traffic with mean magnitude * nominal segment mean, synchronously
    across the target segments.
    """

    kind: str
    target_dims: tuple
    window: tuple
    magnitude: float


@dataclass(frozen=True)
class ScenarioSpec:
    """Declarative synthetic experiment: nominal generator + optional attack."""

    generator: object
    d: int
    horizon: int
    attack: AttackSpec | None = None
    seed: int = 0

    def validate(self):
        if self.d < 1 or self.horizon < 1:
            raise InvalidSpec("need d >= 1 and horizon >= 1")
        self.generator.validate(self.d)
        a = self.attack
        if a is None:
            return
        if a.kind not in ("fdi_uniform", "ddos_rate_increase"):
            raise InvalidSpec(f"unknown attack kind {a.kind!r}")
        if not a.target_dims:
            raise InvalidSpec("attack needs at least one target dimension")
        if any(not 0 <= n < self.d for n in a.target_dims):
            raise InvalidSpec("attack target dimension out of range")
        start, end = a.window
        if not 1 <= start <= end <= self.horizon:
            raise InvalidSpec(
                f"attack window {a.window} must lie within 1..{self.horizon}"
            )
        if a.magnitude <= 0:
            raise InvalidSpec("attack magnitude must be positive")
        if a.kind == "ddos_rate_increase" and not isinstance(
            self.generator, _RATE_GENERATORS
        ):
            raise InvalidSpec("ddos_rate_increase needs a rate generator")


def generate(spec: ScenarioSpec):
    """Deterministic scenario draw: (X, truth) with X raw (horizon, d) values
    and truth a boolean per-(tick, dim) attack mask.

    The attack uses its own seeded generator on top of the nominal draw, so
    every non-target cell is bit-identical to the attack-free stream with the
    same seed.
    """
    spec.validate()
    rng = np.random.default_rng(np.uint64(spec.seed))
    X = np.asarray(spec.generator.sample(spec.horizon, spec.d, rng), dtype=float)
    truth = np.zeros((spec.horizon, spec.d), dtype=bool)
    a = spec.attack
    if a is None:
        return X, truth
    attack_rng = np.random.default_rng([np.uint64(spec.seed), _ATTACK_STREAM_SALT])
    start, end = a.window
    rows = slice(start - 1, end)
    n_rows = end - start + 1
    dims = np.asarray(sorted(a.target_dims), dtype=int)
    if a.kind == "fdi_uniform":
        nominal = X[rows][:, dims]
        offsets = attack_rng.uniform(-1.0, 1.0, size=(n_rows, dims.size))
        X[rows.start : rows.stop, dims] = nominal + a.magnitude * np.abs(nominal) * offsets
    else:
        seg_means = np.asarray(spec.generator.means(spec.d), dtype=float)[dims]
        extra = attack_rng.uniform(0.0, 2.0 * a.magnitude * seg_means,
                                   size=(n_rows, dims.size))
        X[rows.start : rows.stop, dims] = np.rint(X[rows][:, dims] + extra)
    truth[rows.start : rows.stop, dims] = True
    return X, truth


def to_instances(X, source_id: str = "", t0: int = 1):
    """Wrap a (n, d) matrix as DataInstance records with ticks t0, t0+1, ..."""
    X = np.asarray(X, dtype=float)
    return [
        DataInstance(values=tuple(row), t=t0 + i, source_id=source_id)
        for i, row in enumerate(X)
    ]


# --------------------------------------------------------------------------
# ingestion and export


def ingest(path, format: str):
    """Read a stream file into DataInstance records.

    csv_matrix: one row per tick, d numeric columns, optional '#' header.
    jsonl_stream: one {"t", "source_id", "values"} object per line.
    """
    if format == "csv_matrix":
        return _ingest_csv(path)
    if format == "jsonl_stream":
        return _ingest_jsonl(path)
    raise ValueError(f"unknown format {format!r}")


def _ingest_csv(path):
    instances = []
    d = None
    t = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values = tuple(float(tok) for tok in line.split(","))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            if d is None:
                d = len(values)
            elif len(values) != d:
                raise DimensionMismatch(
                    f"line {lineno}: expected {d} columns, got {len(values)}"
                )
            t += 1
            instances.append(DataInstance(values=values, t=t))
    return instances


def _ingest_jsonl(path):
    instances = []
    d = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            if not isinstance(obj, dict) or not {"t", "source_id", "values"} <= obj.keys():
                raise ParseError("record needs fields t, source_id, values", line=lineno)
            values = obj["values"]
            if not isinstance(values, list) or not values:
                raise ParseError("values must be a non-empty list", line=lineno)
            if d is None:
                d = len(values)
            elif len(values) != d:
                raise DimensionMismatch(
                    f"line {lineno}: expected {d} values, got {len(values)}"
                )
            instances.append(
                DataInstance(values=tuple(float(v) for v in values),
                             t=int(obj["t"]), source_id=str(obj["source_id"]))
            )
    return instances


def export_csv(X, path, header=None):
    X = np.asarray(X, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write("# " + ",".join(header) + "\n")
        for row in X:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def export_jsonl(instances, path):
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(
                {"t": inst.t, "source_id": inst.source_id,
                 "values": list(inst.values)},
                sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# model persistence


def _model_payload(model: TrainedModel) -> dict:
    p = model.params
    cal = model.calibration
    return {
        "version": MODEL_FORMAT_VERSION,
        "d": model.d,
        "M": model.M,
        "params": {"k": p.k, "s": p.s, "gamma": p.gamma, "alpha": p.alpha, "h": p.h},
        "bounds": {"mins": list(model.bounds.mins), "maxs": list(model.bounds.maxs)},
        "reference": [list(row) for row in model.reference.tolist()],
        "baseline_LM": model.baseline_LM,
        "phi": model.evidence_bound_phi,
        "calibration": None if cal is None else {
            "beta": cal.beta, "v_d": cal.v_d, "theta": cal.theta,
            "phi": cal.phi, "omega0": cal.omega0, "h": cal.h,
        },
    }


def _checksum(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def save_model(model: TrainedModel, path):
    payload = _model_payload(model)
    payload["checksum"] = _checksum({k: v for k, v in payload.items()})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"unreadable model file: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise CorruptModel("missing version field")
    if payload["version"] != MODEL_FORMAT_VERSION:
        raise VersionMismatch(
            f"unsupported model format version {payload['version']!r}"
        )
    stored = payload.pop("checksum", None)
    if stored is None or stored != _checksum(payload):
        raise CorruptModel("checksum mismatch")
    p = payload["params"]
    cal = payload["calibration"]
    return TrainedModel(
        reference=np.array(payload["reference"], dtype=float),
        baseline_LM=float(payload["baseline_LM"]),
        evidence_bound_phi=float(payload["phi"]),
        bounds=NormalizationBounds(mins=tuple(payload["bounds"]["mins"]),
                                   maxs=tuple(payload["bounds"]["maxs"])),
        params=Hyperparams(k=int(p["k"]), s=int(p["s"]), gamma=float(p["gamma"]),
                           alpha=float(p["alpha"]),
                           h=None if p["h"] is None else float(p["h"])),
        d=int(payload["d"]),
        M=int(payload["M"]),
        calibration=None if cal is None else Calibration(
            beta=cal["beta"], v_d=cal["v_d"], theta=cal["theta"],
            phi=cal["phi"], omega0=cal["omega0"], h=cal["h"],
        ),
    )
