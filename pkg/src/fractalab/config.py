"""Experiment configuration: one JSON file, overridable by CLI flags.

A config is a flat record; unknown keys are rejected so typos surface as
validation errors with the offending field named. serialize(parse(text)) is
idempotent: parsing normalizes, serialization is canonical JSON.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ValidationError
from .measures import CantorSpec

EXPERIMENT_KINDS = (
    "cantor",
    "regularity",
    "energy",
    "spherical",
    "solid",
    "stationary",
    "mattila",
    "distance",
    "thresholds",
    "full-report",
)


@dataclass(frozen=True)
class GeometricSweep:
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if not 0 < self.start < self.stop:
            raise ValidationError(
                f"sweep needs 0 < start < stop, got [{self.start}, {self.stop}]"
            )
        if self.count < 3:
            raise ValidationError(f"sweep needs at least 3 points, got {self.count}")

    def values(self) -> list[float]:
        return [float(v) for v in np.geomspace(self.start, self.stop, self.count)]

    def to_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop, "count": self.count}

    @staticmethod
    def from_dict(d: dict) -> "GeometricSweep":
        return GeometricSweep(float(d["start"]), float(d["stop"]), int(d["count"]))


@dataclass
class ExperimentConfig:
    kind: str
    output_dir: str = "out"
    seed: int = 0
    parallelism: int = 1
    factors: list[CantorSpec] = field(default_factory=list)
    sweep: GeometricSweep | None = None
    weight: str = "sin_theta"
    gamma0: float = 0.1
    dz_k: float = 1.0
    dz_c_nu: float | None = None
    cutoff_scale: float = 2.0
    alpha: float | None = None
    regularity_cap: float = 4.0
    truncation: float | None = None
    mattila_weighted: bool = True
    bin_width: float = 0.01
    distance_weighted: bool = False
    coverage_widths: list[float] = field(default_factory=list)
    interval: tuple[float, float] = (-1.0, 1.0)
    gaps: list[tuple[float, float]] = field(default_factory=list)
    dims: list[str] = field(default_factory=list)
    mc_nodes: int = 20000

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ValidationError(
                f"kind: unknown experiment {self.kind!r}; expected one of {EXPERIMENT_KINDS}"
            )
        if int(self.parallelism) < 1:
            raise ValidationError(f"parallelism: must be >= 1, got {self.parallelism}")
        if self.weight not in ("none", "sin_theta"):
            raise ValidationError(f"weight: must be 'none' or 'sin_theta', got {self.weight!r}")
        if not 0.0 < self.gamma0 < 0.5:
            raise ValidationError(f"gamma0: must lie in (0, 1/2), got {self.gamma0}")
        if not self.dz_k > 0:
            raise ValidationError(f"dz_k: must be positive, got {self.dz_k}")
        if not self.cutoff_scale > 0:
            raise ValidationError(f"cutoff_scale: must be positive, got {self.cutoff_scale}")
        if not self.bin_width > 0:
            raise ValidationError(f"bin_width: must be positive, got {self.bin_width}")
        if self.interval[0] >= self.interval[1]:
            raise ValidationError(f"interval: empty interval {self.interval}")
        if self.mc_nodes < 4:
            raise ValidationError(f"mc_nodes: must be >= 4, got {self.mc_nodes}")
        needs_factors = self.kind in (
            "cantor", "regularity", "energy", "spherical", "solid",
            "mattila", "distance", "full-report",
        )
        if needs_factors and not self.factors:
            raise ValidationError(f"factors: experiment {self.kind!r} needs at least one factor")
        if self.kind == "thresholds" and not self.dims and not self.factors:
            raise ValidationError("dims: thresholds experiment needs dims or factors")
        if self.kind == "stationary" and not self.gaps:
            raise ValidationError("gaps: stationary experiment needs at least one gap vector")
        product_kinds = ("spherical", "mattila", "distance", "full-report")
        if self.kind in product_kinds and len(self.factors) == 1:
            raise ValidationError(f"factors: experiment {self.kind!r} needs >= 2 factors")
        if self.kind in ("spherical", "mattila") and len(self.factors) >= 3 and self.seed is None:
            raise ValidationError("seed: required when Monte Carlo quadrature is reachable (d >= 3)")

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "factors":
                v = [s.to_dict() for s in v]
            elif f.name == "sweep":
                v = None if v is None else v.to_dict()
            elif f.name == "interval":
                v = list(v)
            elif f.name == "gaps":
                v = [list(g) for g in v]
            d[f.name] = v
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        kw = dict(d)
        if "kind" not in kw:
            raise ValidationError("kind: missing required field")
        if "factors" in kw:
            kw["factors"] = [CantorSpec.from_dict(s) for s in kw["factors"]]
        if kw.get("sweep") is not None:
            kw["sweep"] = GeometricSweep.from_dict(kw["sweep"])
        if "interval" in kw:
            iv = kw["interval"]
            if len(iv) != 2:
                raise ValidationError(f"interval: expected [a, b], got {iv}")
            kw["interval"] = (float(iv[0]), float(iv[1]))
        if "gaps" in kw:
            gaps = []
            for g in kw["gaps"]:
                if len(g) != 2:
                    raise ValidationError(f"gaps: expected 2-vectors, got {g}")
                gaps.append((float(g[0]), float(g[1])))
            kw["gaps"] = gaps
        if "dims" in kw:
            kw["dims"] = [str(x) for x in kw["dims"]]
        return ExperimentConfig(**kw)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ValidationError("config JSON must be an object")
        return ExperimentConfig.from_dict(payload)


def parse_factor_spec(text: str) -> CantorSpec:
    """Parse the CLI factor syntax 'base:digit,digit,...:level', e.g. '3:0,2:8'."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(
            f"factor: expected 'base:digits:level' (e.g. '3:0,2:8'), got {text!r}"
        )
    try:
        base = int(parts[0])
        digits = tuple(int(x) for x in parts[1].split(",") if x != "")
        level = int(parts[2])
    except ValueError as exc:
        raise ValidationError(f"factor: bad numbers in {text!r}") from exc
    return CantorSpec(base=base, digits=digits, level=level)
