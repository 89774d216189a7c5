"""Self-converging quadrature rules and sphere sampling.

Two workhorses: the uniform trapezoid rule on a full period (spectrally
accurate for smooth periodic integrands) and composite Simpson on a finite
interval. Both double their node count until successive values agree to a
relative tolerance, reusing previous evaluations, so callers get a node
count alongside the value. Monte Carlo sphere sampling is seeded and used
only in ambient dimension >= 3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_TINY = 1e-300


@dataclass(frozen=True)
class QuadratureSpec:
    """How to evaluate an angular average.

    kind: 'auto' picks uniform_angle for d=2 and monte_carlo_sphere for
    d>=3. node_count is the initial grid size (deterministic rules) or the
    sample count (Monte Carlo). The seed is mandatory whenever Monte Carlo
    is actually used.
    """

    kind: str = "auto"
    node_count: int = 64
    seed: int | None = None
    rel_tol: float = 1e-6
    max_nodes: int = 1 << 21

    def __post_init__(self):
        if self.kind not in ("auto", "uniform_angle", "monte_carlo_sphere"):
            raise ValidationError(f"unknown quadrature kind {self.kind!r}")
        if self.node_count < 4:
            raise ValidationError("node_count must be at least 4")
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be positive")


def periodic_trapezoid_doubling(
    f, initial_nodes: int = 64, rel_tol: float = 1e-6, max_nodes: int = 1 << 21
) -> tuple[float, int, bool]:
    """Integrate f over [0, 2pi) on uniform grids, doubling until stable.

    Returns (value, node_count, converged). f maps an array of angles to an
    array of integrand values.
    """
    n = max(8, int(initial_nodes))
    thetas = np.arange(n) * (2.0 * np.pi / n)
    total = float(np.sum(f(thetas)))
    value = (2.0 * np.pi / n) * total
    while n < max_nodes:
        new_thetas = np.arange(n) * (2.0 * np.pi / n) + np.pi / n
        total += float(np.sum(f(new_thetas)))
        n *= 2
        new_value = (2.0 * np.pi / n) * total
        done = abs(new_value - value) <= rel_tol * max(abs(new_value), _TINY)
        value = new_value
        if done:
            return value, n, True
    return value, n, False


def _simpson_value(fx: np.ndarray, h: float) -> float:
    return (h / 3.0) * float(fx[0] + fx[-1] + 4.0 * np.sum(fx[1:-1:2]) + 2.0 * np.sum(fx[2:-1:2]))


def simpson_doubling(
    f,
    a: float,
    b: float,
    initial_intervals: int = 16,
    rel_tol: float = 1e-8,
    max_intervals: int = 1 << 22,
) -> tuple[float, int, bool]:
    """Composite Simpson on [a, b] with interval doubling and node reuse.

    Returns (value, node_count, converged).
    """
    if not b > a:
        raise ValidationError(f"empty interval [{a}, {b}]")
    n = max(4, int(initial_intervals))
    if n % 2:
        n += 1
    xs = np.linspace(a, b, n + 1)
    fx = np.asarray(f(xs), dtype=float)
    value = _simpson_value(fx, (b - a) / n)
    while n < max_intervals:
        mids = (xs[:-1] + xs[1:]) / 2.0
        fmid = np.asarray(f(mids), dtype=float)
        merged = np.empty(2 * n + 1)
        merged[0::2] = fx
        merged[1::2] = fmid
        n *= 2
        fx = merged
        xs = np.linspace(a, b, n + 1)
        new_value = _simpson_value(fx, (b - a) / n)
        done = abs(new_value - value) <= rel_tol * max(abs(new_value), _TINY)
        value = new_value
        if done:
            return value, n + 1, True
    return value, n + 1, False


def sphere_surface_area(d: int) -> float:
    """Surface measure of the unit sphere S^(d-1) in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def sample_sphere(d: int, count: int, seed: int) -> np.ndarray:
    """Uniform points on S^(d-1), shape (count, d), from a seeded generator."""
    if d < 2:
        raise ValidationError("sphere sampling needs ambient dimension >= 2")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    v = rng.standard_normal((count, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # resample the (measure-zero) degenerate rows deterministically
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        v[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / norms
