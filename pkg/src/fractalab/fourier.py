"""Fourier transforms of grid and product measures, circular and solid
averages, the stationary-phase main term, and the angular decomposition of
the weighted circular average.

Conventions
-----------
Transform sign is exp(-2 pi i x xi). Every quantity consumed downstream is a
magnitude, so the sign choice is observationally irrelevant but fixed for
reproducibility.

A level-k grid only emulates the continuum transform for frequencies well
below the grid scale, so angular averages refuse t above 0.1/delta (taken
over the coarsest factor); past it, discretization artifacts dominate.

d = 2 angular averages use the uniform trapezoid rule over [0, 2pi) with
node doubling until successive values agree to a relative tolerance. The
integrands of product measures are invariant under theta -> -theta and
theta -> pi - theta, so only the first quadrant is evaluated. d >= 3 uses
seeded Monte Carlo over the sphere (the weighted integrand is not separable
over angles) and reports the standard error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cutoff import CutoffFunction
from .energy import smoothed_fourth_moment
from .errors import ValidationError, ValidityCapError
from .fitting import loglog_fit
from .measures import GridMeasure, ProductMeasure
from .quadrature import (
    QuadratureSpec,
    sample_sphere,
    simpson_doubling,
    sphere_surface_area,
)

_TINY = 1e-300
_WEIGHTS = ("none", "sin_theta", "cos_theta")


def measure_ft(nu: GridMeasure, xi):
    """nu_hat(xi) = sum_j w_j exp(-2 pi i x_j xi); |nu_hat| <= 1 = nu_hat(0)."""
    return nu.transform(xi)


def product_ft(mu: ProductMeasure, xi):
    """mu_hat(xi) = prod_j nu_j_hat(xi_j) for a frequency vector xi (or an
    array of vectors in the last axis)."""
    xi_arr = np.asarray(xi, dtype=float)
    d = mu.dimension
    if xi_arr.shape[-1:] != (d,):
        raise ValidationError(
            f"frequency vector has {xi_arr.shape[-1] if xi_arr.ndim else 0} "
            f"components, product has {d} factors"
        )
    out = np.ones(xi_arr.shape[:-1], dtype=complex)
    for j, factor in enumerate(mu.factors):
        out = out * factor.transform(xi_arr[..., j])
    if xi_arr.ndim == 1:
        return complex(out)
    return out


def validity_cap(mu: ProductMeasure | GridMeasure) -> float:
    """Largest trustworthy frequency, 0.1/delta minimized over factors.

    Single-atom factors are exempt: their transform is a single exponential,
    exact at every frequency, so they carry no discretization artifact.
    """
    factors = (mu,) if isinstance(mu, GridMeasure) else mu.factors
    caps = [0.1 / f.delta for f in factors if f.atom_count > 1]
    return min(caps) if caps else math.inf


def _factor_sq_ft(factor: GridMeasure, xi: np.ndarray) -> np.ndarray:
    return np.abs(factor.transform(xi)) ** 2


def _quadrant_integrand(mu: ProductMeasure, t: float, weight: str):
    fa, fb = mu.factors

    def f(thetas: np.ndarray) -> np.ndarray:
        c = np.cos(thetas)
        s = np.sin(thetas)
        vals = _factor_sq_ft(fa, t * c) * _factor_sq_ft(fb, t * s)
        if weight == "sin_theta":
            vals = vals * np.abs(s)
        elif weight == "cos_theta":
            vals = vals * np.abs(c)
        return vals

    return f


def _sigma_uniform_angle(
    mu: ProductMeasure, t: float, weight: str, spec: QuadratureSpec
) -> tuple[float, int]:
    """Full-circle uniform trapezoid, evaluated on the first quadrant by
    symmetry of the product integrand. Returns (value, node count)."""
    f = _quadrant_integrand(mu, t, weight)
    n = max(16, int(spec.node_count))
    n += (-n) % 4  # multiple of 4 so 0 and pi/2 are nodes
    interior = np.arange(1, n // 4) * (2.0 * np.pi / n)
    ends = f(np.array([0.0, np.pi / 2.0]))
    total = 2.0 * float(ends[0] + ends[1]) + 4.0 * float(np.sum(f(interior)))
    value = (2.0 * np.pi / n) * total
    while n < spec.max_nodes:
        new = (2.0 * np.arange(n // 4) + 1.0) * (np.pi / n)
        total += 4.0 * float(np.sum(f(new)))
        n *= 2
        new_value = (2.0 * np.pi / n) * total
        done = abs(new_value - value) <= spec.rel_tol * max(abs(new_value), _TINY)
        value = new_value
        if done:
            break
    return value, n


def _sigma_monte_carlo(
    mu: ProductMeasure, t: float, weight: str, spec: QuadratureSpec
) -> tuple[float, int, float]:
    if spec.seed is None:
        raise ValidationError("Monte Carlo sphere quadrature requires a seed")
    d = mu.dimension
    omega = sample_sphere(d, spec.node_count, spec.seed)
    vals = np.ones(spec.node_count)
    for j, factor in enumerate(mu.factors):
        vals *= _factor_sq_ft(factor, t * omega[:, j])
    if weight == "sin_theta":
        vals *= np.abs(omega[:, -1])
    area = sphere_surface_area(d)
    value = area * float(np.mean(vals))
    stderr = area * float(np.std(vals, ddof=1)) / math.sqrt(spec.node_count)
    return value, spec.node_count, stderr


def spherical_average_detailed(
    mu: ProductMeasure,
    t: float,
    weight: str = "none",
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> tuple[float, int, float]:
    """sigma(t) = int_{S^(d-1)} |mu_hat(t omega)|^2 w(omega) domega.

    Weight 'sin_theta' multiplies by |sin theta| (d = 2) or by the distance
    of omega from the hyperplane x_d = 0, i.e. |omega_d| (d >= 3);
    'cos_theta' (d = 2 only) is the complementary weight used by the
    axis-exchange symmetry checks. Returns (value, node_count, stderr);
    stderr is 0 for deterministic rules.
    """
    if weight not in _WEIGHTS:
        raise ValidationError(f"unknown weight {weight!r}; expected one of {_WEIGHTS}")
    if t < 0:
        raise ValidationError(f"t must be nonnegative, got {t}")
    cap = validity_cap(mu)
    if t > cap:
        raise ValidityCapError(
            f"t={t} exceeds the discretization validity cap {cap:.6g} "
            "(0.1/delta over the coarsest factor); deepen the level", cap
        )
    d = mu.dimension
    kind = quadrature.kind
    if kind == "auto":
        kind = "uniform_angle" if d == 2 else "monte_carlo_sphere"
    if kind == "uniform_angle":
        if d != 2:
            raise ValidationError("uniform_angle quadrature is for d = 2 only")
        value, nodes = _sigma_uniform_angle(mu, t, weight, quadrature)
        return value, nodes, 0.0
    if weight == "cos_theta":
        raise ValidationError("cos_theta weight is defined for d = 2 only")
    return _sigma_monte_carlo(mu, t, weight, quadrature)


def spherical_average(
    mu: ProductMeasure,
    t: float,
    weight: str = "none",
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> float:
    value, _, _ = spherical_average_detailed(mu, t, weight, quadrature)
    return value


@dataclass(frozen=True)
class SphericalAverageSeries:
    """sigma(t) over a geometric t sweep plus the fitted log-log decay."""

    t_values: tuple[float, ...]
    values: tuple[float, ...]
    weight: str
    quadrature_kind: str
    node_counts: tuple[int, ...]
    stderrs: tuple[float, ...]
    seed: int | None
    fitted_decay: float
    fit_stderr: float


def spherical_average_series(
    mu: ProductMeasure,
    t_values,
    weight: str = "none",
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> SphericalAverageSeries:
    ts = [float(t) for t in t_values]
    if len(ts) < 3:
        raise ValidationError("need at least 3 t values for a decay fit")
    rows = [spherical_average_detailed(mu, t, weight, quadrature) for t in ts]
    values = [r[0] for r in rows]
    fit = loglog_fit(ts, values)
    kind = quadrature.kind
    if kind == "auto":
        kind = "uniform_angle" if mu.dimension == 2 else "monte_carlo_sphere"
    return SphericalAverageSeries(
        t_values=tuple(ts),
        values=tuple(values),
        weight=weight,
        quadrature_kind=kind,
        node_counts=tuple(r[1] for r in rows),
        stderrs=tuple(r[2] for r in rows),
        seed=quadrature.seed,
        fitted_decay=fit.slope,
        fit_stderr=fit.stderr,
    )


def solid_average(nu: GridMeasure, t: float, interval: tuple[float, float] = (-1.0, 1.0)) -> float:
    """int_a^b |nu_hat(t u)|^2 du by Simpson doubling on [a, b]."""
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValidationError(f"empty interval [{a}, {b}]")
    if t < 1.0:
        raise ValidationError(f"t must be >= 1, got {t}")

    def integrand(u):
        return _factor_sq_ft(nu, t * np.asarray(u))

    initial = max(32, 2 * int(4.0 * t * (b - a)))
    value, _, _ = simpson_doubling(integrand, a, b, initial_intervals=initial, rel_tol=1e-7)
    return value


# ---------------------------------------------------------------------------
# Stationary phase on the circle
# ---------------------------------------------------------------------------

def _circle_phase_integral(
    gap: np.ndarray, t: float, rel_tol: float = 1e-10, abs_tol: float = 1e-10
) -> complex:
    """int_0^{2pi} exp(2 pi i t (gap . omega)) |sin theta| dtheta by the
    trapezoid rule with doubling, at least ~10 nodes per phase cycle.

    The integrand at theta + pi is the conjugate of the one at theta, so the
    integral is real and only half the circle is evaluated. The stopping
    test carries an absolute floor: near the oscillation zeros the value
    itself vanishes and a purely relative criterion never fires; the floor
    sits well below the stationary-phase residuals measured downstream.
    """
    x = t * float(np.hypot(gap[0], gap[1]))
    n = max(1024, 16 * int(math.ceil(x)))
    n += n % 2

    def half_sum(th):
        # sum of f(theta) + f(theta + pi) = 2 Re f(theta) over given nodes
        phase = 2.0 * np.pi * t * (gap[0] * np.cos(th) + gap[1] * np.sin(th))
        return 2.0 * float(np.sum(np.cos(phase) * np.abs(np.sin(th))))

    total = half_sum(np.arange(n // 2) * (2.0 * np.pi / n))
    value = (2.0 * np.pi / n) * total
    for _ in range(8):
        total += half_sum(np.arange(n // 2) * (2.0 * np.pi / n) + np.pi / n)
        n *= 2
        new_value = (2.0 * np.pi / n) * total
        if abs(new_value - value) <= max(rel_tol * abs(new_value), abs_tol):
            return complex(new_value)
        value = new_value
    return complex(value)


def stationary_phase_main_term(gap, t):
    """Leading term 2 (t|g|)^(-1/2) cos(2 pi (t|g| - 1/8)) |sin theta_g|,
    where theta_g is the angle between the gap vector and the x-axis.
    Vectorized in t."""
    g = np.asarray(gap, dtype=float)
    norm = float(np.hypot(g[0], g[1]))
    x = np.asarray(t, dtype=float) * norm
    sin_gap = abs(g[1]) / norm
    return 2.0 * x ** (-0.5) * np.cos(2.0 * np.pi * (x - 0.125)) * sin_gap


FIT_WINDOW = (1.0e2, 1.0e4)  # in t*|gap|; below ~10 is pre-asymptotic


@dataclass(frozen=True)
class StationaryPhaseReport:
    gap: tuple[float, float]
    t_values: tuple[float, ...]
    exact: tuple[complex, ...]
    main: tuple[float, ...]
    residuals: tuple[complex, ...]
    fit_window: tuple[float, float]
    residual_slope: float | None
    residual_stderr: float | None

    @property
    def scaled_arguments(self) -> tuple[float, ...]:
        norm = math.hypot(*self.gap)
        return tuple(t * norm for t in self.t_values)


def stationary_phase_check(gap, t_values, fit_window=FIT_WINDOW) -> StationaryPhaseReport:
    """Compare the oscillatory circle integral with its main term across a
    t sweep and fit the residual decay inside the declared window."""
    g = np.asarray(gap, dtype=float)
    if g.shape != (2,):
        raise ValidationError("gap must be a 2-vector (the check is d = 2 only)")
    norm = float(np.hypot(g[0], g[1]))
    if norm == 0.0:
        raise ValidationError("gap must be nonzero")
    ts = [float(t) for t in t_values]
    if any(t <= 0 for t in ts):
        raise ValidationError("t values must be positive")
    exact = [_circle_phase_integral(g, t) for t in ts]
    main = [float(stationary_phase_main_term(g, t)) for t in ts]
    resid = [e - m for e, m in zip(exact, main)]
    xs = [t * norm for t in ts]
    lo, hi = fit_window
    pts = [(x, abs(r)) for x, r in zip(xs, resid) if lo <= x <= hi and abs(r) > 0]
    slope = stderr = None
    if len(pts) >= 3:
        fit = loglog_fit(pts)
        slope, stderr = fit.slope, fit.stderr
    return StationaryPhaseReport(
        gap=(float(g[0]), float(g[1])),
        t_values=tuple(ts),
        exact=tuple(exact),
        main=tuple(main),
        residuals=tuple(resid),
        fit_window=(float(lo), float(hi)),
        residual_slope=slope,
        residual_stderr=stderr,
    )


# ---------------------------------------------------------------------------
# Angular decomposition of the quadrant average
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AngularDecomposition:
    """Split of int_0^{pi/2} |nu_A_hat(t cos)|^2 |nu_B_hat(t sin)|^2 dtheta
    into the sectors [0, eps], [eps, pi/2 - eps], [pi/2 - eps, pi/2] with
    eps = t^(-gamma0), plus the Cauchy-Schwarz majorant of the middle sector
    through the smoothed fourth moments of the factors."""

    t: float
    gamma0: float
    eps: float
    near_zero: float
    near_half_pi: float
    middle: float
    smoothed_moment_a: float  # quantity I
    smoothed_moment_b: float  # quantity II
    cs_constant: float
    cs_bound: float

    @property
    def quadrant_total(self) -> float:
        return self.near_zero + self.near_half_pi + self.middle


def angular_decomposition(
    mu: ProductMeasure, t: float, gamma0: float, cutoff: CutoffFunction
) -> AngularDecomposition:
    """Decompose the quadrant average at angular cut eps = t^(-gamma0).

    The middle sector obeys middle <= C t^gamma0 sqrt(I * II) with
    C = (pi/2) / min_{[-1,1]} psi_hat: Cauchy-Schwarz in theta, then the
    substitutions u = cos theta / u = sin theta (whose Jacobians are bounded
    by (pi/2) t^gamma0 away from the poles), then domination of the
    restricted u-integrals by the psi_hat-smoothed ones. The cutoff scale
    must exceed 1 so psi_hat is bounded below on [-1, 1].
    """
    if mu.dimension != 2:
        raise ValidationError("angular decomposition is defined for d = 2 products")
    if not 0.0 < gamma0 < 0.5:
        raise ValidationError(f"gamma0 must lie in (0, 1/2), got {gamma0}")
    if t < 1.0:
        raise ValidationError(f"t must be >= 1, got {t}")
    cap = validity_cap(mu)
    if t > cap:
        raise ValidityCapError(
            f"t={t} exceeds the discretization validity cap {cap:.6g}", cap
        )
    eps = t ** (-gamma0)
    if not eps < np.pi / 4:
        t_min = (4.0 / np.pi) ** (1.0 / gamma0)
        raise ValidationError(
            f"t^(-gamma0) = {eps:.4f} >= pi/4; the three sectors are not "
            f"disjoint (need t > {t_min:.4g} for gamma0 = {gamma0})"
        )
    psi_hat_min = cutoff.transform_min_on_unit_interval()
    if psi_hat_min <= 0.0:
        raise ValidationError(
            "cutoff transform must be positive on [-1, 1]: use a scale > 1"
        )
    f = _quadrant_integrand(mu, t, "none")

    def sector(a: float, b: float) -> float:
        initial = max(32, 2 * int(4.0 * t * (b - a)))
        value, _, _ = simpson_doubling(f, a, b, initial_intervals=initial, rel_tol=1e-7)
        return value

    near_zero = sector(0.0, eps)
    near_half_pi = sector(np.pi / 2.0 - eps, np.pi / 2.0)
    middle = sector(eps, np.pi / 2.0 - eps)

    fa, fb = mu.factors
    moment_a = smoothed_fourth_moment(fa, t, cutoff)
    moment_b = smoothed_fourth_moment(fb, t, cutoff)
    cs_constant = (np.pi / 2.0) / psi_hat_min
    cs_bound = cs_constant * t**gamma0 * math.sqrt(moment_a * moment_b)
    return AngularDecomposition(
        t=float(t),
        gamma0=float(gamma0),
        eps=float(eps),
        near_zero=near_zero,
        near_half_pi=near_half_pi,
        middle=middle,
        smoothed_moment_a=moment_a,
        smoothed_moment_b=moment_b,
        cs_constant=float(cs_constant),
        cs_bound=float(cs_bound),
    )
