"""Distance measures, truncated Mattila integrals, energy integrals, and the
dimension-threshold arithmetic for product sets.

Conventions that matter here: pairs with x = y are excluded from the energy
integral I_s (it diverges on atoms otherwise) and carry zero weight in the
weighted distance measure; they are included, and reported separately, in
the unweighted distance measure. Distances are binned left-closed by
floor(|x-y|/h). Threshold arithmetic is carried out in exact rationals
whenever the inputs are rational.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .energy import dz_beta
from .errors import BudgetError, ValidationError, ValidityCapError
from .fitting import loglog_fit
from .fourier import spherical_average_detailed, validity_cap
from .measures import GridMeasure, ProductMeasure
from .quadrature import QuadratureSpec

DEFAULT_PAIR_BUDGET = 400_000_000


def product_atoms(mu: ProductMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Expand a product measure into explicit atoms: positions (N, d) and
    weights (N,), in C order over the factor grids."""
    pos_axes = [f.positions for f in mu.factors]
    w_axes = [f.weights for f in mu.factors]
    grids = np.meshgrid(*pos_axes, indexing="ij")
    positions = np.stack([g.ravel() for g in grids], axis=-1)
    weights = w_axes[0]
    for wa in w_axes[1:]:
        weights = np.multiply.outer(weights, wa)
    return positions, weights.ravel()


def _check_pair_budget(n_atoms: int, pair_budget: int) -> None:
    if n_atoms * n_atoms > pair_budget:
        raise BudgetError(
            f"{n_atoms} atoms give {n_atoms * n_atoms:.3g} pairs, over the budget "
            f"{pair_budget:.3g}; coarsen the factor levels"
        )


@dataclass(frozen=True, eq=False)
class DistanceMeasure:
    """Histogram of pairwise distances of a product measure.

    masses[k] is the mass of the bin [k*h, (k+1)*h). When weighted, each
    pair carries the factor |x_2 - y_2| / |x - y| (zero on the diagonal by
    convention), so the total mass is at most 1.
    """

    bin_width: float
    masses: np.ndarray
    weighted: bool
    total_mass: float
    diagonal_mass: float

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.masses, dtype=float))
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @property
    def bins(self) -> dict[int, float]:
        nz = np.nonzero(self.masses)[0]
        return {int(k): float(self.masses[k]) for k in nz}

    def bin_left(self, k: int) -> float:
        return k * self.bin_width


def _pair_scan(mu: ProductMeasure, pair_budget: int):
    positions, weights = product_atoms(mu)
    _check_pair_budget(positions.shape[0], pair_budget)
    n = positions.shape[0]
    chunk = max(1, (1 << 21) // max(1, n))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = positions[start:stop, None, :] - positions[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        wpair = weights[start:stop, None] * weights[None, :]
        yield diff, dist, wpair


def distance_measure(
    mu: ProductMeasure,
    h: float,
    weighted: bool = False,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
) -> DistanceMeasure:
    """Exhaustive pairwise distance histogram with bin width h."""
    if not h > 0:
        raise ValidationError(f"bin width must be positive, got {h}")
    if weighted and mu.dimension != 2:
        raise ValidationError("the weighted distance measure is defined for d = 2")
    positions, _ = product_atoms(mu)
    span = positions.max(axis=0) - positions.min(axis=0)
    max_dist = float(np.sqrt(np.sum(span * span)))
    n_bins = int(max_dist / h) + 2
    acc = np.zeros(n_bins)
    diagonal = 0.0
    for diff, dist, wpair in _pair_scan(mu, pair_budget):
        if weighted:
            with np.errstate(divide="ignore", invalid="ignore"):
                wfac = np.abs(diff[..., 1]) / dist
            wfac[dist == 0.0] = 0.0
            wpair = wpair * wfac
        else:
            diagonal += float(np.sum(wpair[dist == 0.0]))
        bins = (dist / h).astype(np.int64)
        np.add.at(acc, bins.ravel(), wpair.ravel())
    return DistanceMeasure(
        bin_width=float(h),
        masses=acc,
        weighted=bool(weighted),
        total_mass=float(np.sum(acc)),
        diagonal_mass=diagonal,
    )


def weighted_mass(mu: ProductMeasure, pair_budget: int = DEFAULT_PAIR_BUDGET) -> float:
    """iint |x_2 - y_2| / |x - y| dmu dmu; strictly positive exactly when the
    second coordinate of the product is non-degenerate."""
    if mu.dimension != 2:
        raise ValidationError("the weighted mass is defined for d = 2")
    total = 0.0
    for diff, dist, wpair in _pair_scan(mu, pair_budget):
        with np.errstate(divide="ignore", invalid="ignore"):
            wfac = np.abs(diff[..., 1]) / dist
        wfac[dist == 0.0] = 0.0
        total += float(np.sum(wpair * wfac))
    return total


def energy_integral(
    mu: GridMeasure | ProductMeasure, s: float, pair_budget: int = DEFAULT_PAIR_BUDGET
) -> float:
    """I_s = sum over pairs x != y of w_x w_y |x - y|^(-s); the diagonal is
    excluded by convention (it diverges on atoms otherwise)."""
    if s < 0:
        raise ValidationError(f"s must be nonnegative, got {s}")
    if isinstance(mu, GridMeasure):
        positions = mu.positions[:, None]
        weights = mu.weights
    else:
        positions, weights = product_atoms(mu)
    n = positions.shape[0]
    _check_pair_budget(n, pair_budget)
    total = 0.0
    chunk = max(1, (1 << 21) // max(1, n))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = positions[start:stop, None, :] - positions[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        wpair = weights[start:stop, None] * weights[None, :]
        off = dist > 0.0
        total += float(np.sum(wpair[off] * dist[off] ** (-s)))
    return total


# ---------------------------------------------------------------------------
# Truncated Mattila integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MattilaQuadrature:
    """t-grid and angular controls for the truncated Mattila integral."""

    initial_t_nodes: int = 65
    t_rel_tol: float = 1e-7
    max_t_nodes: int = 1 << 15
    angular: QuadratureSpec = QuadratureSpec(node_count=64, rel_tol=3e-7)


@dataclass(frozen=True, eq=False)
class MattilaEstimate:
    """value = int_1^T sigma_w(t)^2 t^(d-1) dt on a geometric t grid.

    Convergence of the full integral is diagnosed, never asserted: the
    integrand slope must drop below -1 and the doubling ratios
    value(T)/value(T/2), ... must approach 1.
    """

    truncation: float
    value: float
    weighted: bool
    dimension: int
    t_values: np.ndarray
    sigma: np.ndarray
    integrand: np.ndarray
    partial_values: np.ndarray
    integrand_slope: float
    slope_stderr: float
    doubling_ratios: tuple[float, ...]
    t_nodes: int
    t_grid_converged: bool


def _log_trapezoid_cumulative(ts: np.ndarray, integrand: np.ndarray) -> np.ndarray:
    """Cumulative integral of f dt on a positive grid, trapezoid in log t."""
    tau = np.log(ts)
    g = integrand * ts  # f(t) dt = f(e^tau) e^tau dtau
    panels = 0.5 * (g[1:] + g[:-1]) * np.diff(tau)
    return np.concatenate(([0.0], np.cumsum(panels)))


def mattila_truncated(
    mu: ProductMeasure,
    truncation: float,
    weighted: bool = True,
    quadrature: MattilaQuadrature = MattilaQuadrature(),
) -> MattilaEstimate:
    """Evaluate the truncated Mattila integral with the chosen angular weight.

    sigma_w(t) comes from the circular/spherical average; the t integral is a
    log-trapezoid on a geometric grid that doubles until stable or until the
    node cap. Checkpoints at T/8, T/4, T/2 are folded into the grid so the
    doubling ratios are exact grid quantities.
    """
    T = float(truncation)
    if T < 1.0:
        raise ValidationError(f"truncation must be >= 1, got {T}")
    cap = validity_cap(mu)
    if T > cap:
        raise ValidityCapError(
            f"truncation {T} exceeds the discretization validity cap {cap:.6g}", cap
        )
    d = mu.dimension
    weight = "sin_theta" if weighted else "none"
    sigma_cache: dict[float, float] = {}

    def sigma(t: float) -> float:
        val = sigma_cache.get(t)
        if val is None:
            val, _, _ = spherical_average_detailed(mu, t, weight, quadrature.angular)
            sigma_cache[t] = val
        return val

    checkpoints = [T / 8.0, T / 4.0, T / 2.0]
    checkpoints = [c for c in checkpoints if c > 1.0]

    def build_grid(n: int) -> np.ndarray:
        base = np.exp(np.linspace(0.0, math.log(T), n))
        grid = np.unique(np.concatenate((base, np.asarray(checkpoints), [1.0, T])))
        return grid

    n = max(17, int(quadrature.initial_t_nodes))
    grid = build_grid(n)
    integrand_of = lambda ts: np.array([sigma(t) for t in ts]) ** 2 * ts ** (d - 1)
    integ = integrand_of(grid)
    value = float(_log_trapezoid_cumulative(grid, integ)[-1])
    converged = False
    while n < quadrature.max_t_nodes:
        n = 2 * n - 1
        grid = build_grid(n)
        integ = integrand_of(grid)
        new_value = float(_log_trapezoid_cumulative(grid, integ)[-1])
        done = abs(new_value - value) <= quadrature.t_rel_tol * max(abs(new_value), 1e-300)
        value = new_value
        if done:
            converged = True
            break

    partials = _log_trapezoid_cumulative(grid, integ)
    sig = np.sqrt(np.maximum(integ / grid ** (d - 1), 0.0))
    fit = loglog_fit(grid[integ > 0], integ[integ > 0])
    ratios = []
    marks = checkpoints + [T]
    for prev, cur in zip(marks, marks[1:]):
        pv = float(partials[np.searchsorted(grid, prev)])
        cv = float(partials[np.searchsorted(grid, cur)])
        if pv > 0:
            ratios.append(cv / pv)
    return MattilaEstimate(
        truncation=T,
        value=value,
        weighted=bool(weighted),
        dimension=d,
        t_values=grid,
        sigma=sig,
        integrand=integ,
        partial_values=partials,
        integrand_slope=fit.slope,
        slope_stderr=fit.stderr,
        doubling_ratios=tuple(ratios),
        t_nodes=int(grid.size),
        t_grid_converged=converged,
    )


# ---------------------------------------------------------------------------
# Distance-set coverage proxy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    """Covered length and density L2 norm of a distance histogram across
    coarsening widths: stabilizing covered length is the positive-measure
    signature, decay toward zero the measure-zero signature."""

    widths: tuple[float, ...]
    covered_lengths: tuple[float, ...]
    density_l2: tuple[float, ...]


def coverage_report(dm: DistanceMeasure, widths: Sequence[float]) -> CoverageReport:
    ws = [float(w) for w in widths]
    if not ws:
        raise ValidationError("need at least one width")
    for w in ws:
        if w < dm.bin_width:
            raise ValidationError(
                f"width {w} is below the native bin width {dm.bin_width}"
            )
    nz = np.nonzero(dm.masses)[0]
    masses = dm.masses[nz]
    lefts = nz * dm.bin_width
    covered, l2 = [], []
    for w in ws:
        coarse = np.floor(lefts / w).astype(np.int64)
        agg = np.bincount(coarse, weights=masses)
        covered.append(float(np.count_nonzero(agg) * w))
        l2.append(float(np.sum((agg / w) ** 2 * w)))
    return CoverageReport(
        widths=tuple(ws), covered_lengths=tuple(covered), density_l2=tuple(l2)
    )


# ---------------------------------------------------------------------------
# Dimension thresholds
# ---------------------------------------------------------------------------

Number = float | Fraction


def _as_number(x) -> Number:
    """ints, Fractions and 'p/q' strings stay exact; floats stay floats."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return float(x)


def product_sum_threshold(d: int) -> Fraction:
    """The critical total dimension d^2/(2d - 1) for d-fold products."""
    if d < 2:
        raise ValidationError(f"need d >= 2, got {d}")
    return Fraction(d * d, 2 * d - 1)


def derive_delta(alpha: float, beta: float) -> tuple[float, float]:
    """Balance the two decay branches of the angular split.

    With gamma = beta/2, the competing exponent gains are gamma0*(1 - alpha)
    (small-angle sector) and gamma - gamma0/2 (Cauchy-Schwarz sector); the
    best cut is gamma0 = gamma / (3/2 - alpha), giving the decay improvement
    delta = gamma0 * (1 - alpha). Returns (gamma0, delta).
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if not beta > 0.0:
        raise ValidationError(f"beta must be positive, got {beta}")
    gamma = beta / 2.0
    gamma0 = gamma / (1.5 - alpha)
    return gamma0, gamma0 * (1.0 - alpha)


def derive_delta_grid(alpha: float, beta: float, points: int = 2_000_001) -> tuple[float, float]:
    """Grid-search oracle for derive_delta: maximize
    min(gamma0*(1-alpha), gamma - gamma0/2) over gamma0 in (0, 2*gamma)."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if not beta > 0.0:
        raise ValidationError(f"beta must be positive, got {beta}")
    gamma = beta / 2.0
    g0 = np.linspace(0.0, 2.0 * gamma, points)[1:-1]
    objective = np.minimum(g0 * (1.0 - alpha), gamma - g0 / 2.0)
    i = int(np.argmax(objective))
    return float(g0[i]), float(objective[i])


@dataclass(frozen=True)
class ThresholdReport:
    """Margins of the dimension thresholds for distance sets of products.

    mixed_margin: s_A + s_B + max(s_A, s_B) - 2 (two factors; positive means
    the mixed-dimension criterion applies). product_sum_margin:
    sum s_j - d^2/(2d-1). regular_delta: the derived improvement for the
    equal-dimension Ahlfors-David regular route (requires alpha, C_nu, K),
    applying when alpha > 2/3 - delta. Exact rationals are preserved
    wherever the inputs are rational.
    """

    dims: tuple[Number, ...]
    d: int
    sum_threshold: Fraction
    product_sum_margin: Number
    mixed_margin: Number | None
    alpha: float | None
    c_nu: float | None
    k: float | None
    dz_beta: float | None
    gamma0: float | None
    regular_delta: float | None
    regular_threshold: float | None
    applicable: tuple[str, ...]


def threshold_report(
    dims: Sequence, alpha=None, c_nu=None, k: float = 1.0
) -> ThresholdReport:
    """Evaluate every threshold margin for the given per-factor dimensions.

    dims entries may be floats, ints, Fractions, or 'p/q' strings; exact
    inputs produce exact margins. alpha/c_nu/k feed the equal-dimension
    regular route via the energy-improvement exponent.
    """
    vals = [_as_number(x) for x in dims]
    d = len(vals)
    if d < 2:
        raise ValidationError(f"need at least 2 factor dimensions, got {d}")
    for j, v in enumerate(vals):
        if not 0 <= v <= 1:
            raise ValidationError(f"dims[{j}] must lie in [0, 1], got {v}")
    threshold = product_sum_threshold(d)
    total = sum(vals, start=Fraction(0)) if all(
        isinstance(v, Fraction) for v in vals
    ) else float(sum(float(v) for v in vals))
    product_sum_margin = total - threshold if isinstance(total, Fraction) else total - float(threshold)

    mixed_margin = None
    if d == 2:
        sa, sb = vals
        mixed_margin = sa + sb + max(sa, sb) - 2

    beta = gamma0 = delta = regular_threshold = None
    if alpha is not None and c_nu is not None:
        params = dz_beta(float(alpha), float(c_nu), float(k))
        beta = params.beta
        gamma0, delta = derive_delta(float(alpha), beta)
        regular_threshold = 2.0 / 3.0 - delta

    applicable = []
    if mixed_margin is not None and mixed_margin > 0:
        applicable.append("two_factor_mixed")
    if product_sum_margin > 0:
        applicable.append("product_sum")
    if delta is not None and alpha is not None and float(alpha) > regular_threshold:
        applicable.append("regular_equal_dim")
    return ThresholdReport(
        dims=tuple(vals),
        d=d,
        sum_threshold=threshold,
        product_sum_margin=product_sum_margin,
        mixed_margin=mixed_margin,
        alpha=None if alpha is None else float(alpha),
        c_nu=None if c_nu is None else float(c_nu),
        k=None if alpha is None or c_nu is None else float(k),
        dz_beta=beta,
        gamma0=gamma0,
        regular_delta=delta,
        regular_threshold=regular_threshold,
        applicable=tuple(applicable),
    )
