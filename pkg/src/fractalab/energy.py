"""Scale-r additive energy of a grid measure, by brute force and by sumset
autocorrelation.

The energy at scale r is the nu^4-mass of quadruples (u1, u2, u3, u4) whose
pair sums differ by strictly less than r:

    E(r) = nu^4 { |(u1 + u2) - (u3 + u4)| < r }.

Two routes compute it:

* bruteforce: a direct enumeration of all quadruples, grouped as ordered
  pair-sums. Exact by construction; guarded by an atom-count limit because
  the work is O(N^4).
* autocorrelation: the quadruple integral factors through the sumset
  distribution q = nu * nu on the integer index grid. q is accumulated
  exactly (no transform rounding, fixed pair order), and E(r) is a sliding
  window sum over q against q with prefix sums, O(M) after the convolution.

Both routes decide the strict window on the same float expression
(integer gap) * delta < r, so they agree to machine precision and the
1e-10 oracle gate in the tests is meaningful.

Smoothed fourth moments replace the sharp window by a Fejer cutoff:
space side  iiii psi(t(u1 - u2 + u3 - u4)) dnu^4, computed through the gap
autocorrelation of q; Fourier side (1/t) int psi_hat(eta/t) |nu_hat(eta)|^4
deta by quadrature over the compact transform support. The two agree by
Parseval and are tested against each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cutoff import CutoffFunction
from .errors import BudgetError, ValidationError
from .fitting import loglog_fit
from .measures import GridMeasure
from .quadrature import simpson_doubling

BRUTEFORCE_ATOM_LIMIT = 200
_MAX_GRID = 1 << 24  # dense sumset arrays beyond this are refused


@dataclass(frozen=True, eq=False)
class SumsetDistribution:
    """Distribution q = nu * nu over integer sum-indices [0, 2 * base**level)."""

    base: int
    level: int
    values: np.ndarray  # dense, index s -> q(s), length 2 * base**level - 1

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def delta(self) -> float:
        return float(self.base) ** (-self.level)

    @property
    def entries(self) -> dict[int, float]:
        nz = np.nonzero(self.values)[0]
        return {int(s): float(self.values[s]) for s in nz}

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.values))

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values))

    @property
    def support_diameter(self) -> float:
        nz = np.nonzero(self.values)[0]
        return float((nz[-1] - nz[0]) * self.delta)


def sumset_autocorrelation(nu: GridMeasure) -> SumsetDistribution:
    """Exact discrete self-convolution q(s) = sum_{i+j=s} w_i w_j.

    Accumulation is chunked over ordered atom pairs in index order, with no
    transform arithmetic, so repeated runs are bitwise identical.
    """
    grid = nu.grid_size
    if grid > _MAX_GRID:
        raise BudgetError(
            f"sumset grid 2*{grid} too large for a dense convolution; coarsen the level"
        )
    q = np.zeros(2 * grid - 1)
    idx = nu.indices
    w = nu.weights
    n = idx.size
    chunk = max(1, (1 << 22) // n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        sums = (idx[start:stop, None] + idx[None, :]).ravel()
        prods = (w[start:stop, None] * w[None, :]).ravel()
        np.add.at(q, sums, prods)
    return SumsetDistribution(base=nu.base, level=nu.level, values=q)


def _strict_window_gap(delta: float, r: float, max_gap: int) -> int:
    """Largest integer k in [0, max_gap] with float(k * delta) < r."""
    k = min(int(math.ceil(r / delta)) + 1, max_gap)
    while k > 0 and k * delta >= r:
        k -= 1
    return k


def _energy_from_sumset(q: np.ndarray, delta: float, r: float) -> float:
    m = q.size
    k = _strict_window_gap(delta, r, m - 1)
    cum = np.concatenate(([0.0], np.cumsum(q)))
    pos = np.arange(m)
    hi = np.minimum(pos + k, m - 1) + 1
    lo = np.maximum(pos - k, 0)
    return min(float(np.sum(q * (cum[hi] - cum[lo]))), 1.0)


def _energy_bruteforce(nu: GridMeasure, r: float) -> float:
    n = nu.atom_count
    if n > BRUTEFORCE_ATOM_LIMIT:
        raise BudgetError(
            f"bruteforce energy is O(N^4); refusing {n} atoms (limit {BRUTEFORCE_ATOM_LIMIT})"
        )
    idx = nu.indices
    w = nu.weights
    sums = (idx[:, None] + idx[None, :]).ravel()
    ww = (w[:, None] * w[None, :]).ravel()
    delta = nu.delta
    m = sums.size
    total = 0.0
    chunk = max(1, (1 << 22) // m)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        gaps = np.abs(sums[start:stop, None] - sums[None, :]).astype(float) * delta
        inner = (gaps < r) @ ww
        total += float(ww[start:stop] @ inner)
    return min(total, 1.0)


def additive_energy(nu: GridMeasure, r: float, algorithm: str = "autocorrelation") -> float:
    """E(r) = nu^4 { |(u1+u2) - (u3+u4)| < r } with positions u = index * delta.

    The window inequality is strict; grid gaps landing exactly on r are
    excluded. `algorithm` is 'bruteforce' (O(N^4) oracle, atom count capped)
    or 'autocorrelation' (exact convolution + prefix-sum window).
    """
    if not r > 0:
        raise ValidationError(f"window r must be positive, got {r}")
    if algorithm == "bruteforce":
        return _energy_bruteforce(nu, r)
    if algorithm == "autocorrelation":
        q = sumset_autocorrelation(nu)
        return _energy_from_sumset(q.values, q.delta, r)
    raise ValidationError(f"unknown algorithm {algorithm!r}")


@dataclass(frozen=True)
class EnergyProfile:
    """Additive energy sampled across scales, with the fitted decay exponent
    and the reference dimension it is compared against."""

    r_values: tuple[float, ...]
    energies: tuple[float, ...]
    fitted_exponent: float
    stderr: float
    alpha_ref: float

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.r_values, self.energies))

    @property
    def excess_over_alpha(self) -> float:
        """Fitted exponent minus the reference dimension (the margin the
        Dyatlov-Zahl bound predicts to be positive for regular sets)."""
        return self.fitted_exponent - self.alpha_ref


def dyadic_r_sweep(nu: GridMeasure, max_points: int = 12) -> list[float]:
    """Dyadic scales between 4*delta and the sumset support diameter;
    below 4*delta the discretization dominates."""
    diam = 2.0 * nu.diameter
    if diam <= 0.0:
        raise ValidationError("point mass has no scale sweep")
    floor_r = 4.0 * nu.delta
    rs = []
    r = diam / 2.0
    while r >= floor_r and len(rs) < max_points:
        rs.append(r)
        r /= 2.0
    if len(rs) < 3:
        raise ValidationError("fewer than 3 usable dyadic scales; deepen the level")
    return sorted(rs)


def energy_profile(nu: GridMeasure, r_values, alpha: float) -> EnergyProfile:
    """Sample E(r) over a geometric sweep (autocorrelation route) and fit
    the decay exponent of E against r on log-log axes."""
    rs = [float(r) for r in r_values]
    if len(rs) < 3:
        raise ValidationError(f"need at least 3 scales, got {len(rs)}")
    delta = nu.delta
    for r in rs:
        if not r > 0:
            raise ValidationError("scales must be positive")
        if r < delta:
            raise ValidationError(f"scale {r} is below the grid resolution {delta}")
    ratios = [rs[i + 1] / rs[i] for i in range(len(rs) - 1)]
    if max(ratios) - min(ratios) > 1e-6 * max(ratios):
        raise ValidationError("r_values must form a geometric sweep")
    q = sumset_autocorrelation(nu)
    energies = [_energy_from_sumset(q.values, q.delta, r) for r in rs]
    fit = loglog_fit(rs, energies)
    return EnergyProfile(
        r_values=tuple(rs),
        energies=tuple(energies),
        fitted_exponent=fit.slope,
        stderr=fit.stderr,
        alpha_ref=float(alpha),
    )


# ---------------------------------------------------------------------------
# Smoothed fourth moments (Fejer window instead of the sharp scale-r cut)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _gap_correlation(nu: GridMeasure) -> tuple[np.ndarray, int]:
    """Autocorrelation c(g) = sum_a q(a) q(a+g) of the sumset distribution,
    returned as a dense array over g in [-(L-1), L-1] plus the offset L-1.

    Small arrays use the direct convolution; large ones use an FFT (the
    smoothed moments tolerate 1e-12 rounding; the scale-r energy path never
    touches this)."""
    q = sumset_autocorrelation(nu).values
    m = q.size
    if m <= 4096:
        c = np.convolve(q, q[::-1])
    else:
        size = 1
        while size < 2 * m - 1:
            size <<= 1
        fq = np.fft.rfft(q, size)
        circ = np.fft.irfft(fq * np.conj(fq), size)
        c = np.empty(2 * m - 1)
        c[m - 1 :] = circ[:m]
        c[: m - 1] = circ[size - (m - 1) :]
        c = np.maximum((c + c[::-1]) / 2.0, 0.0)
    c.setflags(write=False)
    return c, m - 1


def smoothed_fourth_moment(nu: GridMeasure, t: float, cutoff: CutoffFunction) -> float:
    """Space-side moment iiii psi(t(u1 - u2 + u3 - u4)) dnu^4, evaluated
    exactly through the sumset gap correlation."""
    if not t > 0:
        raise ValidationError(f"t must be positive, got {t}")
    c, offset = _gap_correlation(nu)
    gaps = (np.arange(c.size) - offset) * nu.delta
    return float(np.dot(c, cutoff(t * gaps)))


def _fourth_moment_quadrature(nu: GridMeasure, t: float, cutoff: CutoffFunction) -> float:
    span = cutoff.transform_support * t
    def integrand(eta):
        vals = nu.transform(eta)
        return (np.abs(vals) ** 4) * cutoff.transform(eta / t)
    initial = max(64, 2 * int(8.0 * span))
    value, _, _ = simpson_doubling(integrand, 0.0, span, initial_intervals=initial, rel_tol=1e-9)
    return (2.0 / t) * value


def smoothed_energy(nu: GridMeasure, t: float, cutoff: CutoffFunction) -> tuple[float, float]:
    """Evaluate the smoothed fourth moment on both sides of Parseval.

    Returns (space_side, fourier_side): the quadruple sum against
    psi(t * gap), and the quadrature of (1/t) psi_hat(eta/t) |nu_hat(eta)|^4
    over the compact support of psi_hat(./t). The two agree within
    quadrature tolerance.
    """
    if t < 1.0:
        raise ValidationError(f"t must be >= 1, got {t}")
    space = smoothed_fourth_moment(nu, t, cutoff)
    fourier = _fourth_moment_quadrature(nu, t, cutoff)
    return space, fourier


# ---------------------------------------------------------------------------
# Dyatlov-Zahl improvement exponent
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DZParams:
    """Inputs and output of the Dyatlov-Zahl energy bound
    E(X, nu, r) <= C~ r^(alpha + beta).

    K is a configurable absolute constant (the bound's statement fixes no
    value; it defaults to 1 here and is always reported). C~ depends only on
    alpha and C_nu and is never computed, only carried through if supplied.
    """

    alpha: float
    c_nu: float
    k: float
    beta: float
    c_tilde: float | None = None


def dz_beta(alpha: float, c_nu: float, k: float = 1.0) -> DZParams:
    """Closed form beta = alpha * exp(-exp(K sqrt(1 + log C_nu) / sqrt(1 - alpha))).

    Strictly positive in exact arithmetic, strictly decreasing in C_nu and
    in K; singular as alpha -> 1, hence the open-interval requirement. The
    double exponential underflows float64 to 0.0 once the inner argument
    exceeds ~6.57; callers feeding the result onward (derive_delta) reject
    beta = 0, so underflow surfaces as a validation error, not as a wrong
    number.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if c_nu < 1.0:
        raise ValidationError(f"C_nu must be >= 1, got {c_nu}")
    if not k > 0:
        raise ValidationError(f"K must be positive, got {k}")
    inner = k * math.sqrt(1.0 + math.log(c_nu)) / math.sqrt(1.0 - alpha)
    beta = alpha * math.exp(-math.exp(inner))
    return DZParams(alpha=float(alpha), c_nu=float(c_nu), k=float(k), beta=beta)
