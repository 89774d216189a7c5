"""Discretized Cantor-type measures on the unit interval, and their products.

Grid convention
---------------
A measure at construction depth ``level`` over subdivision ``base`` lives on
the uniform grid of resolution ``delta = base**-level``; an atom with integer
index ``i`` sits at position ``i * delta`` in [0, 1). Indices are kept exact
so sums and gaps of positions can be computed in integer arithmetic.

Balls are closed, ``B(x, r) = [x - r, x + r]``, and regularity scans evaluate
ball mass only at atom centers (points of the support). Both choices are part
of the contract: the exhaustive oracles in the test suite use the same
conventions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .fitting import loglog_fit

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class CantorSpec:
    """Digit-restricted Cantor construction: keep ``digits`` out of ``base``
    at every one of ``level`` subdivision rounds."""

    base: int
    digits: tuple[int, ...]
    level: int

    def __post_init__(self):
        if int(self.base) != self.base or self.base < 2:
            raise ValidationError(f"base must be an integer >= 2, got {self.base!r}")
        digits = tuple(int(d) for d in self.digits)
        object.__setattr__(self, "digits", digits)
        if len(digits) == 0:
            raise ValidationError("digits must be nonempty")
        if any(d < 0 or d >= self.base for d in digits):
            raise ValidationError(
                f"digits must lie in [0, base), got {digits} for base {self.base}"
            )
        if any(b <= a for a, b in zip(digits, digits[1:])):
            raise ValidationError(f"digits must be strictly increasing, got {digits}")
        if int(self.level) != self.level or self.level < 0:
            raise ValidationError(f"level must be an integer >= 0, got {self.level!r}")

    @property
    def dimension(self) -> float:
        """Nominal dimension log |digits| / log base, in [0, 1]."""
        return math.log(len(self.digits)) / math.log(self.base)

    def to_dict(self) -> dict:
        return {"base": self.base, "digits": list(self.digits), "level": self.level}

    @staticmethod
    def from_dict(d: dict) -> "CantorSpec":
        return CantorSpec(base=int(d["base"]), digits=tuple(d["digits"]), level=int(d["level"]))


MIDDLE_THIRDS_DIMENSION = math.log(2) / math.log(3)


def middle_thirds(level: int) -> CantorSpec:
    """The classical base-3 construction keeping digits {0, 2}."""
    return CantorSpec(base=3, digits=(0, 2), level=level)


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Probability measure on the uniform grid of [0, 1).

    ``indices`` are strictly increasing int64 grid indices in
    [0, base**level); ``weights`` are nonnegative and sum to 1 within 1e-12.
    Instances are immutable (arrays are marked read-only) and hash by
    identity, which lets expensive per-measure precomputations be cached.
    """

    base: int
    level: int
    indices: np.ndarray
    weights: np.ndarray
    dimension_hint: float | None = None

    def __post_init__(self):
        if int(self.base) != self.base or self.base < 2:
            raise ValidationError(f"base must be an integer >= 2, got {self.base!r}")
        if int(self.level) != self.level or self.level < 0:
            raise ValidationError(f"level must be an integer >= 0, got {self.level!r}")
        idx = np.ascontiguousarray(np.asarray(self.indices, dtype=np.int64))
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        if idx.ndim != 1 or w.ndim != 1 or idx.size != w.size:
            raise ValidationError("indices and weights must be 1-d arrays of equal length")
        if idx.size == 0:
            raise ValidationError("a measure needs at least one atom")
        if np.any(np.diff(idx) <= 0):
            raise ValidationError("indices must be strictly increasing (no duplicates)")
        grid = self.grid_size
        if idx[0] < 0 or idx[-1] >= grid:
            raise ValidationError(
                f"indices must lie in [0, {grid}) for base {self.base}, level {self.level}"
            )
        if np.any(w < 0):
            raise ValidationError("weights must be nonnegative")
        total = float(np.sum(w))
        if abs(total - 1.0) > _MASS_TOL:
            raise ValidationError(f"weights must sum to 1 within {_MASS_TOL}, got {total!r}")
        idx.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)
        if self.dimension_hint is not None:
            h = float(self.dimension_hint)
            if not 0.0 <= h <= 1.0:
                raise ValidationError(f"dimension_hint must be in [0, 1], got {h}")
            object.__setattr__(self, "dimension_hint", h)

    @property
    def grid_size(self) -> int:
        return self.base**self.level

    @property
    def delta(self) -> float:
        """Grid resolution base**-level."""
        return float(self.base) ** (-self.level)

    @property
    def positions(self) -> np.ndarray:
        return self.indices * self.delta

    @property
    def atom_count(self) -> int:
        return int(self.indices.size)

    @property
    def atoms(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.weights.tolist()))

    @property
    def diameter(self) -> float:
        return float((self.indices[-1] - self.indices[0]) * self.delta)

    def ball_mass(self, centers, r: float) -> np.ndarray:
        """Mass of the closed balls [c - r, c + r] for each center c."""
        pos = self.positions
        cum = np.concatenate(([0.0], np.cumsum(self.weights)))
        c = np.atleast_1d(np.asarray(centers, dtype=float))
        lo = np.searchsorted(pos, c - r, side="left")
        hi = np.searchsorted(pos, c + r, side="right")
        return cum[hi] - cum[lo]

    def transform(self, xi) -> np.ndarray | complex:
        """Fourier transform sum_j w_j exp(-2 pi i x_j xi), vectorized in xi."""
        xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
        pos = self.positions
        out = np.empty(xi_arr.shape, dtype=complex)
        # chunked so the phase matrix stays within a few tens of MB
        chunk = max(1, (1 << 22) // max(1, pos.size))
        for start in range(0, xi_arr.size, chunk):
            block = xi_arr[start : start + chunk]
            phases = np.exp((-2j * np.pi) * np.outer(block, pos))
            out[start : start + block.size] = phases @ self.weights
        if np.isscalar(xi) or np.asarray(xi).ndim == 0:
            return complex(out[0])
        return out


def build_cantor(spec: CantorSpec) -> GridMeasure:
    """Realize a CantorSpec as a GridMeasure: atoms are the level-k digit
    expansions over the kept digits, each carrying equal weight."""
    digits = np.asarray(spec.digits, dtype=np.int64)
    indices = np.zeros(1, dtype=np.int64)
    for _ in range(spec.level):
        indices = (indices[:, None] * spec.base + digits[None, :]).ravel()
    n = indices.size  # == len(digits) ** level
    weights = np.full(n, float(len(spec.digits)) ** (-spec.level))
    return GridMeasure(
        base=spec.base,
        level=spec.level,
        indices=indices,
        weights=weights,
        dimension_hint=spec.dimension,
    )


def point_mass() -> GridMeasure:
    """Unit mass at the origin (level-0 grid)."""
    return GridMeasure(base=2, level=0, indices=np.array([0]), weights=np.array([1.0]))


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """Ordered product of >= 2 grid measures, one per coordinate."""

    factors: tuple[GridMeasure, ...]
    dims: tuple[float, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        dims = tuple(float(s) for s in self.dims)
        if len(factors) < 2:
            raise ValidationError(f"a product needs at least 2 factors, got {len(factors)}")
        if len(dims) != len(factors):
            raise ValidationError(
                f"dims length {len(dims)} does not match factor count {len(factors)}"
            )
        for j, s in enumerate(dims):
            if not 0.0 <= s <= 1.0:
                raise ValidationError(f"dims[{j}] must lie in [0, 1], got {s}")
        for f in factors:
            if not isinstance(f, GridMeasure):
                raise ValidationError("factors must be GridMeasure instances")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "dims", dims)

    @property
    def dimension(self) -> int:
        """Ambient dimension d (number of factors)."""
        return len(self.factors)

    @property
    def total_dim(self) -> float:
        return float(sum(self.dims))

    @property
    def atom_count(self) -> int:
        n = 1
        for f in self.factors:
            n *= f.atom_count
        return n


def build_product(factors: Sequence[GridMeasure], dims: Sequence[float]) -> ProductMeasure:
    return ProductMeasure(factors=tuple(factors), dims=tuple(dims))


# ---------------------------------------------------------------------------
# Regularity scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    """Two-sided ball-mass regularity audit: extremal values of
    nu(B(x, r)) / r**alpha over atom centers x, per scale."""

    alpha: float
    cap: float
    scales: tuple[float, ...]
    per_scale: tuple[tuple[float, float], ...]  # (min ratio, max ratio)
    c_lower: float
    c_upper: float
    c_nu: float
    passed: bool


def check_regularity(
    nu: GridMeasure, alpha: float, scales: Iterable[float], cap: float
) -> RegularityReport:
    """Scan closed-ball masses at every atom center against r**alpha.

    The regularity constant is c_nu = max(C_upper, 1/C_lower): the smallest C
    for which C^-1 r^alpha <= mass <= C r^alpha holds over all scanned scales
    and centers. Scales below the grid resolution are rejected because mass
    ratios are meaningless under the discretization scale.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}")
    scales = tuple(float(r) for r in scales)
    if len(scales) == 0:
        raise ValidationError("need at least one scale")
    delta = nu.delta
    for r in scales:
        if r < delta:
            raise ValidationError(
                f"scale {r} is below the grid resolution {delta}; regularity is "
                "meaningless below the discretization scale"
            )
        if r > 1.0:
            raise ValidationError(f"scale {r} exceeds the unit scale")
    centers = nu.positions
    per_scale = []
    for r in scales:
        ratios = nu.ball_mass(centers, r) / r**alpha
        per_scale.append((float(ratios.min()), float(ratios.max())))
    c_lower = min(lo for lo, _ in per_scale)
    c_upper = max(hi for _, hi in per_scale)
    c_nu = max(c_upper, 1.0 / c_lower) if c_lower > 0 else math.inf
    return RegularityReport(
        alpha=float(alpha),
        cap=float(cap),
        scales=scales,
        per_scale=tuple(per_scale),
        c_lower=c_lower,
        c_upper=c_upper,
        c_nu=float(c_nu),
        passed=bool(c_nu <= cap),
    )


def frostman_fit(nu: GridMeasure, scales: Iterable[float]) -> tuple[float, float]:
    """Empirical dimension estimate: slope of log max-ball-mass vs log r.

    Returns (slope, stderr). For an exactly self-similar measure sampled at
    its own scale ladder the slope reproduces the construction dimension.
    """
    scales = [float(r) for r in scales]
    if len(scales) < 3:
        raise ValidationError(f"need at least 3 scales, got {len(scales)}")
    centers = nu.positions
    masses = [float(nu.ball_mass(centers, r).max()) for r in scales]
    fit = loglog_fit(scales, masses)
    return fit.slope, fit.stderr


# ---------------------------------------------------------------------------
# Serialization: line-oriented `index,weight` with a header
# ---------------------------------------------------------------------------

def grid_measure_to_text(nu: GridMeasure) -> str:
    """Serialize to the `index,weight` line format. Weights are written with
    shortest round-trip float repr, so the round-trip is bit-exact."""
    header = f"# grid-measure base={nu.base} level={nu.level}"
    if nu.dimension_hint is not None:
        header += f" dimension_hint={nu.dimension_hint!r}"
    lines = [header, "index,weight"]
    for i, w in zip(nu.indices.tolist(), nu.weights.tolist()):
        lines.append(f"{i},{w!r}")
    return "\n".join(lines) + "\n"


def grid_measure_from_text(text: str) -> GridMeasure:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# grid-measure"):
        raise ValidationError("missing grid-measure header line")
    fields = {}
    for token in lines[0].split()[2:]:
        key, _, value = token.partition("=")
        fields[key] = value
    try:
        base = int(fields["base"])
        level = int(fields["level"])
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad grid-measure header: {lines[0]!r}") from exc
    hint = float(fields["dimension_hint"]) if "dimension_hint" in fields else None
    body = lines[1:]
    if body and body[0].lower() == "index,weight":
        body = body[1:]
    indices, weights = [], []
    for ln in body:
        si, _, sw = ln.partition(",")
        try:
            indices.append(int(si))
            weights.append(float(sw))
        except ValueError as exc:
            raise ValidationError(f"bad atom line: {ln!r}") from exc
    return GridMeasure(
        base=base,
        level=level,
        indices=np.array(indices, dtype=np.int64),
        weights=np.array(weights, dtype=float),
        dimension_hint=hint,
    )


def save_grid_measure(nu: GridMeasure, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(grid_measure_to_text(nu))


def load_grid_measure(path) -> GridMeasure:
    with open(path, "r", encoding="ascii") as fh:
        return grid_measure_from_text(fh.read())
