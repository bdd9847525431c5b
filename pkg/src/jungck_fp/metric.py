"""Interval domains, seeded sample grids, and evaluable selfmaps.

Everything downstream works on a real interval equipped with the Euclidean
metric ``d(a, b) = |a - b|``.  Maps are plain callables wrapped in
:class:`ScalarMap`, which enforce finiteness and optionally a declared range.
All types are immutable after construction and map evaluation is expected to
be pure, so the operations here are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "DEFAULT_SCAN_RESOLUTION",
    "Domain",
    "MapEvaluationError",
    "PreimageScanner",
    "PreimageSearch",
    "RangeContainmentReport",
    "SampleGrid",
    "ScalarMap",
    "check_range_containment",
    "distance",
    "find_preimages",
    "sample_grid",
]

# Subintervals used when scanning for sign-change brackets of T(q) = v.
DEFAULT_SCAN_RESOLUTION = 1024

# brentq cannot go below 4*eps relative tolerance.
_BRENTQ_RTOL = 4.0 * np.finfo(float).eps

_DUPLICATE_TOL = 1e-15


class MapEvaluationError(ValueError):
    """A map or gauge produced a non-finite value on its domain."""


@dataclass(frozen=True)
class Domain:
    """Real interval [lo, hi], endpoints optionally open."""

    lo: float
    hi: float
    closed_ends: tuple[bool, bool] = (True, True)

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError(f"domain endpoints must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValueError(f"domain requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, p: float) -> bool:
        left = self.lo <= p if self.closed_ends[0] else self.lo < p
        right = p <= self.hi if self.closed_ends[1] else p < self.hi
        return bool(left and right)

    def clip(self, p: float) -> float:
        return float(min(max(p, self.lo), self.hi))


@dataclass(frozen=True)
class ScalarMap:
    """An evaluable selfmap of a :class:`Domain` (the roles S and T).

    ``fn`` may be scalar-only or numpy-vectorized; :meth:`eval_array` falls
    back to a scalar loop when the callable rejects arrays.  Non-finite
    values raise :class:`MapEvaluationError` naming the offending point.
    """

    fn: Callable[[float], float]
    domain: Domain
    label: str = ""
    declared_range: Domain | None = None

    def __call__(self, x: float) -> float:
        y = float(self.fn(x))
        if not np.isfinite(y):
            raise MapEvaluationError(
                f"map {self.label or '<anonymous>'} returned non-finite value at x={x!r}"
            )
        return y

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        try:
            ys = np.asarray(self.fn(xs), dtype=float)
            if ys.shape != xs.shape:
                raise TypeError("shape mismatch")
        except (TypeError, ValueError):
            ys = np.array([float(self.fn(float(v))) for v in xs.ravel()]).reshape(xs.shape)
        if not np.all(np.isfinite(ys)):
            bad = xs.ravel()[np.flatnonzero(~np.isfinite(ys.ravel()))[0]]
            raise MapEvaluationError(
                f"map {self.label or '<anonymous>'} returned non-finite value at x={bad!r}"
            )
        return ys

    def check_declared_range(self, grid: "SampleGrid") -> list[float]:
        """Grid points whose image escapes the declared range (empty if none)."""
        if self.declared_range is None:
            return []
        ys = self.eval_array(grid.points)
        return [float(x) for x, y in zip(grid.points, ys) if not self.declared_range.contains(y)]


def distance(a, b):
    """Euclidean metric on the real line; works on scalars and arrays."""
    return abs(a - b)


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Sorted, duplicate-free points inside a domain, tagged with provenance."""

    points: np.ndarray
    strategy: str
    seed: int
    domain: Domain

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("grid needs a one-dimensional, nonempty point list")
        if np.any(np.diff(pts) <= _DUPLICATE_TOL):
            raise ValueError("grid points must be strictly ascending (tolerance 1e-15)")
        for p in (pts[0], pts[-1]):
            if not self.domain.contains(float(p)):
                raise ValueError(f"grid point {p!r} lies outside the domain")

    def __len__(self) -> int:
        return int(self.points.size)


def sample_grid(domain: Domain, n: int, strategy: str = "uniform", seed: int = 0) -> SampleGrid:
    """Deterministically sample ``n`` points covering the domain.

    ``uniform`` is equispaced with endpoints included when closed (open
    endpoints are inset by half a cell).  ``uniform+jitter`` perturbs the
    interior points by less than half a cell using a seeded generator, so the
    result is bitwise reproducible for a fixed seed and stays sorted.
    """
    if n < 2:
        raise ValueError(f"grid needs at least 2 points, got {n}")
    pts = np.linspace(domain.lo, domain.hi, n)
    half_cell = 0.5 * domain.span / (n - 1)
    if not domain.closed_ends[0]:
        pts[0] += half_cell
    if not domain.closed_ends[1]:
        pts[-1] -= half_cell
    if strategy == "uniform":
        pass
    elif strategy == "uniform+jitter":
        rng = np.random.default_rng(seed)
        jitter = rng.uniform(-0.45, 0.45, size=max(n - 2, 0)) * 2.0 * half_cell
        pts[1:-1] += jitter
    else:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    return SampleGrid(points=pts, strategy=strategy, seed=seed, domain=domain)


def grid_from_points(domain: Domain, points: Sequence[float]) -> SampleGrid:
    """Wrap user-supplied points as a grid (sorted and validated)."""
    pts = np.sort(np.asarray(points, dtype=float))
    return SampleGrid(points=pts, strategy="user-supplied", seed=0, domain=domain)


@dataclass(frozen=True)
class PreimageSearch:
    """Verified preimages of one value, plus brackets the refiner gave up on."""

    value: float
    roots: tuple[float, ...]
    unverified_brackets: tuple[tuple[float, float], ...]

    @property
    def found(self) -> bool:
        return len(self.roots) > 0

    @property
    def smallest(self) -> float:
        if not self.roots:
            raise ValueError("no verified preimage")
        return self.roots[0]


class PreimageScanner:
    """Solves T(q) = v on the domain by bracket scanning plus Brent refinement.

    The scan grid and the map values on it are cached, so repeated solves
    against the same map (the inner loop of the iteration engine) cost one
    vectorized evaluation total.  Brackets whose refined root does not
    reproduce the target within ``rf_tol`` (jump discontinuities) are kept as
    ``unverified_brackets`` rather than silently dropped.
    """

    def __init__(self, m: ScalarMap, resolution: int = DEFAULT_SCAN_RESOLUTION) -> None:
        if resolution < 2:
            raise ValueError("scan resolution must be >= 2")
        self.map = m
        self.grid = np.linspace(m.domain.lo, m.domain.hi, resolution + 1)
        self.values = m.eval_array(self.grid)

    def preimages(self, value: float, rf_tol: float = 1e-12) -> PreimageSearch:
        f = self.values - value
        roots: list[float] = [float(q) for q, fv in zip(self.grid, f) if abs(fv) <= rf_tol]
        unverified: list[tuple[float, float]] = []
        sign = np.sign(f)
        for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
            a, b = float(self.grid[i]), float(self.grid[i + 1])
            root = float(brentq(lambda q: self.map(q) - value, a, b,
                                xtol=1e-15, rtol=_BRENTQ_RTOL))
            if abs(self.map(root) - value) <= rf_tol:
                roots.append(root)
            else:
                unverified.append((a, b))
        merged = _merge_close(sorted(roots), tol=1e-9 * self.map.domain.span)
        return PreimageSearch(value=float(value), roots=tuple(merged),
                              unverified_brackets=tuple(unverified))


def find_preimages(m: ScalarMap, value: float, *, rf_tol: float = 1e-12,
                   resolution: int = DEFAULT_SCAN_RESOLUTION) -> PreimageSearch:
    """One-shot preimage search; build a :class:`PreimageScanner` for many."""
    return PreimageScanner(m, resolution=resolution).preimages(value, rf_tol=rf_tol)


def _merge_close(sorted_vals: Iterable[float], tol: float) -> list[float]:
    out: list[float] = []
    for v in sorted_vals:
        if out and v - out[-1] <= tol:
            continue
        out.append(v)
    return out


@dataclass(frozen=True)
class RangeContainmentReport:
    """Sampled evidence for S(M) being contained in T(M)."""

    holds: bool
    checked: int
    witnesses: tuple[float, ...]
    undecided: tuple[float, ...]


def check_range_containment(S: ScalarMap, T: ScalarMap, grid: SampleGrid, *,
                            rf_tol: float = 1e-12,
                            resolution: int = DEFAULT_SCAN_RESOLUTION) -> RangeContainmentReport:
    """For every grid point p, look for q in the domain with T(q) = S(p).

    A point with no verified preimage and no sign-change bracket at all is a
    witness against containment.  A point whose only brackets could not be
    verified (the root finder landed on a jump) is reported ``undecided``;
    those do not falsify the containment but are never dropped.
    """
    if S.domain != T.domain or S.domain != grid.domain:
        raise ValueError("maps and grid must share one domain")
    scanner = PreimageScanner(T, resolution=resolution)
    witnesses: list[float] = []
    undecided: list[float] = []
    for p in grid.points:
        search = scanner.preimages(S(float(p)), rf_tol=rf_tol)
        if search.found:
            continue
        if search.unverified_brackets:
            undecided.append(float(p))
        else:
            witnesses.append(float(p))
    return RangeContainmentReport(
        holds=not witnesses,
        checked=len(grid),
        witnesses=tuple(witnesses),
        undecided=tuple(undecided),
    )
