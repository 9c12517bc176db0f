"""Pick one configuration on a fitted boundary.

The grid is split by the sign of ``g``; each side's centre of gravity uses
``|z|`` as mass. The segment joining the two centres is intersected with
``g = 0`` and the nearest evaluated configuration is reported alongside.
All geometry happens in transformed coordinates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, EmptySide, InputError, NoSignChange, ZeroMass
from .grid import Direction, EvalGrid, TransformSpec

log = logging.getLogger(__name__)

__all__ = [
    "PartitionResult",
    "Intersection",
    "RepresentativeResult",
    "RESTRICTIONS",
    "partition",
    "mass_shift_for",
    "cog",
    "boundary_intersection",
    "nearest_grid_point",
    "representative_point",
]

RESTRICTIONS = ("all", "good-side", "side1", "side2")
N_SCAN = 1024
ROOT_TOL = 1e-10


def _points(grid_or_points) -> np.ndarray:
    if isinstance(grid_or_points, EvalGrid):
        return grid_or_points.points
    pts = np.asarray(grid_or_points, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


@dataclass(frozen=True)
class PartitionResult:
    """Side label (1 or 2) per point; side 1 is ``g <= 0``."""

    sides: np.ndarray
    g: np.ndarray

    @property
    def indices1(self) -> np.ndarray:
        return np.flatnonzero(self.sides == 1)

    @property
    def indices2(self) -> np.ndarray:
        return np.flatnonzero(self.sides == 2)

    def indices(self, side: int) -> np.ndarray:
        return self.indices1 if side == 1 else self.indices2

    @property
    def sizes(self) -> tuple[int, int]:
        return int(np.sum(self.sides == 1)), int(np.sum(self.sides == 2))


def partition(grid, params, allow_empty: bool = False) -> PartitionResult:
    g = np.asarray(params.value(_points(grid)), dtype=float)
    sides = np.where(g <= 0, 1, 2)
    result = PartitionResult(sides, g)
    if not allow_empty and min(result.sizes) == 0:
        raise EmptySide(f"fitted boundary leaves a side empty (sizes {result.sizes})")
    return result


def mass_shift_for(z) -> float | None:
    """Shift that makes every ``z + shift`` positive; ``None`` means unit
    masses (constant ``z``)."""
    z = np.asarray(z, dtype=float)
    lo, hi = float(z.min()), float(z.max())
    if hi == lo:
        return None
    if lo <= 0:
        return -lo + 0.05 * (hi - lo)
    return 0.0


def cog(grid, indices, mass_shift: float | None = 0.0, metrics=None) -> np.ndarray:
    """``|z|``-weighted mean of the points in ``indices``.

    ``mass_shift`` is added to ``z`` before taking absolute values; ``None``
    gives every point unit mass.
    """
    pts = _points(grid)
    z = grid.metrics if metrics is None else np.asarray(metrics, dtype=float)
    idx = np.asarray(indices, dtype=int)
    if idx.size == 0:
        raise EmptySide("centre of gravity of an empty index set")
    if mass_shift is None:
        w = np.ones(idx.size)
    else:
        w = np.abs(z[idx] + mass_shift)
    total = w.sum()
    if not total > 0:
        raise ZeroMass("total mass on this side is zero")
    return (w @ pts[idx]) / total


@dataclass(frozen=True)
class Intersection:
    point: np.ndarray
    t: float
    g: float
    crossings: int


def boundary_intersection(params, p1, p2, n_scan: int = N_SCAN, tol: float = ROOT_TOL) -> Intersection:
    """First crossing of ``g = 0`` on the segment from ``p1`` towards ``p2``.

    ``p1`` and ``p2`` must lie on different sides (``g <= 0`` vs ``g > 0``).
    A uniform pre-scan locates the first side change, then bisection
    shrinks it until ``|g| <= tol`` or the bracket cannot be split further.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise DimensionMismatch("segment endpoints differ in dimension")
    d = p2 - p1

    def h(t):
        return float(params.value(p1 + t * d))

    if (h(0.0) <= 0) == (h(1.0) <= 0):
        raise NoSignChange("both centres of gravity lie on the same side of the boundary")
    ts = np.linspace(0.0, 1.0, n_scan)
    hs = np.asarray(params.value(p1[None, :] + ts[:, None] * d[None, :]), dtype=float)
    flags = hs <= 0
    changes = np.flatnonzero(flags[1:] != flags[:-1])
    if changes.size > 1:
        log.info("segment crosses the boundary %d times; using the first from p1", changes.size)
    k = int(changes[0])
    lo, hi = float(ts[k]), float(ts[k + 1])
    h_lo, h_hi = float(hs[k]), float(hs[k + 1])
    if abs(h_lo) <= tol:
        return Intersection(p1 + lo * d, lo, h_lo, int(changes.size))
    if abs(h_hi) <= tol:
        return Intersection(p1 + hi * d, hi, h_hi, int(changes.size))
    lo_flag = h_lo <= 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        h_mid = h(mid)
        if abs(h_mid) <= tol:
            return Intersection(p1 + mid * d, mid, h_mid, int(changes.size))
        if (h_mid <= 0) == lo_flag:
            lo, h_lo = mid, h_mid
        else:
            hi, h_hi = mid, h_mid
    t, val = (lo, h_lo) if abs(h_lo) <= abs(h_hi) else (hi, h_hi)
    return Intersection(p1 + t * d, t, val, int(changes.size))


def nearest_grid_point(grid, point, restrict_to: str | int = "all", part: PartitionResult | None = None):
    """Index and coordinates of the grid point closest to ``point``.

    ``restrict_to`` is ``"all"``, ``"side1"``/1 or ``"side2"``/2 (the latter
    need ``part``). Ties go to the lowest index.
    """
    pts = _points(grid)
    point = np.asarray(point, dtype=float)
    if point.shape != (pts.shape[1],):
        raise DimensionMismatch(f"point has shape {point.shape}, grid has {pts.shape[1]} dimensions")
    if restrict_to in ("all", None):
        candidates = np.arange(pts.shape[0])
    else:
        side = {"side1": 1, "side2": 2, 1: 1, 2: 2}.get(restrict_to)
        if side is None:
            raise InputError(f"unknown restriction {restrict_to!r}")
        if part is None:
            raise InputError("a partition is needed to restrict to one side")
        candidates = part.indices(side)
    if candidates.size == 0:
        raise EmptySide(f"no grid points available under restriction {restrict_to!r}")
    dist2 = np.sum((pts[candidates] - point) ** 2, axis=1)
    i = int(candidates[int(np.argmin(dist2))])
    return i, pts[i].copy()


def _user(transform: TransformSpec | None, u: np.ndarray) -> np.ndarray:
    return u.copy() if transform is None else transform.inverse(u)


@dataclass
class RepresentativeResult:
    cog1: np.ndarray
    cog2: np.ndarray
    boundary_point: np.ndarray
    t: float
    g_at_point: float
    crossings: int
    nearest_index: int
    nearest_point: np.ndarray
    nearest_side1_index: int
    nearest_side2_index: int
    restrict: str
    restrict_side: int | None
    good_side: int
    side_means: tuple[float, float]
    mass_shift: float | None
    transform: TransformSpec | None = field(default=None, repr=False)

    def user(self, name: str) -> np.ndarray:
        return _user(self.transform, getattr(self, name))

    def to_dict(self, grid_points: np.ndarray | None = None) -> dict:
        u = self.user
        d = {
            "boundary_point": u("boundary_point").tolist(),
            "nearest_point": u("nearest_point").tolist(),
            "nearest_index": self.nearest_index,
            "cog1": u("cog1").tolist(),
            "cog2": u("cog2").tolist(),
            "nearest_side1_index": self.nearest_side1_index,
            "nearest_side2_index": self.nearest_side2_index,
            "restrict": self.restrict,
            "restrict_side": self.restrict_side,
            "good_side": self.good_side,
            "side_means": list(self.side_means),
            "mass_shift": self.mass_shift,
            "segment_t": self.t,
            "g_at_boundary_point": self.g_at_point,
            "crossings": self.crossings,
            "transformed": {
                "boundary_point": self.boundary_point.tolist(),
                "nearest_point": self.nearest_point.tolist(),
                "cog1": self.cog1.tolist(),
                "cog2": self.cog2.tolist(),
            },
        }
        if grid_points is not None:
            d["nearest_side1_point"] = _user(self.transform, grid_points[self.nearest_side1_index]).tolist()
            d["nearest_side2_point"] = _user(self.transform, grid_points[self.nearest_side2_index]).tolist()
        return d


def good_side_of(part: PartitionResult, z, direction) -> tuple[int, tuple[float, float]]:
    """Side whose mean metric is more favourable under ``direction``."""
    z = np.asarray(z, dtype=float)
    means = (float(z[part.indices1].mean()), float(z[part.indices2].mean()))
    if Direction.parse(direction) is Direction.MINIMIZE:
        side = 1 if means[0] <= means[1] else 2
    else:
        side = 1 if means[0] >= means[1] else 2
    return side, means


def representative_point(
    grid: EvalGrid,
    params,
    transform: TransformSpec | None = None,
    restrict: str = "all",
) -> RepresentativeResult:
    """Full selection pipeline on a transformed grid."""
    if restrict not in RESTRICTIONS:
        raise InputError(f"restrict must be one of {RESTRICTIONS}, got {restrict!r}")
    part = partition(grid, params)
    shift = mass_shift_for(grid.metrics)
    c1 = cog(grid, part.indices1, shift)
    c2 = cog(grid, part.indices2, shift)
    hit = boundary_intersection(params, c1, c2)
    good, means = good_side_of(part, grid.metrics, grid.direction)
    side = {"all": None, "good-side": good, "side1": 1, "side2": 2}[restrict]
    idx, pt = nearest_grid_point(grid, hit.point, side or "all", part)
    i1, _ = nearest_grid_point(grid, hit.point, 1, part)
    i2, _ = nearest_grid_point(grid, hit.point, 2, part)
    return RepresentativeResult(
        cog1=c1,
        cog2=c2,
        boundary_point=hit.point,
        t=hit.t,
        g_at_point=hit.g,
        crossings=hit.crossings,
        nearest_index=idx,
        nearest_point=pt,
        nearest_side1_index=i1,
        nearest_side2_index=i2,
        restrict=restrict,
        restrict_side=side,
        good_side=good,
        side_means=means,
        mass_shift=shift,
        transform=transform,
    )
