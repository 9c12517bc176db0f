"""Evaluation grids: CSV ingestion, the log-standardize transform and
synthetic test grids.

An :class:`EvalGrid` holds ``n`` evaluated hyper-parameter configurations
(rows of ``points``) together with the metric value observed at each one.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    DegenerateColumn,
    DimensionMismatch,
    InputError,
    MissingColumn,
    NonFiniteValue,
    NonNumericValue,
    NonPositiveCoordinate,
    TooFewPoints,
)

MIN_POINTS = 4

__all__ = [
    "Direction",
    "EvalGrid",
    "TransformSpec",
    "SynthSpec",
    "load_grid",
    "write_grid",
    "fit_transform",
    "apply_transform",
    "inverse_point",
    "generate_synthetic",
    "lattice",
]


class Direction(str, enum.Enum):
    """Whether small or large metric values are favourable."""

    MINIMIZE = "min"
    MAXIMIZE = "max"

    @classmethod
    def parse(cls, value: "Direction | str") -> "Direction":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"direction must be 'min' or 'max', got {value!r}") from None


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EvalGrid:
    """Evaluated configurations ``points`` (n x m) and their ``metrics`` (n,).

    Points need not form a lattice and duplicates are allowed. Arrays are
    copied and made read-only on construction.
    """

    points: np.ndarray
    metrics: np.ndarray
    names: tuple[str, ...] = ()
    metric_name: str = "metric"
    direction: Direction = Direction.MINIMIZE

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        object.__setattr__(self, "points", _frozen(points, 2))
        object.__setattr__(self, "metrics", _frozen(self.metrics, 1))
        object.__setattr__(self, "direction", Direction.parse(self.direction))
        n, m = self.points.shape
        if self.metrics.shape[0] != n:
            raise DimensionMismatch(
                f"{n} points but {self.metrics.shape[0]} metric values"
            )
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(m))
        if len(names) != m:
            raise DimensionMismatch(f"{m} coordinate columns but {len(names)} names")
        object.__setattr__(self, "names", names)
        if not np.all(np.isfinite(self.points)):
            raise NonFiniteValue("coordinates must be finite")
        if not np.all(np.isfinite(self.metrics)):
            raise NonFiniteValue("metric values must be finite")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def with_points(self, points) -> "EvalGrid":
        return EvalGrid(points, self.metrics, self.names, self.metric_name, self.direction)

    def require_fittable(self) -> None:
        if self.n < MIN_POINTS:
            raise TooFewPoints(f"need at least {MIN_POINTS} points, got {self.n}")


def _open_text(source):
    if hasattr(source, "read"):
        return source, False
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        return open(source, newline="", encoding="utf-8"), True
    if isinstance(source, str) and "\n" in source:
        return io.StringIO(source), False
    raise InputError(f"cannot read CSV from {source!r}")


def load_grid(
    source,
    metric_column: str,
    direction: Direction | str = Direction.MINIMIZE,
    ignore: Iterable[str] = (),
) -> EvalGrid:
    """Read an evaluation grid from a comma-separated file with a header.

    Every column other than ``metric_column`` and those listed in
    ``ignore`` is a coordinate; column order is preserved.
    ``source`` may be a path, an open text file, or CSV text.
    """
    fh, close = _open_text(source)
    try:
        rows = list(csv.reader(fh))
    finally:
        if close:
            fh.close()
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise InputError("CSV is empty; a header row is required")
    header = [h.strip() for h in rows[0]]
    if metric_column not in header:
        raise MissingColumn(f"metric column {metric_column!r} not in header {header}")
    ignore = set(ignore)
    for col in ignore:
        if col not in header:
            raise MissingColumn(f"ignored column {col!r} not in header {header}")
    coord_idx = [j for j, h in enumerate(header) if h != metric_column and h not in ignore]
    if not coord_idx:
        raise MissingColumn("no coordinate columns left besides the metric")
    metric_idx = header.index(metric_column)

    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise InputError(f"row {i + 2} has {len(row)} cells, header has {len(header)}")
        for j, cell in enumerate(row):
            if header[j] in ignore:
                data[i, j] = 0.0
                continue
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise NonNumericValue(
                    f"row {i + 2}, column {header[j]!r}: {cell!r} is not a number"
                ) from None
    if not np.all(np.isfinite(data)):
        i, j = np.argwhere(~np.isfinite(data))[0]
        raise NonFiniteValue(f"row {i + 2}, column {header[j]!r} is not finite")
    if data.shape[0] < MIN_POINTS:
        raise TooFewPoints(f"need at least {MIN_POINTS} rows, got {data.shape[0]}")
    return EvalGrid(
        data[:, coord_idx],
        data[:, metric_idx],
        names=tuple(header[j] for j in coord_idx),
        metric_name=metric_column,
        direction=direction,
    )


def write_grid(grid: EvalGrid, target, labels: Sequence[int] | None = None) -> None:
    """Write ``grid`` in the schema :func:`load_grid` reads, plus an
    optional ``label`` column."""
    own = not hasattr(target, "write")
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        header = list(grid.names) + [grid.metric_name]
        if labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(grid.n):
            row = [repr(float(v)) for v in grid.points[i]] + [repr(float(grid.metrics[i]))]
            if labels is not None:
                row.append(str(int(labels[i])))
            writer.writerow(row)
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class TransformSpec:
    """Per-dimension constants of the log-standardize transform.

    For a transformed dimension the forward map is
    ``(ln(u) - log_mean) / log_sd``; passthrough dimensions are untouched.
    Logs are natural logs and ``log_sd`` uses the n-1 denominator.
    """

    log_mean: tuple[float, ...]
    log_sd: tuple[float, ...]
    transformed: tuple[bool, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        m = len(self.transformed)
        if len(self.log_mean) != m or len(self.log_sd) != m:
            raise DimensionMismatch("transform constants have inconsistent lengths")
        for sd, on in zip(self.log_sd, self.transformed):
            if on and not sd > 0:
                raise DegenerateColumn("standard deviation of logs must be positive")

    @property
    def dim(self) -> int:
        return len(self.transformed)

    @classmethod
    def identity(cls, m: int, names: Sequence[str] = ()) -> "TransformSpec":
        return cls((0.0,) * m, (1.0,) * m, (False,) * m, tuple(names))

    def forward(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        self._check(u)
        out = np.array(u, dtype=float)
        for j, on in enumerate(self.transformed):
            if on:
                col = u[..., j]
                if np.any(col <= 0):
                    raise NonPositiveCoordinate(
                        f"dimension {self._name(j)!r} has non-positive values; "
                        "log transform undefined"
                    )
                out[..., j] = (np.log(col) - self.log_mean[j]) / self.log_sd[j]
        return out

    def inverse(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        self._check(u)
        out = np.array(u, dtype=float)
        for j, on in enumerate(self.transformed):
            if on:
                out[..., j] = np.exp(self.log_sd[j] * u[..., j] + self.log_mean[j])
        return out

    def _check(self, u: np.ndarray) -> None:
        if u.ndim == 0 or u.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"transform has {self.dim} dimensions, input has shape {u.shape}"
            )

    def _name(self, j: int) -> str:
        return self.names[j] if self.names else f"x{j + 1}"

    def to_dict(self) -> dict:
        return {
            "log": "natural",
            "sd_denominator": "n-1",
            "names": list(self.names),
            "transformed": list(self.transformed),
            "log_mean": list(self.log_mean),
            "log_sd": list(self.log_sd),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformSpec":
        return cls(
            tuple(float(v) for v in d["log_mean"]),
            tuple(float(v) for v in d["log_sd"]),
            tuple(bool(v) for v in d["transformed"]),
            tuple(d.get("names", ())),
        )


TRANSFORM_MODES = ("auto", "log-std", "none")


def resolve_modes(points: np.ndarray, mode) -> tuple[bool, ...]:
    """Decide which dimensions get the log transform.

    ``mode`` is ``"log-std"``, ``"none"``, ``"auto"`` (log only where every
    value is positive) or a per-dimension sequence of booleans / mode strings.
    """
    m = points.shape[1]
    if isinstance(mode, str):
        if mode not in TRANSFORM_MODES:
            raise InputError(f"transform must be one of {TRANSFORM_MODES}, got {mode!r}")
        if mode == "auto":
            return tuple(bool(np.all(points[:, j] > 0)) for j in range(m))
        return (mode == "log-std",) * m
    mode = list(mode)
    if len(mode) != m:
        raise DimensionMismatch(f"{len(mode)} transform modes for {m} dimensions")
    out = []
    for j, item in enumerate(mode):
        if isinstance(item, str):
            out.extend(resolve_modes(points[:, [j]], "none" if item == "passthrough" else item))
        else:
            out.append(bool(item))
    return tuple(out)


def fit_transform(grid: EvalGrid, mode="log-std") -> tuple[EvalGrid, TransformSpec]:
    """Log-standardize the coordinates of ``grid``.

    Returns the transformed grid and the constants needed to invert it.
    Non-positive values in a log dimension raise
    :class:`~plateau.exceptions.NonPositiveCoordinate`; mark such a
    dimension passthrough instead of dropping rows.
    """
    flags = resolve_modes(grid.points, mode)
    means, sds = [], []
    for j, on in enumerate(flags):
        if not on:
            means.append(0.0)
            sds.append(1.0)
            continue
        col = grid.points[:, j]
        if np.any(col <= 0):
            raise NonPositiveCoordinate(
                f"dimension {grid.names[j]!r} has non-positive values; "
                "use passthrough for it"
            )
        if col.size < 2:
            raise TooFewPoints("need at least 2 points to standardize")
        logs = np.log(col)
        mean = float(np.mean(logs))
        sd = float(np.std(logs, ddof=1))
        if not sd > 0 or sd <= 1e-14 * max(1.0, abs(mean)):
            raise DegenerateColumn(f"dimension {grid.names[j]!r} has zero spread on log scale")
        means.append(mean)
        sds.append(sd)
    spec = TransformSpec(tuple(means), tuple(sds), flags, grid.names)
    return grid.with_points(spec.forward(grid.points)), spec


def apply_transform(spec: TransformSpec, grid: EvalGrid) -> EvalGrid:
    return grid.with_points(spec.forward(grid.points))


def inverse_point(spec: TransformSpec, u) -> np.ndarray:
    """Map transformed coordinates back to user units."""
    return spec.inverse(u)


def lattice(shape: Sequence[int], bounds: Sequence[tuple[float, float]]) -> np.ndarray:
    """Regular lattice as an (prod(shape), m) array, first axis slowest."""
    if len(shape) != len(bounds):
        raise DimensionMismatch("shape and bounds differ in length")
    axes = [np.linspace(lo, hi, int(k)) for k, (lo, hi) in zip(shape, bounds)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic grid with a known boundary.

    ``boundary`` is any object with a ``value(points)`` method (normally a
    :class:`~plateau.boundary.QPParams`). Points with ``g <= 0`` get mean
    ``mu1``, the rest ``mu2``.
    """

    shape: tuple[int, ...]
    boundary: object
    mu1: float = 0.0
    mu2: float = 10.0
    noise_sd: float = 1.0
    seed: int = 0
    bounds: tuple[tuple[float, float], ...] = field(default=())
    names: tuple[str, ...] = ()
    metric_name: str = "z"

    def __post_init__(self):
        if not self.bounds:
            object.__setattr__(self, "bounds", ((-2.0, 2.0),) * len(self.shape))
        if len(self.bounds) != len(self.shape):
            raise DimensionMismatch("bounds and shape differ in length")
        if any(int(k) < 1 for k in self.shape):
            raise InputError("lattice shape entries must be positive")
        if not (self.noise_sd >= 0 and math.isfinite(self.noise_sd)):
            raise InputError("noise standard deviation must be finite and >= 0")
        if not (math.isfinite(self.mu1) and math.isfinite(self.mu2)):
            raise InputError("region means must be finite")


def generate_synthetic(spec: SynthSpec) -> tuple[EvalGrid, np.ndarray]:
    """Sample a grid from ``spec``; returns the grid and true side labels (1/2).

    Deterministic given ``spec.seed``.
    """
    points = lattice(spec.shape, spec.bounds)
    g = np.asarray(spec.boundary.value(points), dtype=float)
    labels = np.where(g <= 0, 1, 2)
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, 1.0, size=points.shape[0]) * spec.noise_sd
    z = np.where(labels == 1, spec.mu1, spec.mu2) + noise
    m = points.shape[1]
    names = spec.names or (("x", "y") if m == 2 else tuple(f"x{j + 1}" for j in range(m)))
    grid = EvalGrid(points, z, names=names, metric_name=spec.metric_name)
    return grid, labels
