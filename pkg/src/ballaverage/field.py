"""Scalar fields on a masked lattice: convex-combination point evaluation,
sup norms, boundary data, and CSV/PGM serialization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expressions import point_function
from .geometry import (
    BOUNDARY,
    EXTERIOR,
    INTERIOR,
    DomainSpec,
    GridSpec,
    NodeMask,
    boundary_parameter,
    boundary_perimeter,
    build_mask,
)

_CSV_FMT = "%.17g"


@dataclass(frozen=True)
class BoundaryData:
    """Continuous values prescribed on the domain boundary.

    ``fn`` maps boundary points of shape (m, n) to values of shape (m,).
    ``smoothness`` is free-text metadata (recorded, never interpreted).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    smoothness: str = "continuous"

    def eval(self, points: np.ndarray) -> np.ndarray:
        values = np.asarray(self.fn(np.asarray(points, dtype=float)), dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("boundary data produced non-finite values")
        return values

    @staticmethod
    def constant(value: float) -> "BoundaryData":
        v = float(value)
        return BoundaryData(fn=lambda pts: np.full(pts.shape[0], v),
                            smoothness="smooth")

    @staticmethod
    def from_expression(expr: str, domain: DomainSpec,
                        smoothness: str = "continuous") -> "BoundaryData":
        """Expression over x, y, z plus theta (n = 2: polar angle about the
        domain center)."""
        extra = ("theta",) if domain.dim == 2 else ()
        fn = point_function(expr, domain.dim, extra=extra)
        center = np.asarray(domain.center)

        def evaluate(pts: np.ndarray) -> np.ndarray:
            if domain.dim == 2:
                theta = np.mod(np.arctan2(pts[:, 1] - center[1],
                                          pts[:, 0] - center[0]), 2.0 * np.pi)
                return fn(pts, theta=theta)
            return fn(pts)

        return BoundaryData(fn=evaluate, smoothness=smoothness)

    @staticmethod
    def from_samples(params: np.ndarray, values: np.ndarray,
                     domain: DomainSpec) -> "BoundaryData":
        """Tabulated data over the boundary parameter, linearly interpolated
        (periodically for n = 2)."""
        if domain.dim > 2:
            raise ValueError("tabulated boundary data requires n <= 2")
        p = np.asarray(params, dtype=float)
        v = np.asarray(values, dtype=float)
        if p.shape != v.shape or p.ndim != 1 or p.size < 2:
            raise ValueError("need matching 1-D params and values, length >= 2")
        order = np.argsort(p)
        p, v = p[order], v[order]

        if domain.dim == 1:
            def evaluate(pts: np.ndarray) -> np.ndarray:
                return np.interp(pts[:, 0], p, v)
        else:
            period = boundary_perimeter(domain)

            def evaluate(pts: np.ndarray) -> np.ndarray:
                q = np.mod(boundary_parameter(domain, pts), period)
                pp = np.concatenate([p, [p[0] + period]])
                vv = np.concatenate([v, [v[0]]])
                shifted = np.where(q < p[0], q + period, q)
                return np.interp(shifted, pp, vv)

        return BoundaryData(fn=evaluate, smoothness="piecewise linear")


@dataclass(frozen=True)
class GridField:
    """Immutable node values over a masked grid.

    Exterior nodes hold NaN as a poison sentinel; any code path that reads
    them surfaces immediately as a NaN result.
    """

    grid: GridSpec
    mask: NodeMask
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float).reshape(-1).copy()
        if vals.size != self.grid.node_count:
            raise ValueError("value count does not match the grid")
        if not np.all(np.isfinite(vals[self.mask.live])):
            raise ValueError("field values must be finite on live nodes")
        vals[self.mask.labels.ravel() == EXTERIOR] = np.nan
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @staticmethod
    def from_function(grid: GridSpec, mask: NodeMask,
                      fn: Callable[[np.ndarray], np.ndarray],
                      boundary: BoundaryData | None = None) -> "GridField":
        """Sample ``fn`` at interior nodes; boundary nodes take the boundary
        data (or ``fn``) at their boundary projections."""
        values = np.full(grid.node_count, np.nan)
        nodes = grid.nodes()
        values[mask.interior] = np.asarray(fn(nodes[mask.interior]), dtype=float)
        if boundary is not None:
            values[mask.boundary] = boundary.eval(mask.boundary_points)
        else:
            values[mask.boundary] = np.asarray(fn(mask.boundary_points), dtype=float)
        return GridField(grid=grid, mask=mask, values=values)

    @staticmethod
    def constant(grid: GridSpec, mask: NodeMask, value: float,
                 boundary: BoundaryData | None = None) -> "GridField":
        return GridField.from_function(
            grid, mask, lambda pts: np.full(pts.shape[0], float(value)),
            boundary=boundary)

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(grid=self.grid, mask=self.mask, values=values)

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary points of the domain closure.

        Multilinear interpolation from the 2^n surrounding nodes; the weight
        of an exterior corner is redistributed proportionally over the
        remaining corners, keeping every evaluation a convex combination.

        Raises
        ------
        AssertionError
            If every corner of a containing cell is exterior (impossible for
            points inside the domain closure).
        """
        cols, w = _corner_weights_redistributed(self.grid, self.mask, points)
        safe = np.where(np.isnan(self.values[cols]), 0.0, self.values[cols])
        return np.einsum("pc,pc->p", w, safe)


def _corner_weights_redistributed(grid: GridSpec, mask: NodeMask,
                                  points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Corner indices and convex weights per point, exterior weight
    redistributed. Returns (cols, weights), both (m, 2^n)."""
    dim = grid.dim
    pts = np.asarray(points, dtype=float).reshape(-1, dim)
    lo = np.asarray(grid.lo)
    spacing = np.asarray(grid.spacing)
    shape = np.asarray(grid.shape)

    s = (pts - lo) / spacing
    cell = np.clip(np.floor(s).astype(np.int64), 0, shape - 2)
    t = np.clip(s - cell, 0.0, 1.0)

    ncorner = 1 << dim
    strides = np.empty(dim, dtype=np.int64)
    strides[-1] = 1
    for i in range(dim - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    cols = np.empty((pts.shape[0], ncorner), dtype=np.int64)
    w = np.empty((pts.shape[0], ncorner))
    for corner in range(ncorner):
        flat = np.zeros(pts.shape[0], dtype=np.int64)
        weight = np.ones(pts.shape[0])
        for axis in range(dim):
            bit = (corner >> axis) & 1
            flat += (cell[:, axis] + bit) * strides[axis]
            weight = weight * (t[:, axis] if bit else 1.0 - t[:, axis])
        cols[:, corner] = flat
        w[:, corner] = weight

    labels = mask.labels.ravel()[cols]
    w[labels == EXTERIOR] = 0.0
    total = w.sum(axis=1)
    assert np.all(total > 0.0), "evaluation cell contains only exterior nodes"
    w = w / total[:, None]
    if __debug__:
        assert np.all(w >= 0.0)
        assert np.all(np.abs(w.sum(axis=1) - 1.0) < 1e-12)
    return cols, w


def sup_norm(f: GridField) -> float:
    """Maximum absolute value over interior and boundary nodes."""
    return float(np.abs(f.values[f.mask.live]).max())


def sup_diff(a: GridField, b: GridField) -> float:
    """Sup norm of the nodewise difference of two fields on the same mask."""
    if a.grid != b.grid or not a.mask.same_layout(b.mask):
        raise ValueError("fields live on different grids or masks")
    return float(np.abs(a.values[a.mask.live] - b.values[b.mask.live]).max())


def write_csv(f: GridField, path: str) -> None:
    """Write the field with per-axis header lines and one value per line.

    Format: ``# axis{i}: min max nodes`` for each axis, then the flat node
    values in C order with 17 significant digits; exterior nodes emit nan.
    Round trips bit-exactly through read_csv.
    """
    with open(path, "w", encoding="ascii") as fh:
        for i in range(f.grid.dim):
            fh.write(f"# axis{i}: {f.grid.lo[i]:.17g} {f.grid.hi[i]:.17g} "
                     f"{f.grid.shape[i]}\n")
        fh.writelines(_CSV_FMT % v + "\n" for v in f.values)


def read_csv(path: str) -> tuple[GridSpec, np.ndarray]:
    """Read a field CSV back into its grid and flat values (NaN exterior)."""
    lo, hi, shape = [], [], []
    values = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line.split(":", 1)[1].split()
                if len(parts) != 3:
                    raise ValueError(f"malformed header line: {line!r}")
                lo.append(float(parts[0]))
                hi.append(float(parts[1]))
                shape.append(int(parts[2]))
            else:
                values.append(float(line))
    grid = GridSpec(lo=tuple(lo), hi=tuple(hi), shape=tuple(shape))
    vals = np.asarray(values, dtype=float)
    if vals.size != grid.node_count:
        raise ValueError("value count does not match the header grid")
    return grid, vals


def field_from_csv(path: str, domain: DomainSpec) -> GridField:
    """Rebuild a GridField from a CSV file and its domain.

    The NaN pattern in the file must match the rebuilt exterior mask.
    """
    grid, vals = read_csv(path)
    mask = build_mask(domain, grid)
    nan_at = np.isnan(vals)
    exterior = mask.labels.ravel() == EXTERIOR
    if not np.array_equal(nan_at, exterior):
        raise ValueError("NaN pattern does not match the domain's exterior nodes")
    return GridField(grid=grid, mask=mask, values=vals)


def write_pgm(f: GridField, path: str) -> None:
    """Write an 8-bit grayscale PGM (P2) of a 2-D field.

    Live values are min-max normalized to 0..255 (constant fields map to
    128); exterior nodes are black. Rows follow axis 0; one sample per line
    keeps every line short and the output diffable.
    """
    if f.grid.dim != 2:
        raise ValueError("PGM output is defined for 2-D grids only")
    live = f.values[f.mask.live]
    vmin, vmax = float(live.min()), float(live.max())
    if vmax > vmin:
        norm = (f.values - vmin) / (vmax - vmin)
        levels = np.rint(norm * 255.0)
    else:
        levels = np.full(f.values.shape, 128.0)
    levels = np.where(np.isnan(f.values), 0.0, levels).astype(np.int64)
    levels = np.clip(levels, 0, 255)
    height, width = f.grid.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P2\n{width} {height}\n255\n")
        fh.writelines(f"{v}\n" for v in levels)
