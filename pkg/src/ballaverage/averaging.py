"""Ball-average operator on a masked lattice: per-node quadrature stencils,
sparse operator assembly, application, and the continuity-ratio probe.

The operator is a row-stochastic matrix over node values, so the maximum
principle, nonexpansiveness and range containment hold to float precision
by construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.spatial import cKDTree

from . import _backend
from .field import BoundaryData, GridField
from .geometry import (
    EXTERIOR,
    INTERIOR,
    DomainSpec,
    GridSpec,
    NodeMask,
    boundary_parameter,
    boundary_perimeter,
    boundary_projection,
    signed_distance,
)

_UNIT_BALL_VOLUME = {1: 2.0, 2: np.pi, 3: 4.0 * np.pi / 3.0}
_SHRINK = 1.0 - 1e-9
_MARCH_MAX_STEPS = 64
_CHUNK_POINTS = 2_000_000

BOUNDARY_CONSISTENT = "boundary_consistent"
REDISTRIBUTE = "redistribute"


def ball_volume(n: int, r: float) -> float:
    """Volume of the n-dimensional ball of radius r (n in {1, 2, 3})."""
    if n not in _UNIT_BALL_VOLUME:
        raise ValueError("dimension must be 1, 2 or 3")
    if r < 0.0:
        raise ValueError("radius must be nonnegative")
    return _UNIT_BALL_VOLUME[n] * r ** n


@dataclass(frozen=True)
class RadiusSpec:
    """Admissible radius function delta(x) with B(x, delta(x)) inside the
    domain: a fixed fraction of the boundary distance, optionally capped.

    delta vanishes toward the boundary, so its extension by zero to the
    closure stays continuous.
    """

    kind: str
    c: float
    cap: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("distance_fraction", "capped_fraction"):
            raise ValueError(f"unknown radius kind {self.kind!r}")
        if not 0.0 < self.c <= 1.0:
            raise ValueError("fraction c must lie in (0, 1]")
        if self.kind == "capped_fraction":
            if self.cap is None or self.cap <= 0.0:
                raise ValueError("capped_fraction requires cap > 0")
        elif self.cap is not None:
            raise ValueError("cap is only meaningful for capped_fraction")

    def from_distance(self, sd: np.ndarray) -> np.ndarray:
        """delta as a function of the boundary distance values."""
        delta = self.c * np.asarray(sd, dtype=float)
        if self.kind == "capped_fraction":
            delta = np.minimum(delta, self.cap)
        return delta

    def radius_at(self, domain: DomainSpec, points: np.ndarray) -> np.ndarray:
        sd = np.asarray(signed_distance(domain, points))
        if np.any(sd <= 0.0):
            raise ValueError("radius function is defined on interior points only")
        return self.from_distance(sd)


@dataclass(frozen=True)
class QuadratureSpec:
    """How each ball average is discretized.

    product_midpoint: a midpoint lattice with ``samples_per_axis`` points per
    axis, filtered to the open ball. monte_carlo: ``samples`` uniform points
    by rejection, reproducible from ``seed`` and the node index.
    """

    kind: str
    samples_per_axis: int = 16
    samples: int = 512
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("product_midpoint", "monte_carlo"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.kind == "product_midpoint" and self.samples_per_axis < 2:
            raise ValueError("need at least 2 samples per axis")
        if self.kind == "monte_carlo" and self.samples < 100:
            raise ValueError("need at least 100 Monte Carlo samples")


@dataclass(frozen=True)
class BallStencil:
    """Quadrature realization of one ball average: points strictly inside
    B(node, radius) with nonnegative weights summing to 1."""

    node: int
    radius: float
    points: np.ndarray
    weights: np.ndarray


def _unit_offsets(dim: int, m: int) -> np.ndarray:
    """Midpoint-lattice offsets of the cube, filtered to the open unit ball."""
    axis = (2.0 * np.arange(m) + 1.0 - m) / m
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    u = np.stack([g.ravel() for g in mesh], axis=1)
    return u[np.einsum("ij,ij->i", u, u) < 1.0]


def _mc_offsets(dim: int, count: int, seed: int, node: int) -> np.ndarray:
    """Uniform points in the open unit ball by rejection, one reproducible
    stream per (seed, node)."""
    rng = np.random.default_rng([seed, int(node)])
    out = np.empty((count, dim))
    have = 0
    while have < count:
        draw = rng.uniform(-1.0, 1.0, size=(2 * (count - have) + 16, dim))
        keep = draw[np.einsum("ij,ij->i", draw, draw) < 1.0]
        take = min(count - have, keep.shape[0])
        out[have:have + take] = keep[:take]
        have += take
    return out


def build_stencil(domain: DomainSpec, grid: GridSpec, mask: NodeMask,
                  radius: RadiusSpec, quad: QuadratureSpec, node: int) -> BallStencil:
    """Quadrature stencil for one interior node.

    Points are placed at node + delta*(1 - 1e-9)*u for unit-ball offsets u,
    so every point is strictly inside the domain. Raises ValueError for
    non-interior nodes or if fewer than 2^n points survive.
    """
    labels = mask.labels.ravel()
    if labels[node] != INTERIOR:
        raise ValueError("stencils exist for interior nodes only")
    x = grid.nodes()[node]
    delta = float(radius.from_distance(mask.signed.ravel()[node]))
    if quad.kind == "product_midpoint":
        u = _unit_offsets(grid.dim, quad.samples_per_axis)
    else:
        u = _mc_offsets(grid.dim, quad.samples, quad.seed, node)
    if u.shape[0] < 2 ** grid.dim:
        raise ValueError("too few quadrature points inside the ball; "
                         "radius below grid resolvability")
    points = x + delta * _SHRINK * u
    weights = np.full(u.shape[0], 1.0 / u.shape[0])
    weights = weights / weights.sum()
    return BallStencil(node=int(node), radius=delta, points=points,
                       weights=weights)


class SigmaOperator:
    """Precomputed averaging operator: one convex quadrature row per
    interior node over flat node values. Built once per (domain, grid,
    radius, quadrature, scheme) and reused across all iterations."""

    def __init__(self, domain: DomainSpec, grid: GridSpec, mask: NodeMask,
                 radius: RadiusSpec, quad: QuadratureSpec, scheme: str,
                 matrix: sparse.csr_matrix, delta: np.ndarray,
                 unresolved_points: int) -> None:
        self.domain = domain
        self.grid = grid
        self.mask = mask
        self.radius = radius
        self.quad = quad
        self.scheme = scheme
        self.matrix = matrix
        self.delta = delta
        self.unresolved_points = unresolved_points

    def apply(self, f: GridField, boundary: BoundaryData | None = None) -> GridField:
        """One averaging step: quadrature rows at interior nodes, pinned
        values at boundary nodes, exterior untouched."""
        if f.grid != self.grid or not f.mask.same_layout(self.mask):
            raise ValueError("field does not match the operator's grid/mask")
        out = f.values.copy()
        out[self.mask.interior] = self.matrix @ f.values
        if boundary is not None:
            out[self.mask.boundary] = boundary.eval(self.mask.boundary_points)
        return f.with_values(out)

    def one_step_budget(self) -> np.ndarray:
        """Per-interior-node error scale of a single averaging step applied
        to a smooth field: quadrature second-moment error plus
        interpolation error."""
        h = max(self.grid.spacing)
        if self.quad.kind == "product_midpoint":
            quad_term = self.delta ** 2 / self.quad.samples_per_axis ** 2
        else:
            quad_term = self.delta ** 2 / np.sqrt(self.quad.samples)
        return quad_term + h * h


def apply_sigma(f: GridField, op: SigmaOperator,
                boundary: BoundaryData | None = None) -> GridField:
    """Apply the averaging operator to a field (see SigmaOperator.apply)."""
    return op.apply(f, boundary=boundary)


def _merge_triples(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Drop exact-zero entries and sum duplicates of (row, col), keeping
    first-appearance order within each group. lexsort is stable and
    reduceat accumulates left to right, so merging chunk partial sums
    gives the same bits as one global merge over the raw triples."""
    keep = vals != 0.0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    if rows.size == 0:
        return rows, cols, vals
    order = np.lexsort((cols, rows))
    r, c, v = rows[order], cols[order], vals[order]
    new = np.empty(r.size, dtype=bool)
    new[0] = True
    new[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    starts = np.flatnonzero(new)
    return r[starts], c[starts], np.add.reduceat(v, starts)


def _canonical_csr(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray,
                   nrows: int, ncols: int) -> sparse.csr_matrix:
    """Merge duplicates and row-normalize deterministically, so both
    backends produce bit-identical matrices. Entries with weight exactly
    zero (redistributed exterior corners, degenerate interpolation weights)
    are dropped, so the stored structure touches live nodes only."""
    ru, cu, vu = _merge_triples(rows, cols, vals)
    rowsum = np.bincount(ru, weights=vu, minlength=nrows)
    if np.any(rowsum <= 0.0):
        raise RuntimeError("an interior node received no quadrature weight")
    vu = vu / rowsum[ru]
    indptr = np.searchsorted(ru, np.arange(nrows + 1))
    return sparse.csr_matrix((vu, cu, indptr), shape=(nrows, ncols))


class _BoundaryInterp:
    """Convex interpolation over boundary-node values at boundary points:
    parameter bracketing for n <= 2, inverse-distance over the 3 nearest
    boundary nodes for n = 3."""

    def __init__(self, domain: DomainSpec, grid: GridSpec, mask: NodeMask) -> None:
        self.domain = domain
        self.mask = mask
        self.dim = grid.dim
        if self.dim == 3:
            self.tree = cKDTree(mask.boundary_points)
            self.soft = 1e-3 * min(grid.spacing)
        elif self.dim == 2:
            order = np.argsort(mask.boundary_params, kind="stable")
            self.params = mask.boundary_params[order]
            self.nodes = mask.boundary[order]
            self.period = boundary_perimeter(domain)
        else:
            order = np.argsort(mask.boundary_params, kind="stable")
            self.params = mask.boundary_params[order]
            self.nodes = mask.boundary[order]

    def weights(self, proj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Boundary-node columns and convex weights per projected point.
        Returns (cols, w) of shape (p, k)."""
        if self.dim == 3:
            dist, idx = self.tree.query(proj, k=3)
            w = 1.0 / (dist + self.soft)
            w = w / w.sum(axis=1, keepdims=True)
            return self.mask.boundary[idx], w
        if self.dim == 2:
            q = boundary_parameter(self.domain, proj)
            j = np.searchsorted(self.params, q)
            nb = self.params.size
            hi = j % nb
            lo = (j - 1) % nb
            gap = np.mod(self.params[hi] - self.params[lo], self.period)
            offs = np.mod(q - self.params[lo], self.period)
            lam = np.where(gap > 0.0, offs / np.maximum(gap, 1e-300), 0.0)
            lam = np.clip(lam, 0.0, 1.0)
            cols = np.stack([self.nodes[lo], self.nodes[hi]], axis=1)
            w = np.stack([1.0 - lam, lam], axis=1)
            return cols, w
        # n = 1: the nearest endpoint carries the full weight
        q = proj[:, 0]
        idx = np.argmin(np.abs(q[:, None] - self.params[None, :]), axis=1)
        return self.nodes[idx][:, None], np.ones((proj.shape[0], 1))


def _grid_arrays(grid: GridSpec, mask: NodeMask):
    lo = np.asarray(grid.lo)
    inv_spacing = 1.0 / np.asarray(grid.spacing)
    shape = np.asarray(grid.shape, dtype=np.int64)
    strides = np.empty(grid.dim, dtype=np.int64)
    strides[-1] = 1
    for i in range(grid.dim - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    labels = np.ascontiguousarray(mask.labels.ravel())
    return lo, inv_spacing, shape, strides, labels


def _redistribute(cols: np.ndarray, w: np.ndarray,
                  labels: np.ndarray) -> np.ndarray:
    """Zero exterior-corner weights and renormalize over the rest."""
    w = w.copy()
    w[labels[cols] == EXTERIOR] = 0.0
    total = w.sum(axis=1)
    assert np.all(total > 0.0), "quadrature point fell in an all-exterior cell"
    return w / total[:, None]


def _radial_triples(domain: DomainSpec, grid: GridSpec, mask: NodeMask,
                    interp: _BoundaryInterp, zpts: np.ndarray,
                    grid_arrays) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Boundary-consistent weights for points in cells touching non-interior
    nodes: blend the boundary value at the point's projection with a
    multilinear value at a point marched inward to an all-interior cell.

    Returns (point_index, col, weight) triples plus the count of points that
    exhausted the march and fell back to redistribution.
    """
    lo, inv_spacing, shape, strides, labels = grid_arrays
    npts, dim = zpts.shape
    proj = boundary_projection(domain, zpts)
    dvec = zpts - proj
    dz = np.linalg.norm(dvec, axis=1)
    direction = np.zeros_like(dvec)
    ok = dz > 1e-13 * max(grid.spacing)
    direction[ok] = dvec[ok] / dz[ok, None]
    if np.any(~ok):
        center = np.asarray(domain.center)
        v = center - proj[~ok]
        direction[~ok] = v / np.linalg.norm(v, axis=1, keepdims=True)

    step = min(grid.spacing) / 2.0
    tstop = np.zeros(npts)
    in_cols = np.zeros((npts, 1 << dim), dtype=np.int64)
    in_w = np.zeros((npts, 1 << dim))
    active = np.arange(npts)
    for k in range(1, _MARCH_MAX_STEPS + 1):
        if active.size == 0:
            break
        t = dz[active] + k * step
        cand = proj[active] + t[:, None] * direction[active]
        cols, w, clean = _backend.corner_weights(
            np.ascontiguousarray(cand), lo, inv_spacing, shape, strides, labels)
        hit = active[clean]
        in_cols[hit] = cols[clean]
        in_w[hit] = w[clean]
        tstop[hit] = dz[hit] + k * step
        active = active[~clean]
    unresolved = active

    resolved = np.setdiff1d(np.arange(npts), unresolved, assume_unique=False)
    theta = np.zeros(npts)
    theta[resolved] = dz[resolved] / tstop[resolved]

    prows = []
    pcols = []
    pvals = []
    if resolved.size:
        # interior part, scaled by theta
        rep = np.repeat(resolved, 1 << dim)
        prows.append(rep)
        pcols.append(in_cols[resolved].ravel())
        pvals.append((in_w[resolved] * theta[resolved, None]).ravel())
        # boundary part, scaled by 1 - theta
        bcols, bw = interp.weights(proj[resolved])
        k = bcols.shape[1]
        prows.append(np.repeat(resolved, k))
        pcols.append(bcols.ravel())
        pvals.append((bw * (1.0 - theta[resolved, None])).ravel())
    if unresolved.size:
        cols, w, _ = _backend.corner_weights(
            np.ascontiguousarray(zpts[unresolved]), lo, inv_spacing, shape,
            strides, labels)
        w = _redistribute(cols, w, labels)
        prows.append(np.repeat(unresolved, 1 << dim))
        pcols.append(cols.ravel())
        pvals.append(w.ravel())
    return (np.concatenate(prows), np.concatenate(pcols),
            np.concatenate(pvals), int(unresolved.size))


def build_operator(domain: DomainSpec, grid: GridSpec, mask: NodeMask,
                   radius: RadiusSpec, quad: QuadratureSpec,
                   scheme: str = BOUNDARY_CONSISTENT) -> SigmaOperator:
    """Assemble the averaging operator as one sparse row per interior node.

    Every quadrature point contributes its interpolation weights to the
    node's row; rows are normalized, so each is a convex combination of
    interior and boundary node values. ``scheme`` selects how points in
    cells touching non-interior nodes are evaluated: ``boundary_consistent``
    (radial blend, second order, default) or ``redistribute`` (exterior
    weight redistribution, first order near the boundary).
    """
    if scheme not in (BOUNDARY_CONSISTENT, REDISTRIBUTE):
        raise ValueError(f"unknown evaluation scheme {scheme!r}")
    if grid.node_count > np.iinfo(np.int32).max:
        raise ValueError("grid too large for 32-bit matrix indexing")
    dim = grid.dim
    arrays = _grid_arrays(grid, mask)
    lo, inv_spacing, shape, strides, labels = arrays
    interior = mask.interior
    n_int = interior.size
    nodes = grid.nodes()
    delta = radius.from_distance(mask.signed.ravel()[interior])
    interp = _BoundaryInterp(domain, grid, mask) if scheme == BOUNDARY_CONSISTENT else None

    if quad.kind == "product_midpoint":
        offsets = _unit_offsets(dim, quad.samples_per_axis)
        if offsets.shape[0] < 2 ** dim:
            raise ValueError("too few quadrature points inside the ball")
        kq = offsets.shape[0]
    else:
        kq = quad.samples
    qw = 1.0 / kq

    all_rows: list[np.ndarray] = []
    all_cols: list[np.ndarray] = []
    all_vals: list[np.ndarray] = []
    dirty_pts: list[np.ndarray] = []
    dirty_rows: list[np.ndarray] = []

    chunk = max(1, _CHUNK_POINTS // kq)
    for start in range(0, n_int, chunk):
        rows_chunk = np.arange(start, min(start + chunk, n_int),
                               dtype=np.int32)
        centers = nodes[interior[rows_chunk]]
        scaled = delta[rows_chunk] * _SHRINK
        if quad.kind == "product_midpoint":
            pts = centers[:, None, :] + scaled[:, None, None] * offsets[None, :, :]
        else:
            offs = np.stack([
                _mc_offsets(dim, kq, quad.seed, interior[r]) for r in rows_chunk
            ])
            pts = centers[:, None, :] + scaled[:, None, None] * offs
        pts = np.ascontiguousarray(pts.reshape(-1, dim))
        prow = np.repeat(rows_chunk, kq)
        cols, w, clean = _backend.corner_weights(pts, lo, inv_spacing, shape,
                                                 strides, labels)
        if clean.any():
            # merge within the chunk; chunks partition the rows, so this
            # only shrinks the pending triples (a full grid holds ~4x
            # duplicates), it cannot change the final sums
            mr, mc, mv = _merge_triples(
                np.repeat(prow[clean], 1 << dim),
                cols[clean].ravel().astype(np.int32),
                (w[clean] * qw).ravel())
            all_rows.append(mr)
            all_cols.append(mc)
            all_vals.append(mv)
        if not clean.all():
            keep = ~clean
            dirty_pts.append(pts[keep])
            dirty_rows.append(prow[keep])

    unresolved = 0
    if dirty_pts:
        zpts = np.concatenate(dirty_pts)
        zrows = np.concatenate(dirty_rows)
        if scheme == BOUNDARY_CONSISTENT:
            pidx, pcols, pvals, unresolved = _radial_triples(
                domain, grid, mask, interp, zpts, arrays)
            all_rows.append(zrows[pidx])
            all_cols.append(pcols.astype(np.int32))
            all_vals.append(pvals * qw)
        else:
            cols, w, _ = _backend.corner_weights(
                np.ascontiguousarray(zpts), lo, inv_spacing, shape, strides,
                labels)
            w = _redistribute(cols, w, labels)
            all_rows.append(np.repeat(zrows, 1 << dim))
            all_cols.append(cols.ravel().astype(np.int32))
            all_vals.append((w * qw).ravel())

    matrix = _canonical_csr(np.concatenate(all_rows),
                            np.concatenate(all_cols),
                            np.concatenate(all_vals),
                            n_int, grid.node_count)
    return SigmaOperator(domain=domain, grid=grid, mask=mask, radius=radius,
                         quad=quad, scheme=scheme, matrix=matrix, delta=delta,
                         unresolved_points=unresolved)


def adjacent_pairs(op: SigmaOperator, count: int, seed: int = 0) -> np.ndarray:
    """Sample lattice-adjacent interior node pairs (x, y) satisfying the
    closeness condition d(x, y) < delta(x)/2. Returns flat indices (count, 2)."""
    grid, mask = op.grid, op.mask
    interior_flags = mask.labels.ravel() == INTERIOR
    delta_flat = np.zeros(grid.node_count)
    delta_flat[mask.interior] = op.delta
    _, _, shape, strides, _ = _grid_arrays(grid, mask)
    cands = []
    for axis in range(grid.dim):
        stride = strides[axis]
        h = grid.spacing[axis]
        idx = np.flatnonzero(interior_flags)
        idx = idx[(idx + stride < grid.node_count)]
        # exclude wrapped neighbors across the lattice edge
        coords = (idx // stride) % shape[axis]
        idx = idx[coords < shape[axis] - 1]
        ok = interior_flags[idx + stride] & (h < delta_flat[idx] / 2.0)
        idx = idx[ok]
        cands.append(np.stack([idx, idx + stride], axis=1))
    pool = np.concatenate(cands)
    if pool.shape[0] < count:
        raise ValueError(f"only {pool.shape[0]} admissible pairs exist")
    rng = np.random.default_rng(seed)
    pick = rng.choice(pool.shape[0], size=count, replace=False)
    return pool[pick]


def sigma_lipschitz_probe(f: GridField, op: SigmaOperator,
                          pairs: np.ndarray,
                          boundary: BoundaryData | None = None) -> np.ndarray:
    """Continuity ratios of one averaging step over nearby node pairs.

    For each pair (x, y) with d(x, y) < delta(x)/2, returns
    |sigma(f)(x) - sigma(f)(y)| * delta(x) / (sup|f| * (|delta(x) -
    delta(y)| + d(x, y))). All zeros when f vanishes.
    """
    from .field import sup_norm

    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    rows = np.searchsorted(op.mask.interior, pairs)
    if not np.array_equal(op.mask.interior[rows], pairs):
        raise ValueError("probe pairs must consist of interior nodes")
    nodes = op.grid.nodes()
    d = np.linalg.norm(nodes[pairs[:, 0]] - nodes[pairs[:, 1]], axis=1)
    dx = op.delta[rows[:, 0]]
    dy = op.delta[rows[:, 1]]
    if np.any(d >= dx / 2.0) or np.any(d <= 0.0):
        raise ValueError("pairs must satisfy 0 < d(x, y) < delta(x)/2")
    nf = sup_norm(f)
    if nf == 0.0:
        return np.zeros(pairs.shape[0])
    sf = op.apply(f, boundary=boundary).values
    return (np.abs(sf[pairs[:, 0]] - sf[pairs[:, 1]]) * dx
            / (nf * (np.abs(dx - dy) + d)))
