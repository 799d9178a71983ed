"""Analytic reference solutions, the ball barrier, and the convex-hull
membership oracle used to turn the solver's guarantees into assertions."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .field import BoundaryData, GridField
from .geometry import DomainSpec, signed_distance

_POISSON_NODES = 4096


@dataclass(frozen=True)
class OracleSolution:
    """A harmonic reference solution with metadata.

    ``fn`` maps points (m, n) to values (m,); ``smoothness`` records the
    regularity class as free text (never interpreted).
    """

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    smoothness: str
    params: dict = field(default_factory=dict)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(points, dtype=float)), dtype=float)


def harmonic_poly(degree: int, n: int = 2) -> OracleSolution:
    """Real part of (x + iy)^k, harmonic in the plane for k in 0..4."""
    if n != 2:
        raise ValueError("harmonic polynomials are provided in 2-D only")
    if not 0 <= degree <= 4:
        raise ValueError("degree must lie in 0..4")

    def fn(pts: np.ndarray) -> np.ndarray:
        pts = pts.reshape(-1, 2)
        z = pts[:, 0] + 1j * pts[:, 1]
        return (z ** degree).real

    return OracleSolution(kind="harmonic_poly", fn=fn, smoothness="entire",
                          params={"degree": degree})


def poisson_solution(boundary: BoundaryData, domain: DomainSpec) -> OracleSolution:
    """Harmonic extension of boundary data on a planar disk via the Poisson
    integral, discretized by a 4096-node trapezoid rule.

    Accuracy is documented as <= 1e-8 for Lipschitz data within 95% of the
    radius and degrades toward the rim; evaluation within 1e-12 of the rim
    raises (use the boundary data there directly).
    """
    if domain.kind != "ball" or domain.dim != 2:
        raise ValueError("the Poisson integral oracle requires a planar disk")
    center = np.asarray(domain.center)
    radius = domain.radii[0]
    theta = np.arange(_POISSON_NODES) * (2.0 * np.pi / _POISSON_NODES)
    ring = center + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    bvals = boundary.eval(ring)
    unit_ring = np.stack([np.cos(theta), np.sin(theta)], axis=1)

    def fn(pts: np.ndarray) -> np.ndarray:
        pts = pts.reshape(-1, 2)
        y = (pts - center) / radius
        r2 = np.einsum("ij,ij->i", y, y)
        if np.any(np.sqrt(r2) >= 1.0 - 1e-12):
            raise ValueError("Poisson evaluation too close to the rim; "
                             "use the boundary data directly")
        out = np.empty(pts.shape[0])
        for start in range(0, pts.shape[0], 2048):
            sl = slice(start, start + 2048)
            den = ((y[sl, 0, None] - unit_ring[None, :, 0]) ** 2
                   + (y[sl, 1, None] - unit_ring[None, :, 1]) ** 2)
            out[sl] = ((1.0 - r2[sl, None]) / den * bvals[None, :]).mean(axis=1)
        return out

    return OracleSolution(kind="poisson_integral", fn=fn,
                          smoothness=f"harmonic extension of {boundary.smoothness} data",
                          params={"nodes": _POISSON_NODES})


def linear_1d(domain: DomainSpec, a: float, b: float) -> OracleSolution:
    """The line through the endpoint values (a at lo, b at hi); harmonic on
    an interval."""
    if domain.dim != 1:
        raise ValueError("linear_1d requires a 1-D domain")
    (lo,), (hi,) = domain.bounding_box()

    def fn(pts: np.ndarray) -> np.ndarray:
        x = pts.reshape(-1, 1)[:, 0]
        return a + (b - a) * (x - lo) / (hi - lo)

    return OracleSolution(kind="linear_1d", fn=fn, smoothness="affine",
                          params={"a": float(a), "b": float(b)})


def fundamental_shifted(pole, n: int) -> OracleSolution:
    """Fundamental-solution profile with the pole outside the closure:
    |x - p| (n=1), log|x - p| (n=2), 1/|x - p| (n=3)."""
    p = np.asarray(pole, dtype=float).reshape(-1)
    if p.size != n:
        raise ValueError("pole dimension must match n")

    def fn(pts: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(pts.reshape(-1, n) - p, axis=1)
        if n == 1:
            return r
        if n == 2:
            return np.log(r)
        return 1.0 / r

    return OracleSolution(kind="fundamental_shifted", fn=fn,
                          smoothness="real analytic away from the pole",
                          params={"pole": tuple(p)})


def laplacian_fd(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray,
                 step: float = 1e-4) -> np.ndarray:
    """Centered second-order finite-difference Laplacian at each point."""
    pts = np.asarray(points, dtype=float)
    out = -2.0 * pts.shape[1] * np.asarray(fn(pts), dtype=float)
    for axis in range(pts.shape[1]):
        e = np.zeros(pts.shape[1])
        e[axis] = step
        out = out + np.asarray(fn(pts + e), dtype=float)
        out = out + np.asarray(fn(pts - e), dtype=float)
    return out / step ** 2


def random_interior_points(domain: DomainSpec, count: int, seed: int = 0,
                           margin: float = 1e-3) -> np.ndarray:
    """Uniform interior points with boundary clearance, by rejection."""
    rng = np.random.default_rng(seed)
    lo, hi = domain.bounding_box()
    lo, hi = np.asarray(lo), np.asarray(hi)
    out = np.empty((count, domain.dim))
    have = 0
    while have < count:
        draw = rng.uniform(lo, hi, size=(4 * count + 64, domain.dim))
        sd = np.asarray(signed_distance(domain, draw))
        keep = draw[sd > margin]
        take = min(count - have, keep.shape[0])
        out[have:have + take] = keep[:take]
        have += take
    return out


@dataclass(frozen=True)
class BarrierFunction:
    """Closed-form ball barrier (R^2 - |x - c|^2) / (2n): vanishing on the
    sphere, positive inside, constant Laplacian -1."""

    center: tuple[float, ...]
    radius: float
    dim: int

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        r2 = np.einsum("ij,ij->i", pts - np.asarray(self.center),
                       pts - np.asarray(self.center))
        return (self.radius ** 2 - r2) / (2.0 * self.dim)

    def descent(self, delta: np.ndarray) -> np.ndarray:
        """Exact drop of one ball average: h - average of h over B(x, delta)
        equals delta^2 / (2(n+2))."""
        delta = np.asarray(delta, dtype=float)
        return delta ** 2 / (2.0 * (self.dim + 2))


def barrier(domain: DomainSpec) -> BarrierFunction:
    """The closed-form barrier; defined on balls and intervals only."""
    if domain.kind == "ball" or (domain.kind == "interval"):
        radius = domain.radii[0]
        return BarrierFunction(center=domain.center, radius=radius,
                               dim=domain.dim)
    raise ValueError("a closed-form barrier exists for balls/intervals only")


@dataclass(frozen=True)
class BarrierConstant:
    """Smallest K with |f0 - u| <= K h over the usable interior nodes."""

    value: float
    excluded: np.ndarray


def barrier_constant(f0: GridField, u: GridField, h: BarrierFunction) -> BarrierConstant:
    """K = max over interior nodes of |f0 - u| / h.

    Nodes with h below 1e-12 are excluded (recorded); boundary values of f0
    and u must agree to 1e-10.
    """
    bidx = f0.mask.boundary
    if np.abs(f0.values[bidx] - u.values[bidx]).max() > 1e-10:
        raise ValueError("f0 must match the reference solution on the boundary")
    interior = f0.mask.interior
    hv = h(f0.grid.nodes()[interior])
    usable = hv >= 1e-12
    excluded = interior[~usable]
    if not usable.any():
        return BarrierConstant(value=0.0, excluded=excluded)
    ratio = np.abs(f0.values[interior][usable] - u.values[interior][usable]) / hv[usable]
    return BarrierConstant(value=float(ratio.max()), excluded=excluded)


@dataclass(frozen=True)
class SandwichCheck:
    """Minimum of K h - |f - u| over interior nodes and whether it clears
    the tolerance."""

    min_margin: float
    passed: bool
    worst_node: int


def check_barrier_sandwich(f_n: GridField, u: GridField, h: BarrierFunction,
                           K: float, tol: float) -> SandwichCheck:
    """Margins of the barrier containment |f_n - u| <= K h at interior
    nodes; passes iff the minimum margin is >= -tol."""
    interior = f_n.mask.interior
    hv = h(f_n.grid.nodes()[interior])
    err = np.abs(f_n.values[interior] - u.values[interior])
    margins = K * hv - err
    worst = int(np.argmin(margins))
    m = float(margins[worst])
    return SandwichCheck(min_margin=m, passed=m >= -tol,
                         worst_node=int(interior[worst]))


@dataclass(frozen=True)
class HullWitness:
    """A convex combination of at most n+2 graph samples reproducing the
    query point."""

    query: np.ndarray
    support: np.ndarray
    coefficients: np.ndarray
    residual: float


@dataclass(frozen=True)
class HullRefusal:
    """A separating direction: direction . p <= offset for all samples while
    direction . query exceeds it by gap. Not certified when the gap is
    within tolerance (insufficient sampling on a borderline query)."""

    query: np.ndarray
    direction: np.ndarray
    offset: float
    gap: float
    certified: bool


def _caratheodory_reduce(samples: np.ndarray, idx: np.ndarray,
                         alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shrink a convex combination to at most d+1 support points by walking
    along null directions of the lifted sample matrix."""
    d = samples.shape[1]
    while idx.size > d + 1:
        lifted = np.vstack([samples[idx].T, np.ones(idx.size)])
        _, _, vt = np.linalg.svd(lifted)
        beta = vt[-1]
        if not np.any(beta > 1e-14):
            beta = -beta
        pos = beta > 1e-14
        t = np.min(alpha[pos] / beta[pos])
        alpha = alpha - t * beta
        alpha = np.clip(alpha, 0.0, None)
        keep = alpha > 1e-13
        if keep.all():  # numerical standstill: drop the smallest weight
            keep[np.argmin(alpha)] = False
        idx, alpha = idx[keep], alpha[keep]
        alpha = alpha / alpha.sum()
    return idx, alpha


def hull_membership(samples: np.ndarray, query: np.ndarray,
                    tol: float = 1e-8) -> HullWitness | HullRefusal:
    """Decide whether ``query`` lies in the convex hull of ``samples``.

    Feasibility is solved as a small linear program over all samples; a
    feasible solution is reduced to at most d+1 support points. An
    infeasible query returns a separating direction, certified when its
    gap exceeds ``tol``.
    """
    samples = np.asarray(samples, dtype=float)
    query = np.asarray(query, dtype=float).reshape(-1)
    m, d = samples.shape
    if query.size != d:
        raise ValueError("query dimension does not match the samples")
    if m < d + 1:
        raise ValueError("need at least d+1 samples to span a hull")

    exact = np.abs(samples - query).max(axis=1)
    j = int(np.argmin(exact))
    if exact[j] <= tol:
        return HullWitness(query=query, support=np.array([j]),
                           coefficients=np.array([1.0]),
                           residual=float(exact[j]))

    a_eq = np.vstack([samples.T, np.ones(m)])
    b_eq = np.concatenate([query, [1.0]])
    res = linprog(c=np.zeros(m), A_eq=a_eq, b_eq=b_eq, bounds=(0.0, None),
                  method="highs")
    if res.status == 0:
        alpha = np.clip(res.x, 0.0, None)
        idx = np.flatnonzero(alpha > 1e-12)
        if idx.size == 0:
            idx = np.array([int(np.argmax(alpha))])
        sub = alpha[idx] / alpha[idx].sum()
        idx, sub = _caratheodory_reduce(samples, idx, sub)
        resid = float(np.abs(samples[idx].T @ sub - query).max())
        return HullWitness(query=query, support=idx, coefficients=sub,
                           residual=resid)

    # separating hyperplane: maximize w.query - b with w.p_i <= b, |w|_inf <= 1
    c = np.concatenate([-query, [1.0]])
    a_ub = np.hstack([samples, -np.ones((m, 1))])
    bounds = [(-1.0, 1.0)] * d + [(None, None)]
    sep = linprog(c=c, A_ub=a_ub, b_ub=np.zeros(m), bounds=bounds,
                  method="highs")
    if sep.status != 0:
        raise RuntimeError("separating-hyperplane solve failed "
                           f"(status {sep.status})")
    w, b = sep.x[:d], float(sep.x[d])
    gap = float(w @ query - b)
    return HullRefusal(query=query, direction=w, offset=b, gap=gap,
                       certified=gap > tol)


def hull_membership_bruteforce(samples: np.ndarray, query: np.ndarray,
                               tol: float = 1e-8) -> bool:
    """Exhaustive membership check over all support sets of size <= d+1.
    Intended for small instances (the oracle-equivalence tests)."""
    samples = np.asarray(samples, dtype=float)
    query = np.asarray(query, dtype=float).reshape(-1)
    m, d = samples.shape
    target = np.concatenate([query, [1.0]])
    for k in range(1, d + 2):
        for combo in combinations(range(m), k):
            lifted = np.vstack([samples[list(combo)].T, np.ones(k)])
            alpha, *_ = np.linalg.lstsq(lifted, target, rcond=None)
            if np.min(alpha) < -1e-9:
                continue
            if np.abs(lifted @ alpha - target).max() <= tol:
                return True
    return False


def graph_samples(f: GridField, count: int, seed: int = 0) -> np.ndarray:
    """Sample (position, value) graph points of a field: interior nodes at
    their lattice positions, boundary nodes at their boundary projections."""
    mask = f.mask
    positions = np.vstack([f.grid.nodes()[mask.interior], mask.boundary_points])
    values = np.concatenate([f.values[mask.interior], f.values[mask.boundary]])
    total = positions.shape[0]
    if count > total:
        raise ValueError(f"only {total} live nodes available")
    rng = np.random.default_rng(seed)
    pick = rng.choice(total, size=count, replace=False)
    return np.column_stack([positions[pick], values[pick]])


def bump(center, width: float, height: float) -> Callable[[np.ndarray], np.ndarray]:
    """Smooth compactly supported perturbation of the given height at its
    center, vanishing outside radius ``width``."""
    c = np.asarray(center, dtype=float).reshape(-1)
    if width <= 0.0:
        raise ValueError("width must be positive")

    def fn(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, c.size)
        r2 = np.einsum("ij,ij->i", pts - c, pts - c) / width ** 2
        out = np.zeros(pts.shape[0])
        inside = r2 < 1.0
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    return fn
