"""The averaging operator: stencils, operator assembly, probe machinery."""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballaverage import (EXTERIOR, BoundaryData, DomainSpec, GridField,
                         GridSpec, QuadratureSpec, RadiusSpec, adjacent_pairs,
                         apply_sigma, ball_volume, build_mask, build_operator,
                         build_stencil, contains_ball, signed_distance,
                         sigma_lipschitz_probe, sup_diff, sup_norm)
from conftest import random_live_field

DISK = DomainSpec(kind="ball", center=(0.0, 0.0), radii=(1.0, 1.0))
GRID17 = GridSpec(lo=(-1.0, -1.0), hi=(1.0, 1.0), shape=(17, 17))
MASK17 = build_mask(DISK, GRID17)
RADIUS = RadiusSpec(kind="distance_fraction", c=0.5)
QUAD8 = QuadratureSpec(kind="product_midpoint", samples_per_axis=8)
OP17 = build_operator(DISK, GRID17, MASK17, RADIUS, QUAD8)


class TestBallVolume:
    def test_closed_forms(self):
        assert ball_volume(1, 3.0) == pytest.approx(6.0)
        assert ball_volume(2, 2.0) == pytest.approx(4.0 * np.pi)
        assert ball_volume(3, 1.0) == pytest.approx(4.0 * np.pi / 3.0)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            ball_volume(4, 1.0)
        with pytest.raises(ValueError):
            ball_volume(2, -1.0)


class TestRadiusSpec:
    def test_fraction_of_distance(self):
        r = RadiusSpec(kind="distance_fraction", c=0.5)
        assert r.from_distance(np.array([0.4])) == pytest.approx([0.2])

    def test_cap_applies(self):
        r = RadiusSpec(kind="capped_fraction", c=1.0, cap=0.1)
        assert r.from_distance(np.array([0.04, 0.5])) == \
            pytest.approx([0.04, 0.1])

    def test_validation(self):
        with pytest.raises(ValueError):
            RadiusSpec(kind="distance_fraction", c=-0.5)
        with pytest.raises(ValueError):
            RadiusSpec(kind="distance_fraction", c=1.5)
        with pytest.raises(ValueError):
            RadiusSpec(kind="capped_fraction", c=0.5)
        with pytest.raises(ValueError):
            RadiusSpec(kind="distance_fraction", c=0.5, cap=0.1)

    def test_radius_at_rejects_exterior(self):
        with pytest.raises(ValueError):
            RADIUS.radius_at(DISK, np.array([[2.0, 0.0]]))

    @settings(deadline=None, max_examples=30)
    @given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95),
           st.floats(0.05, 1.0))
    def test_admissible_balls_fit(self, x, y, c):
        if float(signed_distance(DISK, np.array([x, y]))) <= 1e-6:
            return
        r = RadiusSpec(kind="distance_fraction", c=c)
        delta = float(r.radius_at(DISK, np.array([[x, y]]))[0])
        assert contains_ball(DISK, (x, y), delta * (1.0 - 1e-9))


class TestBuildStencil:
    def test_points_inside_ball_and_domain(self):
        node = int(MASK17.interior[MASK17.interior.size // 2])
        st_ = build_stencil(DISK, GRID17, MASK17, RADIUS, QUAD8, node)
        x = GRID17.nodes()[node]
        dist = np.linalg.norm(st_.points - x, axis=1)
        assert dist.max() < st_.radius
        assert np.all(signed_distance(DISK, st_.points) > 0.0)

    def test_weights_are_uniform_probability(self):
        node = int(MASK17.interior[0])
        st_ = build_stencil(DISK, GRID17, MASK17, RADIUS, QUAD8, node)
        assert st_.weights.sum() == pytest.approx(1.0, abs=1e-13)
        assert np.all(st_.weights > 0.0)
        assert np.allclose(st_.weights, st_.weights[0])

    def test_monte_carlo_reproducible(self):
        node = int(MASK17.interior[3])
        quad = QuadratureSpec(kind="monte_carlo", samples=256, seed=7)
        a = build_stencil(DISK, GRID17, MASK17, RADIUS, quad, node)
        b = build_stencil(DISK, GRID17, MASK17, RADIUS, quad, node)
        assert np.array_equal(a.points, b.points)

    def test_monte_carlo_streams_differ_by_node(self):
        quad = QuadratureSpec(kind="monte_carlo", samples=256, seed=7)
        a = build_stencil(DISK, GRID17, MASK17, RADIUS, quad,
                          int(MASK17.interior[3]))
        b = build_stencil(DISK, GRID17, MASK17, RADIUS, quad,
                          int(MASK17.interior[4]))
        assert not np.array_equal(a.points - a.points.mean(axis=0),
                                  b.points - b.points.mean(axis=0))

    def test_rejects_non_interior_node(self):
        with pytest.raises(ValueError):
            build_stencil(DISK, GRID17, MASK17, RADIUS, QUAD8,
                          int(MASK17.boundary[0]))

    def test_rejects_unresolvable_quadrature(self):
        # a single midpoint sample cannot resolve 2^n corners
        starved = SimpleNamespace(kind="product_midpoint", samples_per_axis=1,
                                  samples=0, seed=0)
        with pytest.raises(ValueError):
            build_stencil(DISK, GRID17, MASK17, RADIUS, starved,
                          int(MASK17.interior[0]))

    def test_midpoint_ball_filter_count(self):
        # 16^2 midpoint lattice keeps the fraction of cells inside the unit
        # ball, close to pi/4 of 256
        node = int(MASK17.interior[MASK17.interior.size // 2])
        quad = QuadratureSpec(kind="product_midpoint", samples_per_axis=16)
        st_ = build_stencil(DISK, GRID17, MASK17, RADIUS, quad, node)
        assert 190 <= st_.points.shape[0] <= 210


class TestOperatorStructure:
    def test_matrix_shape(self):
        assert OP17.matrix.shape == (MASK17.interior.size,
                                     GRID17.node_count)

    def test_rows_are_convex_combinations(self):
        sums = np.asarray(OP17.matrix.sum(axis=1)).ravel()
        assert np.abs(sums - 1.0).max() < 1e-12
        assert OP17.matrix.data.min() >= 0.0

    def test_no_exterior_columns(self):
        labels = MASK17.labels.ravel()
        assert np.all(labels[OP17.matrix.indices] != EXTERIOR)

    def test_redistribute_scheme_shares_structure(self):
        op = build_operator(DISK, GRID17, MASK17, RADIUS, QUAD8,
                            scheme="redistribute")
        sums = np.asarray(op.matrix.sum(axis=1)).ravel()
        assert np.abs(sums - 1.0).max() < 1e-12
        assert np.all(MASK17.labels.ravel()[op.matrix.indices] != EXTERIOR)

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            build_operator(DISK, GRID17, MASK17, RADIUS, QUAD8,
                           scheme="extrapolate")

    def test_every_blend_point_resolved_on_disk(self):
        assert OP17.unresolved_points == 0

    def test_budget_positive_and_shaped(self):
        budget = OP17.one_step_budget()
        assert budget.shape == (MASK17.interior.size,)
        assert np.all(budget > 0.0)

    def test_monte_carlo_budget_uses_sample_count(self):
        quad = QuadratureSpec(kind="monte_carlo", samples=400, seed=0)
        op = build_operator(DISK, GRID17, MASK17, RADIUS, quad)
        h = max(GRID17.spacing)
        expect = op.delta ** 2 / 20.0 + h * h
        assert np.allclose(op.one_step_budget(), expect)


class TestApply:
    def test_constant_is_fixed(self):
        f = GridField.constant(GRID17, MASK17, 3.0)
        sf = OP17.apply(f)
        assert sup_diff(sf, f) < 1e-12

    def test_boundary_values_pinned(self):
        b = BoundaryData.from_expression("cos(theta)", DISK)
        f = GridField.constant(GRID17, MASK17, 0.0, boundary=b)
        sf = OP17.apply(f, boundary=b)
        assert np.allclose(sf.values[MASK17.boundary],
                           b.eval(MASK17.boundary_points))

    def test_without_boundary_data_boundary_is_kept(self):
        rng = np.random.default_rng(0)
        f = random_live_field(GRID17, MASK17, rng)
        sf = OP17.apply(f)
        assert np.array_equal(sf.values[MASK17.boundary],
                              f.values[MASK17.boundary])

    def test_layout_mismatch_rejected(self):
        grid = GridSpec(lo=(-1.0, -1.0), hi=(1.0, 1.0), shape=(9, 9))
        f = GridField.constant(grid, build_mask(DISK, grid), 0.0)
        with pytest.raises(ValueError):
            OP17.apply(f)

    def test_apply_sigma_delegates(self):
        f = GridField.constant(GRID17, MASK17, 1.0)
        assert sup_diff(apply_sigma(f, OP17), OP17.apply(f)) == 0.0

    def test_mean_value_of_squared_radius(self):
        # the average of |x|^2 over B(0, delta) is delta^2/2 in the plane;
        # check the center-node row against the closed form
        f = GridField.from_function(GRID17, MASK17,
                                    lambda pts: (pts ** 2).sum(axis=1))
        sf = OP17.apply(f)
        center = int(np.flatnonzero(
            (GRID17.nodes() == 0.0).all(axis=1))[0])
        row = int(np.searchsorted(MASK17.interior, center))
        delta = OP17.delta[row]
        budget = OP17.one_step_budget()[row]
        assert abs(sf.values[center] - delta ** 2 / 2.0) < 10.0 * budget

    @settings(deadline=None, max_examples=15)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_max_principle_and_nonexpansiveness(self, seed):
        rng = np.random.default_rng(seed)
        f = random_live_field(GRID17, MASK17, rng)
        g = random_live_field(GRID17, MASK17, rng)
        sf, sg = OP17.apply(f), OP17.apply(g)
        assert sup_norm(sf) <= sup_norm(f) + 1e-12
        assert sup_diff(sf, sg) <= sup_diff(f, g) + 1e-12
        live_max = f.values[MASK17.live].max()
        live_min = f.values[MASK17.live].min()
        inner = sf.values[MASK17.interior]
        assert inner.max() <= live_max + 1e-12
        assert inner.min() >= live_min - 1e-12


class TestOtherDomains:
    @pytest.mark.parametrize("dom,grid", [
        (DomainSpec(kind="interval", center=(0.5,), radii=(0.5,)),
         GridSpec(lo=(0.0,), hi=(1.0,), shape=(65,))),
        (DomainSpec(kind="box", center=(0.0, 0.0), radii=(1.0, 1.0)),
         GridSpec(lo=(-1.0, -1.0), hi=(1.0, 1.0), shape=(17, 17))),
        (DomainSpec(kind="ellipse", center=(0.0, 0.0), radii=(2.0, 1.0)),
         GridSpec(lo=(-2.0, -1.0), hi=(2.0, 1.0), shape=(33, 17))),
        (DomainSpec(kind="superellipse", center=(0.0, 0.0),
                    radii=(1.0, 1.0), exponent=4.0),
         GridSpec(lo=(-1.0, -1.0), hi=(1.0, 1.0), shape=(17, 17))),
        (DomainSpec(kind="ball", center=(0.0, 0.0, 0.0),
                    radii=(1.0, 1.0, 1.0)),
         GridSpec(lo=(-1.0,) * 3, hi=(1.0,) * 3, shape=(13, 13, 13))),
    ])
    def test_operator_is_row_stochastic_everywhere(self, dom, grid):
        mask = build_mask(dom, grid)
        quad = QuadratureSpec(kind="product_midpoint", samples_per_axis=6)
        op = build_operator(dom, grid, mask, RADIUS, quad)
        sums = np.asarray(op.matrix.sum(axis=1)).ravel()
        assert np.abs(sums - 1.0).max() < 1e-12
        assert op.matrix.data.min() >= 0.0
        assert np.all(mask.labels.ravel()[op.matrix.indices] != EXTERIOR)


class TestAdjacentPairs:
    def test_pairs_are_adjacent_interior(self, disk_operator, disk_mask,
                                         disk_grid):
        pairs = adjacent_pairs(disk_operator, count=50, seed=1)
        assert pairs.shape == (50, 2)
        labels = disk_mask.labels.ravel()
        assert np.all(labels[pairs.ravel()] == 0)
        nodes = disk_grid.nodes()
        d = np.linalg.norm(nodes[pairs[:, 0]] - nodes[pairs[:, 1]], axis=1)
        h = max(disk_grid.spacing)
        assert np.allclose(d, h, atol=1e-12)

    def test_closeness_condition_holds(self, disk_operator, disk_grid):
        pairs = adjacent_pairs(disk_operator, count=50, seed=1)
        rows = np.searchsorted(disk_operator.mask.interior, pairs[:, 0])
        delta = disk_operator.delta[rows]
        nodes = disk_grid.nodes()
        d = np.linalg.norm(nodes[pairs[:, 0]] - nodes[pairs[:, 1]], axis=1)
        assert np.all(d < delta / 2.0)

    def test_insufficient_pool_rejected(self):
        with pytest.raises(ValueError):
            adjacent_pairs(OP17, count=10 ** 6, seed=0)


class TestLipschitzProbe:
    def test_zero_field_gives_zero_ratios(self, disk_operator, disk_grid,
                                          disk_mask):
        pairs = adjacent_pairs(disk_operator, count=20, seed=0)
        f = GridField.constant(disk_grid, disk_mask, 0.0)
        assert np.all(sigma_lipschitz_probe(f, disk_operator, pairs) == 0.0)

    def test_ratios_finite_for_generic_field(self, disk_operator, disk_grid,
                                             disk_mask):
        pairs = adjacent_pairs(disk_operator, count=100, seed=2)
        f = GridField.from_function(disk_grid, disk_mask,
                                    lambda pts: pts[:, 0] * pts[:, 1])
        ratios = sigma_lipschitz_probe(f, disk_operator, pairs)
        assert ratios.shape == (100,)
        assert np.all(np.isfinite(ratios))
        assert np.all(ratios >= 0.0)

    def test_rejects_non_interior_pairs(self, disk_operator, disk_grid,
                                        disk_mask):
        f = GridField.constant(disk_grid, disk_mask, 1.0)
        bad = np.array([[disk_mask.interior[0], disk_mask.boundary[0]]])
        with pytest.raises(ValueError):
            sigma_lipschitz_probe(f, disk_operator, bad)

    def test_rejects_distant_pairs(self, disk_operator, disk_grid, disk_mask):
        f = GridField.constant(disk_grid, disk_mask, 1.0)
        # two interior nodes far beyond delta/2 of each other
        center = int(np.flatnonzero(
            (disk_grid.nodes() == 0.0).all(axis=1))[0])
        far = int(disk_mask.interior[0])
        with pytest.raises(ValueError):
            sigma_lipschitz_probe(f, disk_operator,
                                  np.array([[center, far]]))
