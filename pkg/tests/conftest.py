"""Shared fixtures: small disk/interval instances, built once per session.

Operator assembly dominates test runtime, so every test that can share the
65x65 disk instance does; the acceptance tests build their own larger
instances at the resolutions they pin.
"""

from __future__ import annotations

import numpy as np
import pytest

from ballaverage import (BoundaryData, DomainSpec, GridField, GridSpec,
                         QuadratureSpec, RadiusSpec, build_mask,
                         build_operator)


@pytest.fixture(scope="session")
def disk_domain():
    return DomainSpec(kind="ball", center=(0.0, 0.0), radii=(1.0, 1.0))


@pytest.fixture(scope="session")
def disk_grid():
    return GridSpec(lo=(-1.0, -1.0), hi=(1.0, 1.0), shape=(65, 65))


@pytest.fixture(scope="session")
def disk_mask(disk_domain, disk_grid):
    return build_mask(disk_domain, disk_grid)


@pytest.fixture(scope="session")
def disk_operator(disk_domain, disk_grid, disk_mask):
    return build_operator(
        disk_domain, disk_grid, disk_mask,
        RadiusSpec(kind="distance_fraction", c=0.5),
        QuadratureSpec(kind="product_midpoint", samples_per_axis=16))


@pytest.fixture(scope="session")
def interval_domain():
    return DomainSpec(kind="interval", center=(0.5,), radii=(0.5,))


@pytest.fixture(scope="session")
def interval_grid():
    return GridSpec(lo=(0.0,), hi=(1.0,), shape=(257,))


@pytest.fixture(scope="session")
def interval_mask(interval_domain, interval_grid):
    return build_mask(interval_domain, interval_grid)


@pytest.fixture(scope="session")
def interval_operator(interval_domain, interval_grid, interval_mask):
    return build_operator(
        interval_domain, interval_grid, interval_mask,
        RadiusSpec(kind="distance_fraction", c=0.5),
        QuadratureSpec(kind="product_midpoint", samples_per_axis=32))


def random_live_field(grid, mask, rng, scale=1.0) -> GridField:
    """A field with independent uniform values on every live node."""
    values = np.full(grid.node_count, np.nan)
    values[mask.live] = rng.uniform(-scale, scale, size=mask.live.size)
    return GridField(grid=grid, mask=mask, values=values)
