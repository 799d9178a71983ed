"""Compare the compiled and pure-Python averaging kernels.

Builds the disk operator at each requested resolution with both
backends, checks the two matrices are bit-identical, and times assembly
plus repeated application. Run from the repository root:

    python3 benchmarks/bench_backends.py --resolutions 129 257
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ballaverage import (DomainSpec, GridField, GridSpec, QuadratureSpec,
                         RadiusSpec, backend_name, build_mask, build_operator)
from ballaverage import _backend, _kernels_py

DISK = DomainSpec(kind="ball", center=(0.0, 0.0), radii=(1.0, 1.0))


def _build(res: int, m: int):
    grid = GridSpec(lo=(-1.0, -1.0), hi=(1.0, 1.0), shape=(res, res))
    mask = build_mask(DISK, grid)
    t0 = time.perf_counter()
    op = build_operator(DISK, grid, mask,
                        RadiusSpec(kind="distance_fraction", c=0.5),
                        QuadratureSpec(kind="product_midpoint",
                                       samples_per_axis=m))
    return grid, mask, op, time.perf_counter() - t0


def _time_apply(grid, mask, op, repeats: int) -> float:
    rng = np.random.default_rng(0)
    vals = np.full(grid.node_count, np.nan)
    vals[mask.live] = rng.uniform(-1.0, 1.0, mask.live.size)
    f = GridField(grid=grid, mask=mask, values=vals)
    op.apply(f)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        f = op.apply(f)
    return (time.perf_counter() - t0) / repeats


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--resolutions", type=int, nargs="+",
                        default=[129, 257])
    parser.add_argument("--samples-per-axis", type=int, default=16)
    parser.add_argument("--applies", type=int, default=50)
    args = parser.parse_args(argv)

    if backend_name() != "compiled":
        parser.error("compiled backend unavailable; nothing to compare")
    compiled_kernel = _backend.corner_weights

    print(f"{'grid':>8} {'backend':>9} {'assemble':>10} {'apply':>10} "
          f"{'nnz':>10}")
    for res in args.resolutions:
        rows = []
        matrices = []
        for label, kernel in (("compiled", compiled_kernel),
                              ("python", _kernels_py.corner_weights)):
            _backend.corner_weights = kernel
            try:
                grid, mask, op, dt = _build(res, args.samples_per_axis)
            finally:
                _backend.corner_weights = compiled_kernel
            per_apply = _time_apply(grid, mask, op, args.applies)
            rows.append((label, dt, per_apply, op.matrix.nnz))
            matrices.append(op.matrix)
        a, b = matrices
        identical = (np.array_equal(a.indptr, b.indptr)
                     and np.array_equal(a.indices, b.indices)
                     and np.array_equal(a.data, b.data))
        for label, dt, per_apply, nnz in rows:
            print(f"{res:>6}^2 {label:>9} {dt:>9.2f}s {per_apply * 1e3:>8.2f}ms "
                  f"{nnz:>10}")
        print(f"{'':>8} matrices bit-identical: {identical}")
        if not identical:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
