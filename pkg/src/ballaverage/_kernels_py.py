"""Pure-numpy fallback for the hot assembly kernel. Arithmetic mirrors the
compiled kernel operation for operation so both backends emit identical
bits."""

from __future__ import annotations

import numpy as np

from .geometry import INTERIOR

BACKEND_NAME = "python"


def corner_weights(pts: np.ndarray, lo: np.ndarray, inv_spacing: np.ndarray,
                   shape: np.ndarray, strides: np.ndarray,
                   labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Multilinear cell corners and weights for a batch of points.

    Parameters
    ----------
    pts : (p, n) float64
        Evaluation points, already inside the grid box.
    lo, inv_spacing : (n,) float64
        Grid origin and reciprocal spacing per axis.
    shape, strides : (n,) int64
        Node counts and C-order strides per axis.
    labels : (node_count,) uint8
        Flat node labels.

    Returns
    -------
    cols : (p, 2^n) int64
        Flat node index of every cell corner.
    weights : (p, 2^n) float64
        Matching multilinear weights (nonnegative, sum 1).
    clean : (p,) bool
        True where every corner is an interior node.
    """
    npts, dim = pts.shape
    ncorner = 1 << dim
    cell = np.empty((npts, dim), dtype=np.int64)
    t = np.empty((npts, dim))
    for axis in range(dim):
        s = (pts[:, axis] - lo[axis]) * inv_spacing[axis]
        c = np.floor(s).astype(np.int64)
        np.clip(c, 0, shape[axis] - 2, out=c)
        f = s - c
        np.clip(f, 0.0, 1.0, out=f)
        cell[:, axis] = c
        t[:, axis] = f

    cols = np.empty((npts, ncorner), dtype=np.int64)
    weights = np.empty((npts, ncorner))
    for corner in range(ncorner):
        flat = np.zeros(npts, dtype=np.int64)
        w = np.ones(npts)
        for axis in range(dim):
            bit = (corner >> axis) & 1
            flat += (cell[:, axis] + bit) * strides[axis]
            w = w * (t[:, axis] if bit else 1.0 - t[:, axis])
        cols[:, corner] = flat
        weights[:, corner] = w

    clean = np.all(labels[cols] == INTERIOR, axis=1)
    return cols, weights, clean
