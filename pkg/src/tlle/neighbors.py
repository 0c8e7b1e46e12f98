"""Exact k-nearest-neighbor index with deterministic tie handling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import PointCloud
from .errors import ValidationError

_CHUNK = 1024  # rows of the distance matrix materialized at a time


@dataclass
class NeighborhoodIndex:
    """Per-point neighbor lists.

    ``rows[i]`` holds the indices of the k nearest neighbors of point i,
    sorted by ascending Euclidean distance, never including i itself.
    Distance ties are broken toward the smaller index so the result is
    reproducible across platforms.
    """

    k: int
    rows: np.ndarray  # (N, k) integer array

    @property
    def n(self) -> int:
        return self.rows.shape[0]


def _as_points(data) -> np.ndarray:
    if isinstance(data, PointCloud):
        return data.points
    pts = np.atleast_2d(np.asarray(data, dtype=float))
    if pts.ndim != 2:
        raise ValidationError("expected a 2-D point array")
    return pts


def knn(data, k) -> NeighborhoodIndex:
    """Exact Euclidean k-nearest neighbors of every point, self excluded.

    Brute force over all pairs; squared distances are evaluated in
    chunks to bound memory.  A stable sort on squared distance gives the
    smaller-index tie break.
    """
    pts = _as_points(data)
    n = pts.shape[0]
    if not 1 <= k <= n - 1:
        raise ValidationError(f"k must satisfy 1 <= k <= N-1 = {n - 1}, got {k}")

    sq = np.einsum("ij,ij->i", pts, pts)
    rows = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (pts[start:stop] @ pts.T)
        np.maximum(d2, 0.0, out=d2)  # clamp roundoff so duplicates tie exactly
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        rows[start:stop] = order[:, :k]
    return NeighborhoodIndex(k=int(k), rows=rows)


def save_neighbors_csv(index: NeighborhoodIndex, path):
    """Dump the index for debugging: row i lists the neighbors of point i."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in index.rows:
            fh.write(",".join(str(int(j)) for j in row) + "\n")
