"""Embedding quality metrics.

These scores quantify what a good unfolding should do: keep the local
relations used by the method (``relation_residual``), avoid collapsing
to an affine shadow of the input (``affine_projection_score``), keep
neighbors neighbors (``neighborhood_preservation``), match a known flat
chart up to similarity (``procrustes_error``) and, for closed curves,
stay free of crossings (``self_intersection_check``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .assembly import Embedding
from .dataset import PointCloud
from .errors import ValidationError
from .neighbors import knn

COLLINEAR_EPS = 1e-12  # orientation values below this (relative) count as zero


@dataclass
class EvalReport:
    """Bundle of the metric values for one run, with their parameters."""

    relation_residual: float
    affine_projection_score: float
    neighborhood_preservation: float
    procrustes_error: float | None = None
    self_intersection: bool | None = None
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "relation_residual": self.relation_residual,
            "affine_projection_score": self.affine_projection_score,
            "neighborhood_preservation": self.neighborhood_preservation,
            "procrustes_error": self.procrustes_error,
            "self_intersection": self.self_intersection,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> str:
        """Flat comma-separated row for sweep aggregation."""
        cells = [
            repr(float(self.relation_residual)),
            repr(float(self.affine_projection_score)),
            repr(float(self.neighborhood_preservation)),
            "" if self.procrustes_error is None else repr(float(self.procrustes_error)),
            "" if self.self_intersection is None else str(int(self.self_intersection)),
        ]
        return ",".join(cells)


def _coords(obj) -> np.ndarray:
    if isinstance(obj, Embedding):
        return obj.coords
    if isinstance(obj, PointCloud):
        return obj.points
    arr = np.atleast_2d(np.asarray(obj, dtype=float))
    if arr.ndim != 2:
        raise ValidationError("expected a 2-D coordinate array")
    return arr


def relation_residual(embedding, nbrs, blocks) -> float:
    """Value of the quadratic objective the embedding minimizes.

    Sum over points of the squared Frobenius norm of the neighborhood
    coordinates times the weight block (h-kinds), or of the squared
    reconstruction error (w-kind).  Empty block lists contribute zero.
    """
    y = _coords(embedding)
    total = 0.0
    for b in blocks:
        idx = nbrs.rows[b.owner]
        if b.matrix.shape[0] != idx.size:
            raise ValidationError(
                f"block at point {b.owner} has {b.matrix.shape[0]} rows, expected {idx.size}"
            )
        if b.kind == "w_weight":
            diff = y[b.owner] - b.matrix[:, 0] @ y[idx]
            total += float(diff @ diff)
        else:
            local = y[idx].T @ b.matrix  # (d, m)
            total += float((local * local).sum())
    return total


def affine_projection_score(x, y) -> float:
    """Explained variance of the best affine map from input to embedding.

    A score near 1 flags a projection pattern (the embedding is
    essentially an affine image of the input); near 0 means the
    embedding is genuinely nonlinear.  Requires at least D+1 points to
    fit the map.
    """
    xs = _coords(x)
    ys = _coords(y)
    if xs.shape[0] != ys.shape[0]:
        raise ValidationError("point counts differ")
    n, d_in = xs.shape
    if n < d_in + 1:
        raise ValidationError(f"affine fit is ill-posed: need N >= D+1 = {d_in + 1}, got {n}")
    design = np.column_stack([xs, np.ones(n)])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = ys - design @ coef
    denom = float(((ys - ys.mean(axis=0)) ** 2).sum())
    if denom == 0.0:
        return 1.0
    score = 1.0 - float((resid**2).sum()) / denom
    return min(1.0, max(0.0, score))


def neighborhood_preservation(x, y, k_eval) -> float:
    """Mean fraction of k nearest neighbors shared before and after."""
    xs = _coords(x)
    ys = _coords(y)
    if xs.shape[0] != ys.shape[0]:
        raise ValidationError("point counts differ")
    rows_x = knn(xs, k_eval).rows
    rows_y = knn(ys, k_eval).rows
    shared = sum(
        np.intersect1d(rows_x[i], rows_y[i], assume_unique=True).size
        for i in range(xs.shape[0])
    )
    return shared / (xs.shape[0] * k_eval)


def procrustes_error(y, ground_truth) -> float:
    """Relative residual after the best similarity alignment.

    Minimizes ||s Q y + t - g|| over scale s > 0, orthogonal Q and
    translation t, normalized by the centered norm of the target.  The
    result is symmetric in its arguments and zero exactly when the two
    clouds are similar.
    """
    ys = _coords(y)
    gs = _coords(ground_truth)
    if gs.shape[1] != ys.shape[1]:
        raise ValidationError(
            f"dimension mismatch: embedding has d={ys.shape[1]}, target has p={gs.shape[1]}"
        )
    if gs.shape[0] != ys.shape[0]:
        raise ValidationError("point counts differ")
    a = ys - ys.mean(axis=0)
    b = gs - gs.mean(axis=0)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        raise ValidationError("target cloud is a single repeated point")
    if na == 0.0:
        return 1.0
    overlap = np.linalg.svd(a.T @ b, compute_uv=False).sum()
    cosine = min(1.0, overlap / (na * nb))
    return float(np.sqrt(max(0.0, 1.0 - cosine * cosine)))


def _segment_min_dist(p, q, r, s):
    """Smallest distance between non-crossing segments [p,q] and [r,s]."""

    def point_seg(pt, a, b):
        ab = b - a
        denom = ab @ ab
        t = 0.0 if denom == 0.0 else np.clip((pt - a) @ ab / denom, 0.0, 1.0)
        return np.linalg.norm(pt - (a + t * ab))

    return min(
        point_seg(p, r, s), point_seg(q, r, s), point_seg(r, p, q), point_seg(s, p, q)
    )


def self_intersection_check(y, theta=None, tube_radius_factor=0.0) -> bool:
    """Whether the closed polyline through the points crosses itself.

    Points are ordered by the curve parameter ``theta`` and joined into
    a closed polyline; the function reports True when any two
    non-adjacent segments intersect (exact orientation tests with a
    relative collinearity epsilon).  With ``tube_radius_factor > 0``,
    segment pairs closer than that factor times the median edge length
    also count as intersections.
    """
    ys = _coords(y)
    if ys.shape[1] != 2:
        raise ValidationError("self-intersection test is defined for d=2 embeddings")
    if theta is None:
        raise ValidationError("curve parameters are required to order the polyline")
    theta = np.asarray(theta, dtype=float).ravel()
    n = ys.shape[0]
    if theta.size != n:
        raise ValidationError("theta length does not match the number of points")
    if n < 10:
        raise ValidationError("need at least 10 points for a meaningful polyline")

    p = ys[np.argsort(theta, kind="stable")]
    a1 = p
    a2 = np.roll(p, -1, axis=0)
    extent = float(np.ptp(p, axis=0).max())
    eps = COLLINEAR_EPS * max(extent, 1.0) ** 2
    edge_lengths = np.linalg.norm(a2 - a1, axis=1)
    tube = tube_radius_factor * float(np.median(edge_lengths))

    def cross(ox, oy, ax, ay, bx, by):
        return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)

    for i in range(n - 2):
        j_hi = n - 1 if i == 0 else n  # wrap-adjacent pair (0, n-1) is skipped
        js = np.arange(i + 2, j_hi)
        if js.size == 0:
            continue
        p1, p2 = a1[i], a2[i]
        q1, q2 = a1[js], a2[js]
        d1 = cross(p1[0], p1[1], p2[0], p2[1], q1[:, 0], q1[:, 1])
        d2 = cross(p1[0], p1[1], p2[0], p2[1], q2[:, 0], q2[:, 1])
        d3 = cross(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], np.full(js.size, p1[0]), np.full(js.size, p1[1]))
        d4 = cross(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], np.full(js.size, p2[0]), np.full(js.size, p2[1]))
        proper = (d1 * d2 < -eps * eps) & (d3 * d4 < -eps * eps)
        if np.any(proper):
            return True
        touching = (np.abs(d1) <= eps) | (np.abs(d2) <= eps) | (np.abs(d3) <= eps) | (np.abs(d4) <= eps)
        if np.any(touching):
            for j in js[touching]:
                if _touch_intersects(p1, p2, a1[j], a2[j], eps):
                    return True
        if tube > 0.0:
            for j in js:
                if _segment_min_dist(p1, p2, a1[j], a2[j]) < tube:
                    return True
    return False


def _touch_intersects(p1, p2, q1, q2, eps):
    """Exact test for a pair flagged as touching or collinear."""

    def orient(o, a, b):
        v = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        return 0.0 if abs(v) <= eps else v

    def on_segment(o, a, b):
        return (
            min(o[0], b[0]) - 1e-15 <= a[0] <= max(o[0], b[0]) + 1e-15
            and min(o[1], b[1]) - 1e-15 <= a[1] <= max(o[1], b[1]) + 1e-15
        )

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0) or d1 == 0 or d2 == 0) and (
        (d3 > 0) != (d4 > 0) or d3 == 0 or d4 == 0
    ):
        if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0:
            return (
                on_segment(q1, p1, q2)
                or on_segment(q1, p2, q2)
                or on_segment(p1, q1, p2)
                or on_segment(p1, q2, p2)
            )
        if d1 == 0 and not on_segment(q1, p1, q2):
            return False
        if d2 == 0 and not on_segment(q1, p2, q2):
            return False
        if d3 == 0 and not on_segment(p1, q1, p2):
            return False
        if d4 == 0 and not on_segment(p1, q2, p2):
            return False
        return True
    return False


def build_report(cloud, embedding, nbrs, blocks, k_eval, tube_radius_factor=0.0) -> EvalReport:
    """Evaluate every applicable metric for one finished run.

    Procrustes error is included when the ground truth has as many
    columns as the embedding; the self-intersection test when the
    embedding is planar and the ground truth is a 1-D curve parameter.
    """
    gt = cloud.ground_truth
    procrustes = None
    intersects = None
    if gt is not None and gt.shape[1] == embedding.dim:
        procrustes = procrustes_error(embedding, gt)
    if gt is not None and gt.shape[1] == 1 and embedding.dim == 2 and cloud.n >= 10:
        intersects = self_intersection_check(embedding, gt[:, 0], tube_radius_factor)
    return EvalReport(
        relation_residual=relation_residual(embedding, nbrs, blocks),
        affine_projection_score=affine_projection_score(cloud, embedding),
        neighborhood_preservation=neighborhood_preservation(cloud, embedding, k_eval),
        procrustes_error=procrustes,
        self_intersection=intersects,
        params={"k_eval": int(k_eval), "tube_radius_factor": float(tube_radius_factor)},
    )
