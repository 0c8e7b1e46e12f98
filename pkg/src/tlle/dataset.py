"""Synthetic manifold generators and point-cloud I/O.

All generators are pure functions of their parameters and seed: calling
them twice with identical arguments returns bit-identical clouds.  Each
generated cloud carries ground-truth intrinsic parameters so embeddings
can be scored against a known isometric chart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CsvParseError, ValidationError

# Parameter rectangle of the rolled spiral surface.  The lower winding
# starts inside the curl so curvature stays nontrivial everywhere.
SWISS_T_RANGE = (1.5 * np.pi, 4.5 * np.pi)
SWISS_S_RANGE = (0.0, 21.0)


@dataclass
class PointCloud:
    """N points in an ambient Euclidean space.

    Parameters
    ----------
    points : ndarray of shape (N, D)
        Coordinates, one point per row.  Must be finite.
    ground_truth : ndarray of shape (N, p), optional
        Intrinsic parameters per point, when the cloud was produced by a
        generator that knows them.
    """

    points: np.ndarray
    ground_truth: np.ndarray | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValidationError("points must be a non-empty 2-D array")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("points contain non-finite coordinates")
        self.points = pts
        if self.ground_truth is not None:
            gt = np.atleast_2d(np.asarray(self.ground_truth, dtype=float))
            if gt.shape[0] != pts.shape[0]:
                raise ValidationError(
                    f"ground_truth has {gt.shape[0]} rows, expected {pts.shape[0]}"
                )
            self.ground_truth = gt

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def spiral_arclength(t):
    """Arc length of the planar spiral (t cos t, t sin t), measured from t=0.

    The speed of the spiral is sqrt(1 + t^2), which integrates in closed
    form to (t sqrt(1 + t^2) + asinh t) / 2.
    """
    t = np.asarray(t, dtype=float)
    return 0.5 * (t * np.sqrt(1.0 + t * t) + np.arcsinh(t))


def gen_swiss_roll_hole(n, hole_fraction, seed) -> PointCloud:
    """Sample a rolled 2-D sheet with a disk removed from its center.

    Parameters (t, s) are drawn uniformly from the rectangle
    ``SWISS_T_RANGE x SWISS_S_RANGE`` minus a centered disk whose area is
    ``hole_fraction`` of the rectangle's, then mapped to 3-D through
    (t cos t, s, t sin t).

    Ground truth stores (arclength(t), s), an exact isometric chart of
    the surface, so Procrustes comparison against a flat unfolding is
    meaningful.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not 0.0 < hole_fraction < 1.0:
        raise ValidationError(f"hole_fraction must lie in (0, 1), got {hole_fraction}")
    rng = np.random.default_rng(seed)
    t_lo, t_hi = SWISS_T_RANGE
    s_lo, s_hi = SWISS_S_RANGE
    area = (t_hi - t_lo) * (s_hi - s_lo)
    radius2 = hole_fraction * area / np.pi
    t_c, s_c = 0.5 * (t_lo + t_hi), 0.5 * (s_lo + s_hi)

    ts = np.empty(0)
    ss = np.empty(0)
    while ts.size < n:
        want = max(n - ts.size, 64)
        t = rng.uniform(t_lo, t_hi, size=want)
        s = rng.uniform(s_lo, s_hi, size=want)
        keep = (t - t_c) ** 2 + (s - s_c) ** 2 >= radius2
        ts = np.concatenate([ts, t[keep]])
        ss = np.concatenate([ss, s[keep]])
    ts, ss = ts[:n], ss[:n]

    points = np.column_stack([ts * np.cos(ts), ss, ts * np.sin(ts)])
    arclen = spiral_arclength(ts) - spiral_arclength(t_lo)
    return PointCloud(points, np.column_stack([arclen, ss]))


def trefoil_curve(theta) -> np.ndarray:
    """Map curve parameters to points of the standard trefoil knot."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    r = 2.0 + np.cos(3.0 * theta)
    return np.column_stack([r * np.cos(2.0 * theta), r * np.sin(2.0 * theta), np.sin(3.0 * theta)])


def gen_trefoil(n, seed) -> PointCloud:
    """Sample the trefoil knot at angles drawn uniformly from [0, 2*pi).

    Ground truth stores the angle, a 1-D (non-isometric) chart of the
    closed curve.
    """
    if n < 3:
        raise ValidationError(f"n must be >= 3 for a closed curve sample, got {n}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return PointCloud(trefoil_curve(theta), theta[:, None])


def random_orthogonal(dim, seed) -> np.ndarray:
    """Deterministic orthogonal matrix from a seeded Gaussian draw.

    QR of a Gaussian matrix with the sign of R's diagonal folded into Q;
    the factorization is then unique, so the result only depends on the
    seed.
    """
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diagonal(r))
    signs[signs == 0] = 1.0
    return q * signs


def lift_isometric(cloud: PointCloud, target_dim, seed, orthogonal=None) -> PointCloud:
    """Embed a cloud isometrically into a higher-dimensional space.

    Coordinates are zero-padded to ``target_dim`` and rotated by one
    orthogonal matrix, so all pairwise distances are preserved to
    roundoff.  Pass ``orthogonal`` to override the seeded random draw
    (e.g. the identity, which returns the padded input unchanged).
    """
    if target_dim < cloud.dim:
        raise ValidationError(
            f"target_dim must be >= input dimension {cloud.dim}, got {target_dim}"
        )
    if orthogonal is None:
        q = random_orthogonal(target_dim, seed)
    else:
        q = np.asarray(orthogonal, dtype=float)
        if q.shape != (target_dim, target_dim):
            raise ValidationError("orthogonal override has the wrong shape")
    padded = np.zeros((cloud.n, target_dim))
    padded[:, : cloud.dim] = cloud.points
    gt = None if cloud.ground_truth is None else cloud.ground_truth.copy()
    return PointCloud(padded @ q.T, gt)


def write_matrix_csv(values, path):
    """Write a 2-D array as comma-separated rows with exact round-trip."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def save_csv(cloud: PointCloud, path):
    """Write the coordinates of a cloud, one point per row."""
    write_matrix_csv(cloud.points, path)


def load_csv(path) -> PointCloud:
    """Read a point cloud from a CSV file.

    Every row must hold the same number of numeric cells.  A single
    leading non-numeric row is accepted as a header.  Parse failures
    report the offending 1-based row number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    rows = []
    width = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            values = [float(c) for c in cells]
        except ValueError:
            if not rows and lineno == 1:
                continue  # header
            raise CsvParseError(f"non-numeric cell at row {lineno}", row=lineno) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise CsvParseError(
                f"row {lineno} has {len(values)} columns, expected {width}", row=lineno
            )
        rows.append(values)
    if not rows:
        raise CsvParseError("no data rows found", row=0)
    return PointCloud(np.array(rows, dtype=float))


def write_manifest(path, generator, n, seed, parameters, files):
    """Record how a dataset was produced, for exact reproduction."""
    payload = {
        "generator": generator,
        "n": int(n),
        "seed": int(seed),
        "parameters": parameters,
        "files": files,
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
