"""Per-neighborhood linear algebra: spectra and weight constructions.

Every embedding method in this library describes each neighborhood by
weights encoding linear relations among its points:

* ``lle_weights`` reconstructs a point from its neighbors with weights
  that sum to one (a single relation per point).
* ``hlle_weights`` builds the classic quadratic construction: columns
  obtained by orthogonalizing componentwise products of the leading
  right singular vectors against the constant vector and those singular
  vectors.
* ``tlle_weights`` keeps only what the quadratic construction actually
  uses: any m orthonormal vectors perpendicular to the constant vector
  and to the leading right singular vectors annihilate the tangential
  coordinates of the neighborhood, and random draws supply them.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, RankDeficiencyError, ValidationError

# sigma_dim below this multiple of sigma_1 marks a degenerate neighborhood
SIGNIFICANT_SV_RATIO = 1e-10
# residual norm under which a candidate column counts as linearly dependent
GS_DEPENDENCY_TOL = 1e-8
MAX_REDRAWS = 16

H_KINDS = ("h_weights", "hessian_estimator")


@dataclass
class LocalSpectrum:
    """Centered SVD of one neighborhood.

    The columns of ``right_vectors`` live in neighbor space (length k);
    the first few of them, scaled by the singular values, are the
    coordinates of the neighbors in the local principal directions.
    """

    owner: int
    mean: np.ndarray             # (D,) neighborhood centroid
    singular_values: np.ndarray  # (min(D, k),) non-increasing
    right_vectors: np.ndarray    # (k, k) orthogonal
    left_vectors: np.ndarray     # (D, D) orthogonal; first columns span the tangent plane

    @property
    def k(self) -> int:
        return self.right_vectors.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.mean.shape[0]


@dataclass
class WeightBlock:
    """Per-neighborhood weight matrix.

    ``matrix`` is k x m.  For the h-weight kinds the columns are
    orthonormal, sum to zero and are orthogonal to the leading right
    singular vectors of the neighborhood.  For ``w_weight`` the single
    column holds reconstruction weights summing to one, and ``residual``
    reports the reconstruction error of the owner point.
    """

    kind: str
    matrix: np.ndarray
    owner: int
    residual: float | None = None

    def __post_init__(self):
        if self.kind not in H_KINDS and self.kind != "w_weight":
            raise ValidationError(f"unknown weight kind {self.kind!r}")

    @property
    def is_h_kind(self) -> bool:
        return self.kind in H_KINDS

    @property
    def n_weights(self) -> int:
        return self.matrix.shape[1]


@dataclass
class DimEstimate:
    """Majority-vote intrinsic dimension with the per-value histogram."""

    dim: int
    votes: dict = field(default_factory=dict)
    excluded: int = 0


def center_and_svd(cloud, nbr_row, owner=-1) -> LocalSpectrum:
    """Full SVD of the neighborhood matrix centered on its mean."""
    x = cloud.points[np.asarray(nbr_row, dtype=int)]
    mean = x.mean(axis=0)
    m = (x - mean).T  # (D, k), columns sum to zero
    u, s, vt = np.linalg.svd(m, full_matrices=True)
    return LocalSpectrum(
        owner=int(owner),
        mean=mean,
        singular_values=s,
        right_vectors=vt.T,
        left_vectors=u,
    )


def tangential_coordinates(spectrum: LocalSpectrum, dim) -> np.ndarray:
    """Neighbor coordinates in the top ``dim`` principal directions.

    Returns a (dim, k) array whose j-th row is sigma_j times the j-th
    right singular vector, i.e. the j-th local coordinate function
    evaluated at the k neighbors.
    """
    s = spectrum.singular_values[:dim]
    return s[:, None] * spectrum.right_vectors[:, :dim].T


def estimate_intrinsic_dim(spectra, ratio_threshold=0.25) -> DimEstimate:
    """Majority vote of per-neighborhood significant singular value counts.

    A singular value is significant when it is at least
    ``ratio_threshold`` times the largest one in its neighborhood.
    Neighborhoods whose spectrum is entirely zero are excluded with a
    warning; ties in the vote go to the smaller dimension.
    """
    spectra = list(spectra)
    if not spectra:
        raise ValidationError("need at least one spectrum")
    if not 0.0 < ratio_threshold < 1.0:
        raise ValidationError(f"ratio_threshold must lie in (0, 1), got {ratio_threshold}")
    votes = Counter()
    excluded = 0
    for sp in spectra:
        s = sp.singular_values
        if s.size == 0 or s[0] <= 0.0:
            excluded += 1
            continue
        votes[int(np.count_nonzero(s >= ratio_threshold * s[0]))] += 1
    if excluded:
        warnings.warn(
            f"excluded {excluded} neighborhood(s) with an all-zero spectrum",
            stacklevel=2,
        )
    if not votes:
        raise NumericError("every neighborhood has an all-zero spectrum")
    dim = max(votes.items(), key=lambda item: (item[1], -item[0]))[0]
    return DimEstimate(dim=dim, votes=dict(sorted(votes.items())), excluded=excluded)


def _orthogonalize(vec, basis):
    """Residual of vec against orthonormal columns; two passes keep
    orthogonality near machine precision even for large k."""
    v = vec.astype(float, copy=True)
    if basis.shape[1]:
        for _ in range(2):
            v -= basis @ (basis.T @ v)
    return v


def _check_rank(spectrum: LocalSpectrum, dim, what):
    s = spectrum.singular_values
    if dim > s.size or s[0] <= 0.0 or s[dim - 1] <= SIGNIFICANT_SV_RATIO * s[0]:
        raise RankDeficiencyError(
            f"{what} needs {dim} significant singular values at point "
            f"{spectrum.owner}; spectrum starts {s[: dim + 1]}",
            point=spectrum.owner,
        )


def _tangent_basis(spectrum: LocalSpectrum, dim):
    """Orthonormalized [constant, leading right singular vectors]."""
    k = spectrum.k
    cols = np.column_stack([np.ones(k), spectrum.right_vectors[:, :dim]])
    basis = np.empty((k, 0))
    for j in range(cols.shape[1]):
        v = _orthogonalize(cols[:, j], basis)
        nrm = np.linalg.norm(v)
        if nrm < GS_DEPENDENCY_TOL:
            raise RankDeficiencyError(
                f"degenerate tangent frame at point {spectrum.owner}",
                point=spectrum.owner,
            )
        basis = np.column_stack([basis, v / nrm])
    return basis


def tlle_weights(spectrum: LocalSpectrum, intrinsic_dim, m, rng_seed) -> WeightBlock:
    """Random h-weights for one neighborhood.

    Draws seeded Gaussian vectors and orthogonalizes them against the
    constant vector, the first ``intrinsic_dim`` right singular vectors
    and each other.  The m surviving unit vectors each have zero sum and
    annihilate the tangential coordinates of the neighborhood.

    ``rng_seed`` may be an int or a tuple of ints; a draw that comes out
    numerically dependent is retried with an incremented seed component,
    at most ``MAX_REDRAWS`` times.
    """
    k = spectrum.k
    if intrinsic_dim < 1:
        raise ValidationError(f"intrinsic_dim must be >= 1, got {intrinsic_dim}")
    if k < intrinsic_dim + 2:
        raise ValidationError(
            f"tangential weights need k >= intrinsic_dim + 2 = {intrinsic_dim + 2}, got k={k}"
        )
    if not 1 <= m <= k - intrinsic_dim - 1:
        raise ValidationError(
            f"m must satisfy 1 <= m <= k - intrinsic_dim - 1 = {k - intrinsic_dim - 1}, got {m}"
        )
    _check_rank(spectrum, intrinsic_dim, "tangential weights")

    seed = list(rng_seed) if isinstance(rng_seed, (tuple, list)) else [int(rng_seed)]
    basis = _tangent_basis(spectrum, intrinsic_dim)
    taken = 0
    redraws = 0
    draw = 0
    cols = []
    while taken < m:
        rng = np.random.default_rng(np.random.SeedSequence(seed + [draw]))
        draw += 1
        v = _orthogonalize(rng.standard_normal(k), basis)
        nrm = np.linalg.norm(v)
        if nrm < GS_DEPENDENCY_TOL:
            redraws += 1
            if redraws > MAX_REDRAWS:
                raise NumericError(
                    f"could not draw {m} independent weight vectors at point "
                    f"{spectrum.owner} after {MAX_REDRAWS} redraws"
                )
            continue
        v /= nrm
        cols.append(v)
        basis = np.column_stack([basis, v])
        taken += 1
    return WeightBlock("h_weights", np.column_stack(cols), spectrum.owner)


def hlle_weights(spectrum: LocalSpectrum, d) -> WeightBlock:
    """Hessian-style h-weights for one neighborhood.

    Orthogonalizes the columns of [1, V_d, products] where ``products``
    holds the componentwise products v_s * v_t for 1 <= s <= t <= d in
    lexicographic order, and keeps the last d(d+1)/2 columns.
    """
    k = spectrum.k
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    n_products = d * (d + 1) // 2
    needed = 1 + d + n_products
    if k < needed:
        raise ValidationError(
            f"hessian weights need k >= 1 + d + d(d+1)/2 = {needed} for d={d}, got k={k}"
        )
    _check_rank(spectrum, d, "hessian weights")

    v = spectrum.right_vectors[:, :d]
    products = [v[:, s] * v[:, t] for s in range(d) for t in range(s, d)]
    basis = _tangent_basis(spectrum, d)
    cols = []
    for col in products:
        w = _orthogonalize(col, basis)
        nrm = np.linalg.norm(w)
        if nrm < GS_DEPENDENCY_TOL:
            raise RankDeficiencyError(
                f"dependent product column during orthogonalization at point {spectrum.owner}",
                point=spectrum.owner,
            )
        w /= nrm
        cols.append(w)
        basis = np.column_stack([basis, w])
    return WeightBlock("hessian_estimator", np.column_stack(cols), spectrum.owner)


def lle_weights(cloud, i, nbr_row, reg=1e-3) -> WeightBlock:
    """Reconstruction weights of point i from its neighbors.

    Solves the sum-to-one constrained least squares through the local
    Gram matrix of difference vectors, conditioned by adding
    ``reg * trace / k`` to the diagonal.  With ``reg=0`` and an exactly
    representable point the minimum-norm exact weights are returned.
    """
    nbr_row = np.asarray(nbr_row, dtype=int)
    k = nbr_row.size
    if k < 1:
        raise ValidationError("need at least one neighbor")
    if reg < 0:
        raise ValidationError(f"reg must be >= 0, got {reg}")
    x = cloud.points
    diffs = x[i] - x[nbr_row]  # (k, D)
    c = diffs @ diffs.T
    if reg > 0:
        c = c + (reg * np.trace(c) / k) * np.eye(k)
    try:
        w = np.linalg.solve(c, np.ones(k))
    except np.linalg.LinAlgError:
        w = _constrained_min_weights(c)
    total = w.sum()
    if not np.isfinite(total) or total == 0.0:
        raise NumericError(
            f"singular local Gram system at point {i}; increase reg (got reg={reg})"
        )
    w = w / total
    residual = float(np.linalg.norm(x[i] - w @ x[nbr_row]))
    return WeightBlock("w_weight", w[:, None], int(i), residual=residual)


def _constrained_min_weights(c):
    """Minimize w^T c w subject to sum(w) = 1 for singular PSD c.

    When the constraint plane meets the null space the quadratic form
    can be made exactly zero; the minimum-norm such w is returned.
    Otherwise the pseudo-inverse stationary point is used.
    """
    evals, evecs = np.linalg.eigh(c)
    tol = max(evals[-1], 0.0) * 1e-12 + 1e-300
    null = evecs[:, evals <= tol]
    if null.shape[1]:
        coeff = null.sum(axis=0)  # = null^T 1
        norm2 = coeff @ coeff
        if norm2 > 1e-24:
            return null @ (coeff / norm2)
    w = np.linalg.pinv(c, hermitian=True) @ np.ones(c.shape[0])
    return w


def hweight_to_wweight(block: WeightBlock, column):
    """Rewrite one h-weight column as reconstruction-style weights.

    Divides the relation through by its largest-magnitude entry (the
    pivot, chosen for numerical stability) so the pivot point is
    expressed as a combination of the others with weights summing to
    one.  Returns ``(pivot_index, weights)`` where ``weights`` has k-1
    entries in the original neighbor order with the pivot removed.
    """
    if not block.is_h_kind:
        raise ValidationError("expected an h-weight block")
    h = block.matrix[:, column]
    pivot = int(np.argmax(np.abs(h)))
    if h[pivot] == 0.0:
        raise ValidationError("all-zero weight column")
    weights = -np.delete(h, pivot) / h[pivot]
    return pivot, weights
