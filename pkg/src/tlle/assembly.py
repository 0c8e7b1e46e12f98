"""Global alignment matrix assembly and the bottom-eigenvector solve.

The per-neighborhood weight blocks define a sparse positive
semidefinite quadratic form on functions over the points.  Minimizing
that form over orthonormal, mean-zero coordinate rows amounts to taking
the eigenvectors for the smallest nonzero eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import qr as scipy_qr
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import DegenerateNullSpaceError, NumericError, ValidationError
from .localfit import WeightBlock
from .neighbors import NeighborhoodIndex

DENSE_SOLVER_MAX = 500     # dense path mandatory at or below this size
RESIDUAL_REL_TOL = 1e-9    # eigenpair residual bound relative to ||K||
NULL_TOL_REL = 1e-12       # zero-eigenvalue tolerance relative to the mean diagonal
CONSTANT_NULL_TOL = 1e-9   # max allowed entry of K @ ones


@dataclass
class AlignmentMatrix:
    """Sparse symmetric PSD matrix whose bottom eigenvectors embed the data."""

    size: int
    matrix: sparse.csr_matrix
    method: str        # kind of the blocks it was assembled from
    block_cols: int    # weight columns per point

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class Embedding:
    """Solution of the constrained minimization.

    ``coords`` has one row per input point; its columns are orthonormal
    with zero sums (the constant mode is excluded).  ``eigenvalues``
    are the d retained eigenvalues in ascending order and
    ``null_eigenvalue`` is the discarded near-zero one.
    """

    coords: np.ndarray           # (N, d)
    eigenvalues: np.ndarray      # (d,)
    null_eigenvalue: float
    config: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]


def assemble_alignment(nbrs: NeighborhoodIndex, blocks) -> AlignmentMatrix:
    """Sum the per-neighborhood quadratic forms into one sparse matrix.

    For h-kind blocks the local k x k form H H^T is scattered onto the
    neighbor indices of its owner, so x^T K x equals the sum over points
    of ||(x restricted to the neighborhood)^T H||^2.  For w-kind blocks
    the classic (I - W)^T (I - W) is formed, which requires one block
    per point.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValidationError("no weight blocks to assemble")
    n, k = nbrs.rows.shape
    kinds = {b.kind for b in blocks}
    w_kind = "w_weight" in kinds
    if w_kind and len(kinds) > 1:
        raise ValidationError("cannot mix reconstruction weights with h-weights")

    for b in blocks:
        if not 0 <= b.owner < n:
            raise ValidationError(f"block owner {b.owner} out of range for N={n}")
        if b.matrix.shape[0] != k:
            raise ValidationError(
                f"block at point {b.owner} has {b.matrix.shape[0]} rows, expected k={k}"
            )

    if w_kind:
        owners = {b.owner for b in blocks}
        if len(blocks) != n or owners != set(range(n)):
            raise ValidationError("reconstruction weights require exactly one block per point")
        rows = np.repeat([b.owner for b in blocks], k)
        cols = nbrs.rows[[b.owner for b in blocks]].ravel()
        data = np.concatenate([b.matrix[:, 0] for b in blocks])
        w = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        a = sparse.identity(n, format="csr") - w
        kmat = (a.T @ a).tocsr()
        kmat = ((kmat + kmat.T) * 0.5).tocsr()
        m_cols = 1
    else:
        row_idx = []
        col_idx = []
        data = []
        for b in blocks:
            idx = nbrs.rows[b.owner]
            local = b.matrix @ b.matrix.T
            row_idx.append(np.repeat(idx, k))
            col_idx.append(np.tile(idx, k))
            data.append(local.ravel())
        kmat = sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(row_idx), np.concatenate(col_idx))),
            shape=(n, n),
        ).tocsr()
        m_cols = max(b.matrix.shape[1] for b in blocks)

    method = "w_weight" if w_kind else blocks[0].kind
    return AlignmentMatrix(size=n, matrix=kmat, method=method, block_cols=int(m_cols))


def _bottom_pairs_dense(kmat, need):
    vals, vecs = np.linalg.eigh(kmat.toarray())
    return vals[:need], vecs[:, :need]


def _bottom_pairs_sparse(kmat, need):
    n = kmat.shape[0]
    scale = float(kmat.diagonal().mean())
    if scale <= 0:
        scale = 1.0
    v0 = np.random.default_rng(0).standard_normal(n)
    # Shift-invert at zero magnifies the gaps between the clustered bottom
    # eigenvalues; the factorization of the numerically singular matrix is
    # fine in practice, with a small negative shift as backup.
    last_exc = None
    for sigma in (0.0, -1e-9 * scale, -1e-6 * scale):
        try:
            vals, vecs = eigsh(
                kmat.tocsc(), k=need, sigma=sigma, which="LM", v0=v0, tol=0
            )
        except (ArpackNoConvergence, RuntimeError) as exc:
            last_exc = exc
            continue
        order = np.argsort(vals)
        return vals[order], vecs[:, order]
    raise NumericError(
        f"bottom eigenpair iteration did not converge: {last_exc}"
    ) from last_exc


def solve_embedding(K: AlignmentMatrix, d, method="auto", null_tol=None, config=None) -> Embedding:
    """Embed via the eigenvectors of the d+1 smallest eigenvalues.

    The zero eigenvalue belonging to the constant vector is verified and
    deflated exactly: the computed bottom subspace is joined with the
    constant direction, the quadratic form is re-diagonalized on the
    complement of the constant within it, and the d smallest of those
    directions become the embedding coordinates.  This never trusts the
    eigenvalue ordering inside near-degenerate clusters.  Coordinates are
    sign-fixed (largest-magnitude entry positive) for byte-stable output.

    A disconnected neighborhood graph gives the zero eigenvalue extra
    multiplicity and leaves the embedding undetermined; this is detected
    structurally from the sparsity pattern and raised as
    ``DegenerateNullSpaceError``.

    ``method`` is ``auto`` (dense at or below DENSE_SOLVER_MAX points),
    ``dense`` or ``sparse``.
    """
    n = K.size
    if not 1 <= d <= n - 1:
        raise ValidationError(f"d must satisfy 1 <= d <= N-1 = {n - 1}, got {d}")
    need = d + 1
    if method not in ("auto", "dense", "sparse"):
        raise ValidationError(f"unknown solver method {method!r}")

    pattern = K.matrix.copy()
    pattern.eliminate_zeros()
    n_comp = connected_components(pattern, directed=False, return_labels=False)
    if n_comp > 1:
        raise DegenerateNullSpaceError(
            f"the alignment matrix splits into {n_comp} independent blocks, so the "
            f"zero eigenvalue has multiplicity {n_comp} and the embedding is not "
            "determined; the neighborhood graph is disconnected"
        )
    ones_residual = float(np.abs(K.matrix @ np.ones(n)).max())
    if ones_residual > CONSTANT_NULL_TOL:
        raise NumericError(
            f"K @ ones has max entry {ones_residual:.3e} > {CONSTANT_NULL_TOL}; "
            "weight columns do not sum to zero"
        )

    use_dense = method == "dense" or (method == "auto" and n <= DENSE_SOLVER_MAX) or need >= n - 1
    if use_dense:
        vals, vecs = _bottom_pairs_dense(K.matrix, need)
    else:
        vals, vecs = _bottom_pairs_sparse(K.matrix, need)
        norm_k = np.sqrt(float((K.matrix.data**2).sum()))
        residuals = np.linalg.norm(K.matrix @ vecs - vecs * vals[None, :], axis=0)
        if np.any(residuals > RESIDUAL_REL_TOL * max(norm_k, 1e-300)):
            raise NumericError(
                f"eigenpair residuals {residuals} exceed {RESIDUAL_REL_TOL} * ||K|| = "
                f"{RESIDUAL_REL_TOL * norm_k:.3e}"
            )

    mean_diag = float(K.matrix.diagonal().mean())
    if null_tol is None:
        null_tol = NULL_TOL_REL * max(mean_diag, 1e-300)
    if vals[0] > null_tol:
        raise NumericError(
            f"smallest eigenvalue {vals[0]:.3e} is not numerically zero "
            f"(tolerance {null_tol:.3e})"
        )

    coords, kept = _deflate_constant(K.matrix, vecs, d)
    flip = np.sign(coords[np.argmax(np.abs(coords), axis=0), np.arange(d)])
    flip[flip == 0] = 1.0
    coords = coords * flip

    return Embedding(
        coords=coords,
        eigenvalues=kept,
        null_eigenvalue=float(vals[0]),
        config=dict(config or {}),
    )


def _deflate_constant(kmat, vecs, d):
    """Re-diagonalize on the mean-zero complement of the bottom subspace.

    The constant direction is projected out of every computed
    eigenvector; a rank-revealing QR of the projections discards the
    one that was (numerically) the constant itself, and the quadratic
    form is diagonalized on the surviving directions.  The d smallest
    pairs are returned with their Rayleigh quotients.
    """
    n = vecs.shape[0]
    u = np.full(n, 1.0 / np.sqrt(n))
    projected = vecs - np.outer(u, u @ vecs)
    q, r, _ = scipy_qr(projected, mode="economic", pivoting=True)
    diag = np.abs(np.diagonal(r))
    rank = int(np.sum(diag > 1e-6 * max(diag[0], 1e-300)))
    if rank < d:
        raise NumericError(
            f"only {rank} independent mean-zero directions in the bottom subspace, need {d}"
        )
    basis = q[:, :rank]
    reduced = basis.T @ (kmat @ basis)
    reduced = 0.5 * (reduced + reduced.T)
    rvals, rvecs = np.linalg.eigh(reduced)
    coords = basis @ rvecs[:, :d]
    coords -= coords.mean(axis=0)  # pin the constraint exactly (residual is tiny)
    q2, r2 = np.linalg.qr(coords)
    signs = np.sign(np.diagonal(r2))
    signs[signs == 0] = 1.0
    return q2 * signs, np.asarray(rvals[:d], dtype=float)
