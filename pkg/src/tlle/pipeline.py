"""End-to-end embedding runs: neighbors, spectra, weights, solve."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import AlignmentMatrix, Embedding, assemble_alignment, solve_embedding
from .dataset import PointCloud
from .errors import ValidationError
from .localfit import (
    DimEstimate,
    LocalSpectrum,
    center_and_svd,
    estimate_intrinsic_dim,
    hlle_weights,
    lle_weights,
    tlle_weights,
)
from .neighbors import NeighborhoodIndex, knn

METHODS = ("lle", "hlle", "tlle")
DEFAULT_RATIO_THRESHOLD = 0.25


@dataclass
class RunConfig:
    """Parameters of one embedding run.

    ``intrinsic_dim`` (the manifold dimension) and ``n_weights`` (the
    number of h-weights per neighborhood) only apply to the tangential
    method; leaving them unset estimates the former from the local
    spectra and defaults the latter to 2, clamped to the admissible
    range.
    """

    method: str
    k: int
    d: int
    intrinsic_dim: int | None = None
    n_weights: int | None = None
    reg: float = 1e-3
    seed: int = 0
    ratio_threshold: float = DEFAULT_RATIO_THRESHOLD
    solver: str = "auto"

    def validate(self, n_points, ambient_dim):
        """Check every invariant against the dataset; raises before any work."""
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 1 <= self.k <= n_points - 1:
            raise ValidationError(
                f"k must satisfy 1 <= k <= N-1 = {n_points - 1}, got {self.k}"
            )
        if not 1 <= self.d < ambient_dim:
            raise ValidationError(
                f"d must satisfy 1 <= d < D = {ambient_dim}, got {self.d}"
            )
        if self.d > n_points - 1:
            raise ValidationError(f"d must be <= N-1 = {n_points - 1}, got {self.d}")
        if self.reg < 0:
            raise ValidationError(f"reg must be >= 0, got {self.reg}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        if not 0.0 < self.ratio_threshold < 1.0:
            raise ValidationError(
                f"threshold must lie in (0, 1), got {self.ratio_threshold}"
            )
        if self.method == "hlle":
            needed = 1 + self.d + self.d * (self.d + 1) // 2
            if self.k < needed:
                raise ValidationError(
                    f"hlle requires k >= 1 + d + d(d+1)/2 = {needed} for d={self.d}, got k={self.k}"
                )
        if self.method == "tlle":
            if self.intrinsic_dim is not None:
                self._validate_tlle_dims(self.intrinsic_dim)

    def _validate_tlle_dims(self, intrinsic_dim):
        if not 1 <= intrinsic_dim <= self.d:
            raise ValidationError(
                f"tlle requires 1 <= dM <= d, got dM={intrinsic_dim}, d={self.d}"
            )
        if self.k < intrinsic_dim + 2:
            raise ValidationError(
                f"tlle requires k >= dM + 2 = {intrinsic_dim + 2}, got k={self.k}"
            )
        if self.n_weights is not None:
            limit = self.k - intrinsic_dim - 1
            if not 1 <= self.n_weights <= limit:
                raise ValidationError(
                    f"tlle requires m <= k - dM - 1 = {limit}, got m={self.n_weights}"
                )

    def echo(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "d": self.d,
            "dM": self.intrinsic_dim,
            "m": self.n_weights,
            "reg": self.reg,
            "seed": self.seed,
            "threshold": self.ratio_threshold,
            "solver": self.solver,
        }


@dataclass
class RunResult:
    """Everything produced by one run, for downstream metrics."""

    embedding: Embedding
    neighbors: NeighborhoodIndex
    blocks: list
    alignment: AlignmentMatrix
    spectra: list
    config: RunConfig
    dim_estimate: DimEstimate | None = None


def local_spectra(cloud: PointCloud, nbrs: NeighborhoodIndex) -> list[LocalSpectrum]:
    """Centered SVD of every neighborhood; rows are independent."""
    return [center_and_svd(cloud, nbrs.rows[i], owner=i) for i in range(nbrs.n)]


def run_embedding(cloud: PointCloud, config: RunConfig) -> RunResult:
    """Run the configured method on a cloud and solve for the embedding.

    For the tangential method each neighborhood draws its random
    vectors from a generator seeded with (seed, point index), so results
    do not depend on evaluation order.
    """
    config.validate(cloud.n, cloud.dim)
    nbrs = knn(cloud, config.k)
    spectra = local_spectra(cloud, nbrs)

    dim_estimate = None
    resolved_dm = config.intrinsic_dim
    resolved_m = config.n_weights
    if config.method == "tlle":
        if resolved_dm is None:
            dim_estimate = estimate_intrinsic_dim(spectra, config.ratio_threshold)
            resolved_dm = dim_estimate.dim
        config._validate_tlle_dims(resolved_dm)
        if resolved_m is None:
            resolved_m = min(2, config.k - resolved_dm - 1)

    if config.method == "lle":
        blocks = [
            lle_weights(cloud, i, nbrs.rows[i], reg=config.reg) for i in range(cloud.n)
        ]
    elif config.method == "hlle":
        blocks = [hlle_weights(sp, config.d) for sp in spectra]
    else:
        blocks = [
            tlle_weights(sp, resolved_dm, resolved_m, rng_seed=(config.seed, i))
            for i, sp in enumerate(spectra)
        ]

    alignment = assemble_alignment(nbrs, blocks)
    echo = config.echo()
    echo["dM"] = resolved_dm
    echo["m"] = resolved_m if config.method == "tlle" else None
    if dim_estimate is not None:
        echo["dM_estimated"] = True
        echo["dM_votes"] = dim_estimate.votes
    embedding = solve_embedding(alignment, config.d, method=config.solver, config=echo)
    return RunResult(
        embedding=embedding,
        neighbors=nbrs,
        blocks=blocks,
        alignment=alignment,
        spectra=spectra,
        config=config,
        dim_estimate=dim_estimate,
    )
