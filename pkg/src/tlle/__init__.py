"""Locally linear embeddings built from per-neighborhood linear relations.

The library implements three related methods on point clouds: classic
LLE (one reconstruction weight vector per neighborhood), Hessian LLE
(multiple weights from a quadratic construction on the local principal
directions) and tangential LLE (multiple weights from random vectors
orthogonalized against the local tangent frame, with the manifold
dimension decoupled from the target dimension).  Synthetic benchmark
generators, an intrinsic dimension estimator and embedding quality
metrics are included.
"""

from .assembly import (
    AlignmentMatrix,
    Embedding,
    assemble_alignment,
    solve_embedding,
)
from .dataset import (
    PointCloud,
    gen_swiss_roll_hole,
    gen_trefoil,
    lift_isometric,
    load_csv,
    random_orthogonal,
    save_csv,
    spiral_arclength,
    trefoil_curve,
)
from .errors import (
    CsvParseError,
    DegenerateNullSpaceError,
    NumericError,
    RankDeficiencyError,
    ValidationError,
)
from .localfit import (
    DimEstimate,
    LocalSpectrum,
    WeightBlock,
    center_and_svd,
    estimate_intrinsic_dim,
    hlle_weights,
    hweight_to_wweight,
    lle_weights,
    tangential_coordinates,
    tlle_weights,
)
from .metrics import (
    EvalReport,
    affine_projection_score,
    build_report,
    neighborhood_preservation,
    procrustes_error,
    relation_residual,
    self_intersection_check,
)
from .neighbors import NeighborhoodIndex, knn
from .pipeline import RunConfig, RunResult, local_spectra, run_embedding

__version__ = "0.1.0"

__all__ = [
    "AlignmentMatrix",
    "CsvParseError",
    "DegenerateNullSpaceError",
    "DimEstimate",
    "Embedding",
    "EvalReport",
    "LocalSpectrum",
    "NeighborhoodIndex",
    "NumericError",
    "PointCloud",
    "RankDeficiencyError",
    "RunConfig",
    "RunResult",
    "ValidationError",
    "WeightBlock",
    "affine_projection_score",
    "assemble_alignment",
    "build_report",
    "center_and_svd",
    "estimate_intrinsic_dim",
    "gen_swiss_roll_hole",
    "gen_trefoil",
    "hlle_weights",
    "hweight_to_wweight",
    "knn",
    "lift_isometric",
    "lle_weights",
    "load_csv",
    "local_spectra",
    "neighborhood_preservation",
    "procrustes_error",
    "random_orthogonal",
    "relation_residual",
    "run_embedding",
    "save_csv",
    "self_intersection_check",
    "solve_embedding",
    "spiral_arclength",
    "tangential_coordinates",
    "tlle_weights",
    "trefoil_curve",
]
