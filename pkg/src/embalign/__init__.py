"""Orthogonal alignment of paired embedding sets.

Given two sets of embeddings for the same items — say, an old and a new
model's vectors — this package fits the best orthogonal map between them,
quantifies how far the two geometries differ through their Gram matrices,
checks the worst-case alignment-error bounds that relate the two, and
measures what alignment does to dot-product retrieval.
"""

from .bounds import (
    AlignmentReport,
    CheckResult,
    build_report,
    check_psk_inequality,
    dot_product_mse,
    gram_discrepancy,
    matrix_abs,
    perturbation_sweep,
    tightness_example,
)
from .estimators import EmbeddingCenterer, LinearAlignment, ProcrustesAlignment
from .io import (
    BadMagicError,
    DuplicateIdError,
    EmbeddingFileHeader,
    EmbeddingFormatError,
    NonFiniteValueError,
    TruncatedFileError,
    load_embeddings,
    pair_by_id,
    read_embeddings,
    read_embeddings_tsv,
    read_header,
    read_transform,
    write_embeddings,
    write_embeddings_tsv,
    write_transform,
)
from .ops import (
    ZeroVectorWarning,
    apply_centering,
    apply_transform,
    fit_centering,
    fuse,
    rank_aware_procrustes,
    solve_linear,
    solve_procrustes,
    unit_normalize,
    zero_pad,
)
from .retrieval import (
    EvalResult,
    MetricResult,
    RelevanceJudgments,
    RetrievalRun,
    TruncationWarning,
    cross_model_eval,
    ndcg_at_k,
    recall_at_k,
    sample_complexity_sweep,
    top_k,
)
from .types import (
    CenteringTransform,
    EmbeddingMatrix,
    FusionSpec,
    LinearTransform,
    OrthogonalTransform,
)
from .validation import ValidationError

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "BadMagicError",
    "CenteringTransform",
    "CheckResult",
    "DuplicateIdError",
    "EmbeddingCenterer",
    "EmbeddingFileHeader",
    "EmbeddingFormatError",
    "EmbeddingMatrix",
    "EvalResult",
    "FusionSpec",
    "LinearAlignment",
    "LinearTransform",
    "MetricResult",
    "NonFiniteValueError",
    "OrthogonalTransform",
    "ProcrustesAlignment",
    "RelevanceJudgments",
    "RetrievalRun",
    "TruncatedFileError",
    "TruncationWarning",
    "ValidationError",
    "ZeroVectorWarning",
    "apply_centering",
    "apply_transform",
    "build_report",
    "check_psk_inequality",
    "cross_model_eval",
    "dot_product_mse",
    "fit_centering",
    "fuse",
    "gram_discrepancy",
    "load_embeddings",
    "matrix_abs",
    "ndcg_at_k",
    "pair_by_id",
    "perturbation_sweep",
    "rank_aware_procrustes",
    "read_embeddings",
    "read_embeddings_tsv",
    "read_header",
    "read_transform",
    "recall_at_k",
    "sample_complexity_sweep",
    "solve_linear",
    "solve_procrustes",
    "tightness_example",
    "top_k",
    "unit_normalize",
    "write_embeddings",
    "write_embeddings_tsv",
    "write_transform",
    "zero_pad",
]
