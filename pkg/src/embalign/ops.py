"""Operations on paired embedding sets.

These wrap the array solvers in :mod:`embalign.solvers` with ID-aware
validation.  All functions are pure: inputs are never mutated and every
result is a fresh container.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import solvers
from .types import (
    CenteringTransform,
    EmbeddingMatrix,
    FusionSpec,
    LinearTransform,
    OrthogonalTransform,
)
from .validation import ValidationError


class ZeroVectorWarning(UserWarning):
    """Zero vectors were left unnormalized by a renormalization step."""


def _check_pairing(source: EmbeddingMatrix, target: EmbeddingMatrix) -> None:
    if source.dims != target.dims:
        raise ValidationError(
            f"dimension mismatch: source dims {source.dims} vs target dims "
            f"{target.dims}; zero_pad the smaller one first"
        )
    if source.ids != target.ids:
        raise ValidationError(
            "ID-order mismatch between source and target; use pair_by_id first"
        )
    if source.count < 1:
        raise ValidationError("need at least one paired item")


def solve_procrustes(source: EmbeddingMatrix, target: EmbeddingMatrix) -> OrthogonalTransform:
    """Best orthogonal map from ``source`` onto ``target``.

    Minimizes the Frobenius alignment error over all orthogonal matrices;
    the result preserves the geometry of ``source`` exactly while bringing
    it as close to ``target`` as any isometry can.
    """
    _check_pairing(source, target)
    q = solvers.procrustes_rotation(source.vectors.T, target.vectors.T)
    return OrthogonalTransform(q)


def solve_linear(source: EmbeddingMatrix, target: EmbeddingMatrix,
                 ridge: float = 0.0) -> LinearTransform:
    """Best unconstrained linear map from ``source`` onto ``target``.

    Relaxing orthogonality can only reduce the alignment residual, at the
    cost of distorting the source geometry.  ``ridge`` adds Tikhonov
    regularization; at ``ridge == 0`` a rank-deficient source falls back
    to the minimum-norm solution.
    """
    _check_pairing(source, target)
    a = solvers.ridge_alignment(source.vectors.T, target.vectors.T, ridge)
    return LinearTransform(a)


def rank_aware_procrustes(source, target, rank_cap: int) -> OrthogonalTransform:
    """Procrustes minimizer whose residual matrix has rank at most ``rank_cap``.

    Operates on raw ``(dims, n_items)`` column matrices, both of numerical
    rank at most ``rank_cap``.  The residual matches :func:`solve_procrustes`;
    the extra rank guarantee comes from completing the SVD bases against
    the target column space and the source nullspace.
    """
    p = solvers.rank_constrained_rotation(np.asarray(source, dtype=np.float64),
                                          np.asarray(target, dtype=np.float64),
                                          rank_cap)
    return OrthogonalTransform(p)


def apply_transform(transform: OrthogonalTransform | LinearTransform,
                    m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Map every vector of ``m`` through ``transform``, keeping IDs."""
    if not isinstance(transform, (OrthogonalTransform, LinearTransform)):
        raise ValidationError(
            f"expected an OrthogonalTransform or LinearTransform, got {type(transform).__name__}"
        )
    if transform.dims != m.dims:
        raise ValidationError(
            f"dimension mismatch: transform dims {transform.dims} vs embedding dims {m.dims}"
        )
    return EmbeddingMatrix(m.vectors @ transform.matrix.T, m.ids)


def fit_centering(m: EmbeddingMatrix, renormalize: bool = False) -> CenteringTransform:
    """Fit the per-dimension mean of ``m`` for later centering."""
    if m.count < 1:
        raise ValidationError("need at least one item to fit centering")
    return CenteringTransform(m.vectors.mean(axis=0), renormalize)


def _renormalize_rows(vectors: np.ndarray) -> tuple[np.ndarray, int]:
    norms = np.linalg.norm(vectors, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return vectors / safe[:, np.newaxis], int(np.count_nonzero(zero))


def apply_centering(centering: CenteringTransform, m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Subtract the fitted mean; optionally rescale each row to unit norm.

    Rows that are exactly zero after centering cannot be normalized; they
    are left as zero vectors and a :class:`ZeroVectorWarning` reports how
    many, so that pairing is never silently broken by dropping items.
    """
    if centering.dims != m.dims:
        raise ValidationError(
            f"dimension mismatch: centering dims {centering.dims} vs embedding dims {m.dims}"
        )
    out = m.vectors - centering.mean
    if centering.renormalize:
        out, n_zero = _renormalize_rows(out)
        if n_zero:
            warnings.warn(
                f"{n_zero} zero vector(s) left unnormalized after centering",
                ZeroVectorWarning,
                stacklevel=2,
            )
    return EmbeddingMatrix(out, m.ids)


def unit_normalize(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Rescale every row to unit norm; zero rows are kept and reported."""
    out, n_zero = _renormalize_rows(np.array(m.vectors))
    if n_zero:
        warnings.warn(
            f"{n_zero} zero vector(s) left unnormalized",
            ZeroVectorWarning,
            stacklevel=2,
        )
    return EmbeddingMatrix(out, m.ids)


def zero_pad(m: EmbeddingMatrix, new_dims: int) -> EmbeddingMatrix:
    """Append zero dimensions so ``m`` lives in a ``new_dims`` space.

    Padding with zeros preserves every dot product and norm exactly, which
    is what lets models of different width share one space.
    """
    if new_dims < m.dims:
        raise ValidationError(
            f"new_dims {new_dims} is smaller than current dims {m.dims}"
        )
    if new_dims == m.dims:
        return m
    pad = np.zeros((m.count, new_dims - m.dims))
    return EmbeddingMatrix(np.hstack([m.vectors, pad]), m.ids)


def fuse(first: EmbeddingMatrix, second: EmbeddingMatrix,
         spec: FusionSpec = FusionSpec()) -> EmbeddingMatrix:
    """Per-item convex combination ``alpha * first + (1 - alpha) * second``."""
    if first.dims != second.dims:
        raise ValidationError(
            f"dimension mismatch: {first.dims} vs {second.dims}"
        )
    if first.ids != second.ids:
        raise ValidationError("ID-order mismatch between fusion inputs")
    out = spec.alpha * first.vectors + (1.0 - spec.alpha) * second.vectors
    if spec.renormalize_after:
        out, n_zero = _renormalize_rows(out)
        if n_zero:
            warnings.warn(
                f"{n_zero} zero vector(s) left unnormalized after fusion",
                ZeroVectorWarning,
                stacklevel=2,
            )
    return EmbeddingMatrix(out, first.ids)
