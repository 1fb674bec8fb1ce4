"""Domain containers for paired embedding sets and alignment transforms.

Vectors are stored item-major: an :class:`EmbeddingMatrix` holds an
``(n_items, dims)`` float64 array whose row ``i`` is the embedding of
``ids[i]``.  Two matrices are paired when their ID sequences are equal, in
which case row ``i`` of each describes the same item.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import ValidationError, check_matrix, check_vector

#: Allowed Frobenius deviation of Q^T Q from the identity.
ORTHOGONALITY_TOL = 1e-8


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """A set of paired item embeddings with stable IDs.

    Parameters
    ----------
    vectors : (n_items, dims) array_like
        One row per item.  Stored as read-only float64.
    ids : iterable of str
        Unique identifier per row, in row order.
    """

    vectors: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        arr = check_matrix(self.vectors, "vectors")
        if arr.shape[1] < 1:
            raise ValidationError("vectors must have at least one dimension")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != arr.shape[0]:
            raise ValidationError(
                f"got {len(ids)} ids for {arr.shape[0]} rows"
            )
        if len(set(ids)) != len(ids):
            seen, dupes = set(), []
            for i in ids:
                if i in seen:
                    dupes.append(i)
                seen.add(i)
            raise ValidationError(f"duplicate ids: {dupes[:10]!r}")
        object.__setattr__(self, "vectors", _freeze(arr))
        object.__setattr__(self, "ids", ids)

    @property
    def dims(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def gram(self) -> np.ndarray:
        """All pairwise dot products, an ``(n_items, n_items)`` matrix."""
        return self.vectors @ self.vectors.T


@dataclass(frozen=True, eq=False)
class OrthogonalTransform:
    """A dims x dims orthogonal map; applied to a vector x as ``matrix @ x``."""

    matrix: np.ndarray

    def __post_init__(self):
        q = check_matrix(self.matrix, "matrix")
        d = q.shape[0]
        if q.shape != (d, d):
            raise ValidationError(f"matrix must be square, got {q.shape}")
        err = np.linalg.norm(q.T @ q - np.eye(d))
        if err > ORTHOGONALITY_TOL:
            raise ValidationError(
                f"matrix is not orthogonal: ||Q^T Q - I||_F = {err:.3e}"
            )
        object.__setattr__(self, "matrix", _freeze(q))

    @property
    def dims(self) -> int:
        return self.matrix.shape[0]

    def transposed(self) -> "OrthogonalTransform":
        """The inverse map (Q^T)."""
        return OrthogonalTransform(self.matrix.T)


@dataclass(frozen=True, eq=False)
class LinearTransform:
    """An unconstrained dims x dims map; applied as ``matrix @ x``."""

    matrix: np.ndarray

    def __post_init__(self):
        a = check_matrix(self.matrix, "matrix")
        d = a.shape[0]
        if a.shape != (d, d):
            raise ValidationError(f"matrix must be square, got {a.shape}")
        object.__setattr__(self, "matrix", _freeze(a))

    @property
    def dims(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class CenteringTransform:
    """Subtract a fitted per-dimension mean, optionally rescaling rows to unit norm."""

    mean: np.ndarray
    renormalize: bool = False

    def __post_init__(self):
        mu = check_vector(self.mean, "mean")
        object.__setattr__(self, "mean", _freeze(mu.reshape(1, -1))[0])
        object.__setattr__(self, "renormalize", bool(self.renormalize))

    @property
    def dims(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class FusionSpec:
    """Convex mixing weight for combining two embeddings of the same item.

    ``alpha`` weighs the first component; the default 0.5 mixes both equally.
    """

    alpha: float = 0.5
    renormalize_after: bool = False

    def __post_init__(self):
        a = float(self.alpha)
        if not np.isfinite(a) or not 0.0 <= a <= 1.0:
            raise ValidationError(f"alpha must be in [0, 1], got {self.alpha}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "renormalize_after", bool(self.renormalize_after))
