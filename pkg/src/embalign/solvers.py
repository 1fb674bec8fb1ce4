"""Array-level alignment solvers.

Functions here follow the matrix convention of the underlying algorithms:
an embedding set is a ``(dims, n_items)`` array whose *columns* are the
vectors, and a transform ``Q`` acts from the left (``Q @ X``).  The
higher-level API in :mod:`embalign.ops` and :mod:`embalign.estimators`
works with item-major (rows) data and transposes before calling in.
"""

from __future__ import annotations

import numpy as np

from .validation import ValidationError, check_matrix, check_same_shape

#: Relative singular-value cutoff used when counting numerical rank.
RANK_RTOL = 1e-10

#: Relative pseudo-inverse cutoff for the ridgeless linear solver.
PINV_RTOL = 1e-12


def deterministic_svd(m: np.ndarray):
    """SVD with singular values descending and canonicalized signs.

    The sign of each left singular vector is fixed so that its
    largest-magnitude entry is positive (the matching right vector is
    flipped with it, which leaves the product unchanged).  With a fixed
    LAPACK backend this makes all downstream outputs reproducible run to
    run, including in the rank-deficient case where ``U @ Vt`` is not
    mathematically unique.
    """
    u, s, vt = np.linalg.svd(m, full_matrices=True)
    k = min(m.shape)
    picks = np.argmax(np.abs(u[:, :k]), axis=0)
    signs = np.sign(u[picks, np.arange(k)])
    signs[signs == 0] = 1.0
    u[:, :k] *= signs
    vt[:k, :] *= signs[:, np.newaxis]
    return u, s, vt


def procrustes_rotation(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Orthogonal matrix minimizing ``||Q @ source - target||_F``.

    Parameters
    ----------
    source, target : (dims, n_items) ndarray
        Paired column vectors; column i of both describes the same item.

    Returns
    -------
    (dims, dims) ndarray
        ``Q = U @ Vt`` where ``U S Vt`` is the SVD of
        ``target @ source.T``.  This is the global minimizer over
        orthogonal matrices, and ``target @ source.T @ Q.T`` is symmetric
        positive semidefinite (the first-order optimality certificate).
    """
    source = check_matrix(source, "source")
    target = check_matrix(target, "target")
    check_same_shape(source, target)
    u, _, vt = deterministic_svd(target @ source.T)
    return u @ vt


def alignment_residual(transform: np.ndarray, source: np.ndarray,
                       target: np.ndarray) -> float:
    """Frobenius residual ``||transform @ source - target||_F``."""
    return float(np.linalg.norm(transform @ source - target))


def ridge_alignment(source: np.ndarray, target: np.ndarray,
                    ridge: float = 0.0) -> np.ndarray:
    """Unconstrained matrix minimizing ``||A @ source - target||_F^2 + ridge * ||A||_F^2``.

    With ``ridge == 0`` the minimum-Frobenius-norm least squares solution
    is returned (pseudo-inverse with relative cutoff ``PINV_RTOL``), which
    coincides with ``target @ source.T @ inv(source @ source.T)`` whenever
    ``source`` has full row rank.
    """
    source = check_matrix(source, "source")
    target = check_matrix(target, "target")
    check_same_shape(source, target)
    if not np.isfinite(ridge) or ridge < 0:
        raise ValidationError(f"ridge must be a nonnegative real, got {ridge}")
    if ridge == 0.0:
        return target @ np.linalg.pinv(source, rcond=PINV_RTOL)
    dims = source.shape[0]
    gram = source @ source.T + ridge * np.eye(dims)
    # A solves A (X X^T + ridge I) = Y X^T; the system below is its transpose.
    return np.linalg.solve(gram, source @ target.T).T


def numerical_rank(m: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Number of singular values above ``rtol`` times the largest."""
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def orthonormal_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(basis)``.

    ``basis`` is ``(m, k)`` with orthonormal columns; the result is
    ``(m, m - k)``.
    """
    m, k = basis.shape
    if k == 0:
        return np.eye(m)
    u, _, _ = np.linalg.svd(basis, full_matrices=True)
    return u[:, k:]


def _column_space_basis(m: np.ndarray, rank: int) -> np.ndarray:
    u, _, _ = np.linalg.svd(m, full_matrices=True)
    return u[:, :rank]


def rank_constrained_rotation(source: np.ndarray, target: np.ndarray,
                              rank_cap: int, rtol: float = RANK_RTOL) -> np.ndarray:
    """Global Procrustes minimizer whose residual has rank at most ``rank_cap``.

    Both inputs must have numerical rank at most ``rank_cap``.  The result
    ``P`` achieves the same residual as :func:`procrustes_rotation` but is
    chosen, by completing the singular bases of ``target @ source.T``
    against the column space of ``target`` and the nullspace of
    ``source.T``, so that ``rank(P @ source - target) <= rank_cap``.  A
    generic SVD-based minimizer does not have this property when
    ``target @ source.T`` is rank deficient.
    """
    source = check_matrix(source, "source")
    target = check_matrix(target, "target")
    check_same_shape(source, target)
    if rank_cap < 1:
        raise ValidationError(f"rank_cap must be >= 1, got {rank_cap}")
    rank_s = numerical_rank(source, rtol)
    rank_t = numerical_rank(target, rtol)
    if rank_s > rank_cap or rank_t > rank_cap:
        raise ValidationError(
            f"rank precondition violated: ranks ({rank_s}, {rank_t}) "
            f"exceed rank_cap {rank_cap}"
        )
    if rank_s > rank_t:
        # Solve the swapped problem and transpose its minimizer.
        return rank_constrained_rotation(target, source, rank_cap, rtol).T

    m = source.shape[0]
    # Effective cap: ranks beyond max(rank_s, rank_t) change nothing.
    cap = rank_t
    cross = target @ source.T
    u0, s, v0t = deterministic_svd(cross)
    # Rank of the cross-covariance, with an absolute noise floor: when the
    # row spaces of source and target are (numerically) orthogonal the whole
    # cross matrix is rounding noise and its own largest singular value is
    # no yardstick.  Demoting a direction this small costs at most O(floor)
    # in the residual but is what makes the rank guarantee hold.
    floor = (np.finfo(float).eps * max(source.shape)
             * np.linalg.norm(source, 2) * np.linalg.norm(target, 2))
    cutoff = max(rtol * (s[0] if s.size else 0.0), floor)
    r = int(np.count_nonzero(s > cutoff))

    u = u0.copy()
    # Columns r..cap of U: extend Col(target @ source.T) to Col(target).
    if cap > r:
        t_basis = _column_space_basis(target, cap)
        resid = t_basis - u[:, :r] @ (u[:, :r].T @ t_basis)
        uw, _, _ = np.linalg.svd(resid, full_matrices=False)
        u[:, r:cap] = uw[:, : cap - r]
    if cap < m:
        u[:, cap:] = orthonormal_complement(u[:, :cap])

    v = v0t.T.copy()
    if cap < m:
        # Columns cap..m of V live in the nullspace of source.T, which is
        # automatically orthogonal to the leading right singular vectors.
        u_src, _, _ = np.linalg.svd(source, full_matrices=True)
        v[:, cap:] = u_src[:, rank_s : rank_s + (m - cap)]
    if cap > r:
        v[:, r:cap] = orthonormal_complement(
            np.hstack([v[:, :r], v[:, cap:]])
        )
    return u @ v.T


def random_orthogonal(dims: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed random orthogonal matrix (QR of a Gaussian draw)."""
    q, r = np.linalg.qr(rng.standard_normal((dims, dims)))
    return q * np.sign(np.diag(r))
