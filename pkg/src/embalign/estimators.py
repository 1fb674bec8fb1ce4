"""Scikit-learn style estimators for embedding alignment.

Each estimator takes arrays shaped ``(n_items, dims)`` — items as rows,
matching the container convention — and follows the usual fit/transform
contract, so the aligners compose with pipelines, ``clone``, and grid
search like any other transformer.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import solvers
from .validation import check_matrix, check_same_shape


class ProcrustesAlignment(TransformerMixin, BaseEstimator):
    """Orthogonal alignment of a source embedding space onto a target.

    ``fit(X, y)`` finds the orthogonal matrix minimizing the Frobenius
    norm of ``X @ Q.T - y``; ``transform`` applies it.  Orthogonality
    means the map is an isometry: norms, distances and dot products
    within the source set are preserved exactly.

    Attributes
    ----------
    rotation_ : ndarray of shape (dims, dims)
        The fitted orthogonal matrix, applied to row vectors as
        ``X @ rotation_.T``.
    residual_ : float
        Frobenius alignment error on the fit data.
    """

    def fit(self, X, y):
        X = check_matrix(X, "X")
        y = check_matrix(y, "y")
        check_same_shape(X, y, "X", "y")
        self.rotation_ = solvers.procrustes_rotation(X.T, y.T)
        self.residual_ = solvers.alignment_residual(self.rotation_, X.T, y.T)
        return self

    def transform(self, X):
        check_is_fitted(self, "rotation_")
        X = check_matrix(X, "X")
        return X @ self.rotation_.T

    def inverse_transform(self, X):
        check_is_fitted(self, "rotation_")
        X = check_matrix(X, "X")
        return X @ self.rotation_

    def score(self, X, y):
        """Negative mean squared alignment error (higher is better)."""
        check_is_fitted(self, "rotation_")
        X = check_matrix(X, "X")
        y = check_matrix(y, "y")
        check_same_shape(X, y, "X", "y")
        return -float(np.mean(np.sum((X @ self.rotation_.T - y) ** 2, axis=1)))


class LinearAlignment(TransformerMixin, BaseEstimator):
    """Unconstrained (optionally ridge-penalized) linear alignment.

    Same interface as :class:`ProcrustesAlignment` but without the
    orthogonality constraint, so the fit residual is never larger — at
    the price of distorting the source geometry.

    Parameters
    ----------
    ridge : float, default=0.0
        Tikhonov penalty.  At zero, a rank-deficient fit falls back to
        the minimum-norm least-squares solution.
    """

    def __init__(self, ridge: float = 0.0):
        self.ridge = ridge

    def fit(self, X, y):
        X = check_matrix(X, "X")
        y = check_matrix(y, "y")
        check_same_shape(X, y, "X", "y")
        self.matrix_ = solvers.ridge_alignment(X.T, y.T, self.ridge)
        self.residual_ = solvers.alignment_residual(self.matrix_, X.T, y.T)
        return self

    def transform(self, X):
        check_is_fitted(self, "matrix_")
        X = check_matrix(X, "X")
        return X @ self.matrix_.T

    def score(self, X, y):
        """Negative mean squared alignment error (higher is better)."""
        check_is_fitted(self, "matrix_")
        X = check_matrix(X, "X")
        y = check_matrix(y, "y")
        check_same_shape(X, y, "X", "y")
        return -float(np.mean(np.sum((X @ self.matrix_.T - y) ** 2, axis=1)))


class EmbeddingCenterer(TransformerMixin, BaseEstimator):
    """Remove the per-dimension mean, optionally renormalizing rows.

    Centering is a popular preprocessing step, but it is not harmless
    for alignment: it can destroy the cross-covariance structure the
    orthogonal solver relies on, so it is kept separate and off by
    default everywhere.
    """

    def __init__(self, renormalize: bool = False):
        self.renormalize = renormalize

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        self.mean_ = X.mean(axis=0)
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_matrix(X, "X")
        out = X - self.mean_
        if self.renormalize:
            norms = np.linalg.norm(out, axis=1)
            out = out / np.where(norms == 0.0, 1.0, norms)[:, np.newaxis]
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        if self.renormalize:
            raise ValueError("centering with renormalization is not invertible")
        X = check_matrix(X, "X")
        return X + self.mean_
