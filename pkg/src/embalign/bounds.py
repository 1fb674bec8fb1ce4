"""Discrepancy measures, alignment-error bounds, and their numeric checks.

The central quantity is the Gram discrepancy ``epsilon = ||X^T X - Y^T Y||_F``
between two paired embedding sets: how differently the two models "see" the
same items, measured purely through dot products.  The alignment residual of
the best orthogonal map is bounded by ``(2D)^{1/4} sqrt(epsilon)``, with an
explicit construction achieving equality; :func:`build_report` evaluates all
of these quantities on concrete data and records whether each inequality
held.  A failed check is reported, never clamped or raised away: on real
inputs a violation means the implementation is wrong, and hiding it would
defeat the point of checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .types import EmbeddingMatrix
from .validation import ValidationError, check_matrix, check_positive_int, seeded_rng

#: Additive slack applied when deciding whether an inequality held.
CHECK_SLACK = 1e-8

#: Column count above which gram_discrepancy streams over blocks instead of
#: materializing two full Gram matrices.
GRAM_BLOCK = 1 << 14

#: Maximum accepted asymmetry / negative-eigenvalue fraction for PSD inputs.
PSD_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one inequality check: ``holds`` iff lhs <= rhs + slack."""

    name: str
    lhs: float
    rhs: float
    holds: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "holds": self.holds}


@dataclass(frozen=True)
class AlignmentReport:
    """Every discrepancy and bound quantity for one aligned pair.

    ``epsilon`` is the Gram discrepancy, ``delta_sq`` the mean squared
    dot-product error (so ``epsilon == N * sqrt(delta_sq)`` by definition),
    ``residual`` the Frobenius error of the best orthogonal alignment, and
    the two bounds are ``(2D)^{1/4} sqrt(epsilon)`` for the residual and
    ``sqrt(2D) * delta`` for the per-item mean squared error.  ``prior_bound``
    is the older ``epsilon / sigma_min`` comparison point, infinite for
    singular inputs.  ``cross_sim_errors`` are the two mean squared
    deviations of aligned cross similarities from each model's own
    similarities; they obey the same ``sqrt(2D) * delta`` bound when both
    sides are unit-normalized.
    """

    residual: float
    epsilon: float
    delta_sq: float
    theorem1_bound: float
    corollary2_bound: float
    mean_sq_alignment_error: float
    sigma_min: float
    prior_bound: float
    normalized_distance: float
    cross_sim_errors: tuple[float, float]
    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    def violations(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.holds)

    def as_dict(self) -> dict:
        return {
            "residual": self.residual,
            "epsilon": self.epsilon,
            "delta_sq": self.delta_sq,
            "theorem1_bound": self.theorem1_bound,
            "corollary2_bound": self.corollary2_bound,
            "mean_sq_alignment_error": self.mean_sq_alignment_error,
            "sigma_min": self.sigma_min,
            "prior_bound": self.prior_bound,
            "normalized_distance": self.normalized_distance,
            "cross_sim_errors": list(self.cross_sim_errors),
            "checks": [c.as_dict() for c in self.checks],
        }


def _check_counts(x: EmbeddingMatrix, y: EmbeddingMatrix) -> None:
    if x.count != y.count:
        raise ValidationError(
            f"item count mismatch: {x.count} vs {y.count}; pair_by_id first"
        )


def gram_discrepancy(x: EmbeddingMatrix, y: EmbeddingMatrix, *,
                     block_size: int = GRAM_BLOCK) -> float:
    """Frobenius distance between the two Gram matrices.

    The sets must be paired (equal counts); their dimensions may differ,
    since only dot products between items enter.  Above ``block_size``
    items the sum streams over column blocks, so memory stays linear in
    the block size instead of quadratic in the item count.
    """
    _check_counts(x, y)
    xv, yv = x.vectors, y.vectors
    n = x.count
    if n <= block_size:
        return float(np.linalg.norm(xv @ xv.T - yv @ yv.T))
    total = 0.0
    for i in range(0, n, block_size):
        xi, yi = xv[i:i + block_size], yv[i:i + block_size]
        for j in range(0, n, block_size):
            d = xi @ xv[j:j + block_size].T - yi @ yv[j:j + block_size].T
            total += float(np.sum(d * d))
    return math.sqrt(total)


def dot_product_mse(x: EmbeddingMatrix, y: EmbeddingMatrix) -> float:
    """Mean squared dot-product error over all item pairs.

    Equals ``gram_discrepancy**2 / N**2``: the same quantity averaged
    instead of summed.
    """
    _check_counts(x, y)
    if x.count < 1:
        raise ValidationError("need at least one item")
    return (gram_discrepancy(x, y) / x.count) ** 2


def check_psk_inequality(a, b, *, slack: float = 1e-9) -> CheckResult:
    """Check ``||A - B||_4^2 <= ||A^2 - B^2||_F`` for PSD ``A``, ``B``.

    Inputs must be symmetric positive semidefinite within ``PSD_TOL``
    (floating-point Wishart factors are accepted by symmetrizing first).
    The Schatten 4-norm is computed from the eigenvalues of the symmetric
    difference.
    """
    a = _checked_psd(check_matrix(a, "a"), "a")
    b = _checked_psd(check_matrix(b, "b"), "b")
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    w = np.linalg.eigvalsh(a - b)
    lhs = math.sqrt(float(np.sum(w ** 4)))
    rhs = float(np.linalg.norm(a @ a - b @ b))
    return CheckResult("psk_p2", lhs, rhs, holds=lhs <= rhs + slack)


def _checked_psd(m: np.ndarray, name: str) -> np.ndarray:
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got {m.shape}")
    scale = float(np.linalg.norm(m))
    if float(np.linalg.norm(m - m.T)) > PSD_TOL * max(1.0, scale):
        raise ValidationError(f"{name} is not symmetric")
    sym = (m + m.T) / 2.0
    w = np.linalg.eigvalsh(sym)
    lam_max = float(w[-1]) if w.size else 0.0
    if w.size and float(w[0]) < -PSD_TOL * max(lam_max, 0.0):
        raise ValidationError(
            f"{name} is not positive semidefinite: min eigenvalue {w[0]:.3e}"
        )
    return sym


def matrix_abs(m) -> np.ndarray:
    """Matrix absolute value ``|M| = (M^T M)^{1/2}`` of a ``(dims, n)`` matrix.

    Computed by symmetric eigendecomposition of ``M^T M``.  Eigenvalues
    below the decomposition's own noise floor (including any negative
    ones) are clamped to zero so that ``|M|`` has the same numerical rank
    as ``M`` instead of acquiring spurious directions of size
    ``sqrt(eps) * sigma_max``.
    """
    m = check_matrix(m, "m")
    gram = m.T @ m
    gram = (gram + gram.T) / 2.0
    w, v = np.linalg.eigh(gram)
    lam_max = float(w[-1]) if w.size else 0.0
    cutoff = max(m.shape) * np.finfo(np.float64).eps * max(lam_max, 0.0)
    w = np.where(w > cutoff, w, 0.0)
    root = (v * np.sqrt(w)) @ v.T
    return (root + root.T) / 2.0


def tightness_example(dims: int, epsilon: float) -> tuple[EmbeddingMatrix, EmbeddingMatrix]:
    """Paired sets on which the residual bound holds with equality.

    For ``N = 2 * dims`` items, both sets place duplicated scaled basis
    vectors so that the cross-covariance between them vanishes: every
    orthogonal map then achieves the same residual, which equals
    ``(2 * dims)**0.25 * sqrt(epsilon)`` exactly while the Gram
    discrepancy equals ``epsilon``.  The bound cannot be improved.
    """
    dims = check_positive_int(dims, "dims")
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon <= 0.0:
        raise ValidationError(f"epsilon must be a positive real, got {epsilon}")
    c = math.sqrt(epsilon / (2.0 * math.sqrt(2.0 * dims)))
    n = 2 * dims
    x = np.zeros((n, dims))
    y = np.zeros((n, dims))
    for i in range(dims):
        x[2 * i, i] = c
        x[2 * i + 1, i] = c
        y[2 * i, i] = c
        y[2 * i + 1, i] = -c
    ids = tuple(f"item-{j:04d}" for j in range(n))
    return EmbeddingMatrix(x, ids), EmbeddingMatrix(y, ids)


def build_report(x: EmbeddingMatrix, y: EmbeddingMatrix, *,
                 slack: float = CHECK_SLACK) -> AlignmentReport:
    """Align ``x`` onto ``y`` and evaluate every bound on the result.

    Requires equal dimensions (zero-pad the narrower set first) and equal
    counts.  The returned report carries one :class:`CheckResult` per
    inequality: the residual bound, the per-item mean-squared-error bound,
    and — when both sides have unit-norm vectors, so dot products are
    cosine similarities — the two cross-similarity bounds.  ``slack`` is
    the additive tolerance granted to each inequality.
    """
    _check_counts(x, y)
    if x.dims != y.dims:
        raise ValidationError(
            f"dimension mismatch: {x.dims} vs {y.dims}; zero_pad first"
        )
    if x.count < 1:
        raise ValidationError("need at least one item")
    n = x.count
    d = x.dims

    xc, yc = x.vectors.T, y.vectors.T
    q = solvers.procrustes_rotation(xc, yc)
    residual = solvers.alignment_residual(q, xc, yc)
    epsilon = gram_discrepancy(x, y)
    delta = epsilon / n
    delta_sq = delta ** 2
    theorem1_bound = (2.0 * d) ** 0.25 * math.sqrt(epsilon)
    corollary2_bound = math.sqrt(2.0 * d) * delta
    mean_sq_alignment_error = residual ** 2 / n

    sv = np.linalg.svd(xc, compute_uv=False)
    sigma_min = float(sv[-1]) if sv.size else 0.0
    prior_bound = epsilon / sigma_min if sigma_min > 0.0 else math.inf

    y_norm = float(np.linalg.norm(yc))
    normalized_distance = residual / y_norm if y_norm > 0.0 else 0.0

    aligned = x.vectors @ q.T
    cross = aligned @ y.vectors.T
    err_vs_target = float(np.linalg.norm(cross - y.vectors @ y.vectors.T)) ** 2 / n ** 2
    err_vs_source = float(np.linalg.norm(cross - x.vectors @ x.vectors.T)) ** 2 / n ** 2

    checks = [
        CheckResult("theorem1", residual, theorem1_bound,
                    holds=residual <= theorem1_bound + slack),
        CheckResult("corollary2", mean_sq_alignment_error, corollary2_bound,
                    holds=mean_sq_alignment_error <= corollary2_bound + slack),
    ]
    unit_norm = (
        np.max(np.abs(np.linalg.norm(x.vectors, axis=1) - 1.0)) <= CHECK_SLACK
        and np.max(np.abs(np.linalg.norm(y.vectors, axis=1) - 1.0)) <= CHECK_SLACK
    )
    if unit_norm:
        checks.append(CheckResult(
            "corollary3_vs_target", err_vs_target, corollary2_bound,
            holds=err_vs_target <= corollary2_bound + slack))
        checks.append(CheckResult(
            "corollary3_vs_source", err_vs_source, corollary2_bound,
            holds=err_vs_source <= corollary2_bound + slack))

    return AlignmentReport(
        residual=residual,
        epsilon=epsilon,
        delta_sq=delta_sq,
        theorem1_bound=theorem1_bound,
        corollary2_bound=corollary2_bound,
        mean_sq_alignment_error=mean_sq_alignment_error,
        sigma_min=sigma_min,
        prior_bound=prior_bound,
        normalized_distance=normalized_distance,
        cross_sim_errors=(err_vs_target, err_vs_source),
        checks=tuple(checks),
    )


def perturbation_sweep(dims: int, count: int, noise_levels, seeds: int, *,
                       base_seed: int = 0) -> list[tuple[float, float, float]]:
    """Measure how alignment error grows as paired geometry degrades.

    For each noise level ``s`` and each of ``seeds`` repetitions, draws a
    Gaussian source set, rotates it by a random orthogonal map, adds
    ``s``-scaled Gaussian noise, and records
    ``(s, epsilon / ||Gram(Y)||_F, residual / ||Y||_F)``.  Rows are sorted
    by noise level; each (level, repetition) cell uses an independent
    random stream keyed by its indices, so results do not depend on
    evaluation order.
    """
    dims = check_positive_int(dims, "dims")
    count = check_positive_int(count, "count")
    seeds = check_positive_int(seeds, "seeds")
    levels = [float(s) for s in noise_levels]
    if not levels:
        raise ValidationError("noise_levels must be non-empty")
    if any(not np.isfinite(s) or s < 0.0 for s in levels):
        raise ValidationError("noise levels must be nonnegative reals")

    order = sorted(range(len(levels)), key=lambda i: levels[i])
    rows = []
    for li in order:
        s = levels[li]
        for si in range(seeds):
            rng = seeded_rng(base_seed, li, si)
            xc = rng.standard_normal((dims, count))
            q0 = solvers.random_orthogonal(dims, rng)
            yc = q0 @ xc + s * rng.standard_normal((dims, count))
            q = solvers.procrustes_rotation(xc, yc)
            residual = solvers.alignment_residual(q, xc, yc)
            gram_y = yc.T @ yc
            epsilon = float(np.linalg.norm(xc.T @ xc - gram_y))
            gy_norm = float(np.linalg.norm(gram_y))
            y_norm = float(np.linalg.norm(yc))
            rows.append((
                s,
                epsilon / gy_norm if gy_norm > 0.0 else 0.0,
                residual / y_norm if y_norm > 0.0 else 0.0,
            ))
    return rows
