"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def check_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce ``values`` to a finite 2-D float64 array.

    Raises :class:`ValidationError` if the input is not two-dimensional or
    contains NaN/Inf entries.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_vector(values, name: str = "vector") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, a_name: str = "source",
                     b_name: str = "target") -> None:
    if a.shape != b.shape:
        raise ValidationError(
            f"{a_name} and {b_name} shapes differ: {a.shape} vs {b.shape}"
        )


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise ValidationError(f"{name} must be >= 1, got {value}")
    return int(value)


def seeded_rng(seed: int, *task: int) -> np.random.Generator:
    """Independent random stream for one logical task of a seeded run.

    Streams are keyed by ``(seed, *task)`` through a ``SeedSequence`` spawn
    key, so results do not depend on the order in which tasks are evaluated.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(t) for t in task))
    return np.random.default_rng(ss)
