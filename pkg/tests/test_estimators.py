"""Estimator-facade tests: fit/transform contracts and sklearn plumbing."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from embalign import (
    EmbeddingCenterer,
    LinearAlignment,
    ProcrustesAlignment,
    ValidationError,
)
from embalign.solvers import random_orthogonal


@pytest.fixture
def rotated_pair(rng):
    x = rng.standard_normal((30, 5))
    q0 = random_orthogonal(5, rng)
    return x, x @ q0.T, q0


class TestProcrustesAlignment:
    def test_fit_recovers_rotation(self, rotated_pair):
        x, y, q0 = rotated_pair
        est = ProcrustesAlignment().fit(x, y)
        assert np.linalg.norm(est.rotation_ - q0) < 1e-9
        assert est.residual_ < 1e-9
        assert np.allclose(est.transform(x), y, atol=1e-9)

    def test_inverse_round_trip(self, rng, rotated_pair):
        x, y, _ = rotated_pair
        est = ProcrustesAlignment().fit(x, y)
        fresh = rng.standard_normal((7, 5))
        assert np.allclose(est.inverse_transform(est.transform(fresh)), fresh,
                           atol=1e-12)

    def test_score_is_negative_mse(self, rng):
        x = rng.standard_normal((20, 3))
        y = rng.standard_normal((20, 3))
        est = ProcrustesAlignment().fit(x, y)
        expected = -np.mean(np.sum((est.transform(x) - y) ** 2, axis=1))
        assert est.score(x, y) == pytest.approx(expected, rel=1e-12)
        assert est.score(x, y) <= 0.0

    def test_unfitted_raises(self, rng):
        with pytest.raises(NotFittedError):
            ProcrustesAlignment().transform(rng.standard_normal((3, 2)))

    def test_shape_validation(self, rng):
        with pytest.raises(ValidationError):
            ProcrustesAlignment().fit(rng.standard_normal((5, 2)),
                                      rng.standard_normal((6, 2)))

    def test_clone_and_params(self):
        est = ProcrustesAlignment()
        assert est.get_params() == {}
        assert isinstance(clone(est), ProcrustesAlignment)


class TestLinearAlignment:
    def test_beats_or_ties_orthogonal_fit(self, rng):
        x = rng.standard_normal((40, 4))
        y = rng.standard_normal((40, 4))
        linear = LinearAlignment().fit(x, y)
        orthogonal = ProcrustesAlignment().fit(x, y)
        assert linear.residual_ <= orthogonal.residual_ + 1e-9

    def test_ridge_param_round_trips(self, rng):
        est = LinearAlignment(ridge=0.5)
        assert est.get_params() == {"ridge": 0.5}
        assert clone(est).ridge == 0.5
        x = rng.standard_normal((20, 3))
        y = rng.standard_normal((20, 3))
        heavier = LinearAlignment(ridge=50.0).fit(x, y)
        assert np.linalg.norm(heavier.matrix_) < np.linalg.norm(
            est.fit(x, y).matrix_)

    def test_scaling_case(self, rng):
        x = rng.standard_normal((15, 3))
        est = LinearAlignment().fit(x, 2.0 * x)
        assert np.allclose(est.matrix_, 2.0 * np.eye(3), atol=1e-10)


class TestEmbeddingCenterer:
    def test_mean_and_round_trip(self, rng):
        x = rng.standard_normal((25, 4)) + 3.0
        est = EmbeddingCenterer().fit(x)
        assert np.allclose(est.mean_, x.mean(axis=0))
        out = est.transform(x)
        assert np.abs(out.mean(axis=0)).max() < 1e-12
        assert np.allclose(est.inverse_transform(out), x, atol=1e-12)

    def test_renormalize(self, rng):
        x = rng.standard_normal((10, 3))
        out = EmbeddingCenterer(renormalize=True).fit(x).transform(x)
        assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-10)

    def test_renormalized_inverse_refused(self, rng):
        x = rng.standard_normal((10, 3))
        est = EmbeddingCenterer(renormalize=True).fit(x)
        with pytest.raises(ValueError, match="not invertible"):
            est.inverse_transform(est.transform(x))


def test_center_then_align_pipeline(rng):
    # The estimators compose in a pipeline; fitting the aligner on
    # centered data is the "center" variant of the evaluation protocol.
    x = rng.standard_normal((30, 4)) + 5.0
    q0 = random_orthogonal(4, rng)
    y = x @ q0.T
    pipe = make_pipeline(EmbeddingCenterer(), ProcrustesAlignment())
    pipe.fit(x, y)
    assert pipe.transform(x).shape == (30, 4)
