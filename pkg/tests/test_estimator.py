import numpy as np
import pytest
from scipy.special import expit
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from plateau.estimator import LogStandardScaler, PlateauBoundary, materialize_seed
from plateau.exceptions import ConstantMetric, InputError, NoSignChange, NonPositiveCoordinate

from conftest import circle_grid


@pytest.fixture(scope="module")
def fitted():
    grid, labels = circle_grid(seed=0)
    est = PlateauBoundary(transform="none", random_state=0).fit(grid.points, grid.metrics)
    return est, grid, labels


class TestPlateauBoundary:
    def test_params_round_trip(self):
        est = PlateauBoundary(boundary="nn", hidden=8, restarts=3, random_state=5)
        again = clone(est)
        assert again.get_params() == est.get_params()
        assert est.set_params(restarts=4).restarts == 4

    def test_predict_matches_labels(self, fitted):
        est, grid, labels = fitted
        assert np.mean(est.predict(grid.points) == labels) >= 0.95
        assert est.seed_ == 0

    def test_decision_and_proba(self, fitted):
        est, grid, _ = fitted
        g = est.decision_function(grid.points)
        proba = est.predict_proba(grid.points)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, rtol=1e-15)
        np.testing.assert_array_equal(est.predict(grid.points), np.where(g <= 0, 1, 2))
        np.testing.assert_allclose(proba[:, 1], expit(g), rtol=1e-12)

    def test_score_is_per_point_loglik(self, fitted):
        est, grid, _ = fitted
        assert est.score(grid.points, grid.metrics) == pytest.approx(est.fit_result_.loglik / grid.n, rel=1e-12)

    def test_representative(self, fitted):
        est, grid, _ = fitted
        assert est.representative_error_ is None
        assert abs(est.params_.value(est.representative_.boundary_point)) <= 1e-8
        np.testing.assert_array_equal(est.nearest_point_, grid.points[est.representative_.nearest_index])
        side2 = est.representative_point("side2")
        assert est.partition_.sides[side2.nearest_index] == 2

    def test_selection_failure_is_recorded(self):
        # on a centred lattice both centres of gravity sit inside the disk
        grid, _ = circle_grid(seed=0, bounds=((-2, 2), (-2, 2)))
        est = PlateauBoundary(transform="none", random_state=0).fit(grid.points, grid.metrics)
        assert est.representative_ is None
        assert isinstance(est.representative_error_, NoSignChange)
        with pytest.raises(NoSignChange):
            est.boundary_point_

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            PlateauBoundary().predict([[1.0, 2.0]])

    def test_constant_metric(self):
        with pytest.raises(ConstantMetric):
            PlateauBoundary(random_state=0).fit(np.exp(np.random.default_rng(0).normal(size=(10, 2))), np.ones(10))

    def test_log_transform_needs_positive(self):
        X = np.array([[0.0, 1.0], [1.0, 2.0], [2.0, 3.0], [3.0, 4.0]])
        with pytest.raises(NonPositiveCoordinate):
            PlateauBoundary(random_state=0).fit(X, [0, 0, 1, 1])

    def test_log_space_fit(self):
        grid, labels = circle_grid(seed=3)
        X = np.exp(grid.points)
        est = PlateauBoundary(random_state=1).fit(X, grid.metrics)
        assert np.mean(est.predict(X) == labels) >= 0.95
        assert est.transform_.transformed == (True, True)

    @pytest.mark.parametrize("bad", [{"boundary": "svm"}, {"transform": "log"}, {"restrict": "best"}, {"direction": "up"}])
    def test_invalid_params(self, bad):
        grid, _ = circle_grid(seed=0, shape=(4, 4))
        with pytest.raises(InputError):
            PlateauBoundary(**bad).fit(grid.points, grid.metrics)

    def test_feature_count_checked(self, fitted):
        with pytest.raises(InputError):
            fitted[0].predict(np.zeros((2, 3)))


class TestScaler:
    def test_round_trip(self, rng):
        X = np.exp(rng.normal(size=(25, 3)))
        sc = LogStandardScaler().fit(X)
        T = sc.transform(X)
        np.testing.assert_allclose(T.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(T.std(axis=0, ddof=1), 1, atol=1e-12)
        np.testing.assert_allclose(sc.inverse_transform(T), X, rtol=1e-12)

    def test_auto(self):
        X = np.array([[-1.0, 1.0], [0.5, 2.0], [2.0, 4.0]])
        sc = LogStandardScaler(mode="auto").fit(X)
        assert sc.spec_.transformed == (False, True)
        np.testing.assert_array_equal(sc.fit_transform(X)[:, 0], X[:, 0])


class TestSeeds:
    def test_int_passthrough(self):
        assert materialize_seed(17) == 17

    def test_none_draws(self):
        s = materialize_seed(None)
        assert 0 <= s < 2**31

    def test_generator(self):
        assert materialize_seed(np.random.default_rng(1)) == materialize_seed(np.random.default_rng(1))

    def test_negative(self):
        with pytest.raises(InputError):
            materialize_seed(-1)
