"""scikit-learn style wrappers around the fitting pipeline.

``X`` holds hyper-parameter configurations (one row each) and ``y`` the
metric observed at each configuration. :class:`PlateauBoundary` learns the
boundary where the metric changes level and exposes it through the usual
``decision_function``/``predict`` interface; the representative
configuration on the boundary is available after ``fit``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .boundary import DEFAULT_HIDDEN, FAMILIES
from .exceptions import InputError, MethodError
from .grid import TRANSFORM_MODES, Direction, EvalGrid, fit_transform
from .likelihood import soft_mle, soft_weights
from .optimize import OptimOptions, multi_start_fit
from .representative import RESTRICTIONS, partition, representative_point

__all__ = ["LogStandardScaler", "PlateauBoundary", "materialize_seed"]

_SEED_BOUND = 2**31 - 1


def materialize_seed(random_state) -> int:
    """Concrete integer seed for ``random_state``.

    ``None`` draws fresh entropy, so the returned value must be recorded for
    the run to be reproducible.
    """
    if random_state is None:
        return int(np.random.SeedSequence().generate_state(1)[0] % _SEED_BOUND)
    if isinstance(random_state, (int, np.integer)):
        if random_state < 0:
            raise InputError("seed must be non-negative")
        return int(random_state)
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(_SEED_BOUND))
    return int(check_random_state(random_state).randint(_SEED_BOUND))


def _feature_names(X, m: int) -> tuple[str, ...]:
    cols = getattr(X, "columns", None)
    if cols is not None and len(cols) == m:
        return tuple(str(c) for c in cols)
    return tuple(f"x{j + 1}" for j in range(m))


class LogStandardScaler(TransformerMixin, BaseEstimator):
    """Standardize the natural log of each column.

    Parameters
    ----------
    mode : {"log-std", "auto", "none"} or sequence of bool
        ``"auto"`` only transforms columns whose values are all positive;
        a sequence selects the transformed columns explicitly.

    Attributes
    ----------
    spec_ : TransformSpec
        Per-column log means and sample standard deviations.
    """

    def __init__(self, mode="log-std"):
        self.mode = mode

    def fit(self, X, y=None):
        names = _feature_names(X, np.shape(X)[-1])
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        grid = EvalGrid(X, np.zeros(X.shape[0]), names=names)
        _, self.spec_ = fit_transform(grid, self.mode)
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        return self.spec_.forward(check_array(X, dtype=float))

    def inverse_transform(self, X):
        check_is_fitted(self, "spec_")
        return self.spec_.inverse(check_array(X, dtype=float))


class PlateauBoundary(BaseEstimator):
    """Boundary between two metric levels in hyper-parameter space.

    The boundary ``g(u) = 0`` is fitted in log-standardized coordinates by
    maximizing the sigmoid-softened two-mean Gaussian profile likelihood.
    Points with ``g <= 0`` form side 1, which carries the lower mean metric.

    Parameters
    ----------
    boundary : {"qp", "nn"}
        Quadratic polynomial or one hidden layer tanh network.
    hidden : int
        Hidden width of the network.
    optimizer : {"bfgs", "adam"} or None
        ``None`` uses BFGS for ``"qp"`` and ADAM for ``"nn"``.
    restarts : int
        Number of optimizer starts.
    max_iter : int or None
        Iteration cap per start; ``None`` keeps the optimizer's default.
    transform : {"log-std", "auto", "none"}
    direction : {"min", "max"}
        Whether lower or higher metric values are better. Only the choice of
        the good side depends on it.
    restrict : {"all", "good-side", "side1", "side2"}
        Grid points eligible as the nearest configuration.
    n_jobs : int
        Threads used for the restarts. Results do not depend on it.
    random_state : int, Generator, RandomState or None

    Attributes
    ----------
    seed_ : int
        Seed actually used.
    transform_ : TransformSpec
    fit_result_ : FitResult
    params_ : QPParams or NNParams
    partition_ : PartitionResult
        Sides of the training points.
    representative_ : RepresentativeResult or None
        ``None`` when selection failed; the reason is in
        ``representative_error_``.
    """

    def __init__(
        self,
        boundary="qp",
        hidden=DEFAULT_HIDDEN,
        optimizer=None,
        restarts=16,
        max_iter=None,
        transform="log-std",
        direction="min",
        restrict="all",
        n_jobs=1,
        random_state=None,
    ):
        self.boundary = boundary
        self.hidden = hidden
        self.optimizer = optimizer
        self.restarts = restarts
        self.max_iter = max_iter
        self.transform = transform
        self.direction = direction
        self.restrict = restrict
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _check_params(self):
        if self.boundary not in FAMILIES:
            raise InputError(f"boundary must be one of {FAMILIES}, got {self.boundary!r}")
        if isinstance(self.transform, str) and self.transform not in TRANSFORM_MODES:
            raise InputError(f"transform must be one of {TRANSFORM_MODES}, got {self.transform!r}")
        if self.restrict not in RESTRICTIONS:
            raise InputError(f"restrict must be one of {RESTRICTIONS}, got {self.restrict!r}")
        Direction.parse(self.direction)

    def _options(self) -> OptimOptions:
        return OptimOptions(
            max_iters=self.max_iter,
            restarts=int(self.restarts),
            seed=self.seed_,
            optimizer=self.optimizer,
            hidden=int(self.hidden),
            n_jobs=int(self.n_jobs or 1),
        )

    def fit(self, X, y, names=None, metric_name="metric"):
        """Fit the boundary and select the representative configuration.

        Method failures during the fit itself (constant metric, every
        restart degenerate) propagate; failures of the selection step are
        stored in ``representative_error_``.
        """
        self._check_params()
        if names is None:
            names = _feature_names(X, np.shape(X)[-1])
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        self.seed_ = materialize_seed(self.random_state)
        grid = EvalGrid(X, y, names=tuple(names), metric_name=metric_name, direction=self.direction)
        tgrid, self.transform_ = fit_transform(grid, self.transform)
        self.grid_ = grid
        self.transformed_grid_ = tgrid
        self.fit_result_ = multi_start_fit(tgrid, self.boundary, self._options(), self.transform_)
        self.params_ = self.fit_result_.params
        self.partition_ = partition(tgrid, self.params_, allow_empty=True)
        try:
            self.representative_ = representative_point(tgrid, self.params_, self.transform_, self.restrict)
            self.representative_error_ = None
        except MethodError as exc:
            self.representative_ = None
            self.representative_error_ = exc
        return self

    def representative_point(self, restrict=None):
        """Recompute the selection with another ``restrict`` setting."""
        check_is_fitted(self, "params_")
        return representative_point(
            self.transformed_grid_, self.params_, self.transform_, restrict or self.restrict
        )

    def _transformed(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise InputError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.transform_.forward(X)

    def decision_function(self, X):
        """Boundary value ``g``; positive on side 2."""
        U = self._transformed(X)
        return np.asarray(self.params_.value(U), dtype=float)

    def predict(self, X):
        """Side label, 1 or 2."""
        return np.where(self.decision_function(X) <= 0, 1, 2)

    def predict_proba(self, X):
        """Soft side memberships; columns are sides 1 and 2."""
        g = self.decision_function(X)
        return np.column_stack([expit(-g), expit(g)])

    def score(self, X, y):
        """Soft profile log-likelihood per point of ``(X, y)``."""
        y = np.asarray(y, dtype=float).ravel()
        stats = soft_mle(soft_weights(self.decision_function(X)), y)
        return stats.loglik / y.size

    @property
    def boundary_point_(self) -> np.ndarray:
        """Representative boundary point in user units."""
        check_is_fitted(self, "params_")
        if self.representative_ is None:
            raise self.representative_error_
        return self.representative_.user("boundary_point")

    @property
    def nearest_point_(self) -> np.ndarray:
        """Evaluated configuration nearest the boundary point, user units."""
        check_is_fitted(self, "params_")
        if self.representative_ is None:
            raise self.representative_error_
        return self.representative_.user("nearest_point")

