import numpy as np
import pytest
from scipy.optimize import minimize

from plateau.boundary import QPParams
from plateau.exceptions import AllRestartsDegenerate, ConstantMetric, InputError, NonFiniteValue
from plateau.grid import EvalGrid, lattice
from plateau.likelihood import SoftProfileObjective, hard_profile_loglik, soft_mle, soft_weights, zhu_ghodsi_1d
from plateau.optimize import (
    OptimOptions,
    Termination,
    adam_maximize,
    bfgs_maximize,
    multi_start_fit,
    restart_init,
)

from conftest import circle_grid


def bowl(target):
    target = np.asarray(target, dtype=float)
    return lambda x: (-float(np.sum((x - target) ** 2)), -2 * (x - target))


def ill_conditioned(x):
    return -(x[0] ** 2 + 100 * x[1] ** 2), -np.array([2 * x[0], 200 * x[1]])


def same_side(a, b):
    """Partitions equal up to swapping the two labels."""
    return np.array_equal(a, b) or np.array_equal(a, 3 - b)


class TestBFGS:
    def test_bowl(self):
        out = bfgs_maximize(bowl([3.0, -2.0]), [0.0, 0.0])
        np.testing.assert_allclose(out.x, [3.0, -2.0], atol=1e-6)

    def test_at_optimum(self):
        out = bfgs_maximize(bowl([1.0, 1.0]), [1.0, 1.0])
        assert out.reason is Termination.GRAD_TOL
        assert out.iterations == 0

    def test_ill_conditioned(self):
        out = bfgs_maximize(ill_conditioned, [1.0, 1.0])
        assert np.linalg.norm(out.x) < 1e-5
        assert out.iterations <= 100
        ref = minimize(lambda x: -ill_conditioned(x)[0], [1.0, 1.0], jac=lambda x: -ill_conditioned(x)[1], method="BFGS")
        np.testing.assert_allclose(out.x, ref.x, atol=1e-5)

    def test_monotone_history(self, rng):
        pts = rng.normal(size=(40, 2))
        z = np.where(pts[:, 0] ** 2 + pts[:, 1] ** 2 < 1, 0.0, 5.0) + rng.normal(size=40)
        obj = SoftProfileObjective("qp", pts, z)
        for k in range(6):
            out = bfgs_maximize(obj, restart_init("qp", 2, 32, 0, k).to_vector())
            assert np.all(np.diff(out.history) >= 0)
            assert out.value >= out.history[0]

    def test_max_iters(self):
        out = bfgs_maximize(ill_conditioned, [1.0, 1.0], OptimOptions(max_iters=2))
        assert out.reason is Termination.MAX_ITERS
        assert out.iterations == 2

    def test_non_finite_start(self):
        with pytest.raises(NonFiniteValue):
            bfgs_maximize(lambda x: (np.nan, x), [1.0])

    def test_unbounded_steps_also_converge(self):
        out = bfgs_maximize(bowl([30.0, -20.0]), [0.0, 0.0], OptimOptions(max_step=None))
        np.testing.assert_allclose(out.x, [30.0, -20.0], atol=1e-6)


class TestADAM:
    def test_scalar_quadratic(self):
        out = adam_maximize(bowl([0.0]), [5.0])
        assert abs(out.x[0]) < 1e-2
        assert out.iterations <= 2000

    def test_scalar_recurrence(self):
        # the same bias-corrected recurrence written out by hand
        x, m, v = 5.0, 0.0, 0.0
        for t in range(1, 51):
            g = -2 * x
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            x = x + 1e-2 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        out = adam_maximize(bowl([0.0]), [5.0], OptimOptions(max_iters=50))
        assert out.x[0] == pytest.approx(x, rel=1e-12)

    def test_constant_objective(self):
        out = adam_maximize(lambda x: (1.0, np.zeros_like(x)), [5.0, 1.0])
        np.testing.assert_array_equal(out.x, [5.0, 1.0])
        assert out.reason is Termination.OBJ_TOL

    def test_returns_best_not_last(self):
        # a large step overshoots the narrow peak; the best iterate is kept
        out = adam_maximize(bowl([0.0]), [0.05], OptimOptions(step_size=0.5, max_iters=30))
        assert out.value == max(out.history)

    def test_deterministic(self, rng):
        pts = rng.normal(size=(30, 2))
        z = (pts[:, 0] > 0) * 4.0 + rng.normal(size=30)
        obj = SoftProfileObjective("nn", pts, z, hidden=6)
        x0 = restart_init("nn", 2, 6, 3, 0).to_vector()
        a = adam_maximize(obj, x0, OptimOptions(max_iters=300))
        b = adam_maximize(obj, x0, OptimOptions(max_iters=300))
        np.testing.assert_array_equal(a.x, b.x)
        assert a.history == b.history


class TestOptions:
    @pytest.mark.parametrize(
        "kwargs", [{"grad_tol": 0}, {"obj_tol": -1}, {"restarts": 0}, {"optimizer": "sgd"}, {"soften": (1.5,)}]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InputError):
            OptimOptions(**kwargs)

    def test_defaults(self):
        o = OptimOptions()
        assert (o.iterations_for("bfgs"), o.iterations_for("adam")) == (500, 2000)
        assert (o.grad_tol, o.obj_tol, o.restarts) == (1e-6, 1e-10, 16)
        assert (o.step_size, o.beta1, o.beta2, o.epsilon) == (1e-2, 0.9, 0.999, 1e-8)


def step_grid(rng, n=60, jump=0.4, noise=0.5):
    pts = rng.uniform(-2, 2, size=(n, 2))
    z = np.where(pts[:, 0] <= jump, 0.0, 8.0) + noise * rng.normal(size=n)
    return EvalGrid(pts, z)


class TestMultiStart:
    def test_step_matches_one_d_oracle(self, rng):
        for _ in range(3):
            grid = step_grid(rng)
            fit = multi_start_fit(grid, "qp", OptimOptions(seed=1))
            sides = np.where(fit.params.value(grid.points) <= 0, 1, 2)
            x = grid.points[:, 0]
            ref = np.where(x <= zhu_ghodsi_1d(x, grid.metrics).threshold, 1, 2)
            assert same_side(sides, ref)

    def test_noiseless_step_reaches_hard_optimum(self, rng):
        grid = step_grid(rng, noise=0.0)
        fit = multi_start_fit(grid, "qp", OptimOptions(seed=0))
        side2 = fit.params.value(grid.points) > 0
        x = grid.points[:, 0]
        best = zhu_ghodsi_1d(x, grid.metrics).profile.max()
        assert hard_profile_loglik(side2, grid.metrics) >= best - 1e-9 * abs(best)

    def test_circle_recovery_qp(self):
        grid, labels = circle_grid(seed=2)
        fit = multi_start_fit(grid, "qp", OptimOptions(seed=2))
        sides = np.where(fit.params.value(grid.points) <= 0, 1, 2)
        assert np.mean(sides == labels) >= 0.95

    def test_orientation(self, rng):
        grid = step_grid(rng)
        fit = multi_start_fit(grid, "qp", OptimOptions(seed=4, restarts=4))
        stats = soft_mle(soft_weights(fit.params.value(grid.points)), grid.metrics)
        assert stats.mu1 < stats.mu2
        unoriented = multi_start_fit(grid, "qp", OptimOptions(seed=4, restarts=4), orient=False)
        assert unoriented.loglik == fit.loglik

    def test_single_restart_is_one_optimizer_call(self, rng):
        grid = step_grid(rng)
        opts = OptimOptions(seed=9, restarts=1, soften=())
        fit = multi_start_fit(grid, "qp", opts, orient=False)
        obj = SoftProfileObjective("qp", grid.points, grid.metrics)
        direct = bfgs_maximize(obj, restart_init("qp", 2, 32, 9, 0).to_vector(), opts)
        np.testing.assert_array_equal(fit.params.to_vector(), direct.x)
        assert fit.loglik == direct.value

    def test_restart_dominance(self, rng):
        grid = step_grid(rng, n=40, noise=2.0)
        prev = -np.inf
        for k in range(1, 7):
            fit = multi_start_fit(grid, "qp", OptimOptions(seed=3, restarts=k, soften=()))
            assert fit.loglik >= prev
            prev = fit.loglik

    def test_best_is_max_over_records(self, rng):
        grid = step_grid(rng, noise=2.0)
        fit = multi_start_fit(grid, "qp", OptimOptions(seed=5, restarts=6))
        assert fit.loglik == max(r.final_loglik for r in fit.restarts)
        assert fit.restarts[fit.best_index].final_loglik == fit.loglik
        raw = [r for r in fit.restarts if r.parent is None]
        assert len(raw) == 6
        assert fit.loglik >= max(r.final_loglik for r in raw)
        assert {r.reason for r in fit.restarts} <= {t.value for t in Termination}

    @pytest.mark.parametrize("family", ["qp", "nn"])
    def test_parallel_is_deterministic(self, family, rng):
        grid = step_grid(rng, n=30)
        base = OptimOptions(seed=11, restarts=4, hidden=4, max_iters=300 if family == "nn" else None)
        serial = multi_start_fit(grid, family, base)
        parallel = multi_start_fit(grid, family, OptimOptions(**{**base.__dict__, "n_jobs": 4}))
        np.testing.assert_array_equal(serial.params.to_vector(), parallel.params.to_vector())
        assert serial.to_dict() == parallel.to_dict()

    def test_constant_metric(self):
        grid = EvalGrid(lattice((3, 3), ((0, 1), (0, 1))), np.full(9, 2.0))
        with pytest.raises(ConstantMetric, match="degenerate: metric constant"):
            multi_start_fit(grid, "qp")

    def test_all_restarts_degenerate(self):
        # far from the origin every hyperplane or quadric start puts all
        # the mass on one side
        pts = lattice((3, 3), ((1000, 1001), (1000, 1001)))
        grid = EvalGrid(pts, np.arange(9.0))
        with pytest.raises(AllRestartsDegenerate):
            multi_start_fit(grid, "qp", OptimOptions(restarts=6))

    def test_unknown_family(self, offset_circle):
        with pytest.raises(InputError):
            multi_start_fit(offset_circle[0], "spline")

    def test_restart_seeds(self):
        a = restart_init("qp", 2, 32, 7, 5).to_vector()
        b = restart_init("qp", 2, 32, 7, 5).to_vector()
        c = restart_init("qp", 2, 32, 8, 5).to_vector()
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)
        assert np.array_equal(restart_init("qp", 2, 32, 0, 0).b, [1.0, 0.0])
        assert isinstance(restart_init("qp", 2, 32, 0, 5), QPParams)
