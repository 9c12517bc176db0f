import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plateau.boundary import (
    NNParams,
    QPParams,
    init_params,
    n_params,
    nn_eval,
    nn_grad_params,
    params_from_dict,
    params_from_vector,
    qp_eval,
    qp_grad_params,
)
from plateau.exceptions import CorruptResultFile, DimensionMismatch


def fd_jacobian(params, u, h=1e-5):
    theta = params.to_vector()
    cls = type(params)
    kw = {"hidden": params.hidden} if isinstance(params, NNParams) else {}
    out = np.empty(theta.size)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        out[j] = (cls.from_vector(theta + e, params.m, **kw).value(u) - cls.from_vector(theta - e, params.m, **kw).value(u)) / (2 * h)
    return out


def random_qp(r, m):
    return QPParams(r.normal(size=(m, m)), r.normal(size=m), r.normal())


def random_nn(r, m, H):
    return NNParams(r.normal(size=(H, m)), r.normal(size=H), r.normal(size=H), r.normal())


class TestQP:
    def test_unit_circle_point(self):
        assert qp_eval(QPParams(np.eye(2), [0, 0], -1), [1.0, 0.0]) == 0.0

    def test_one_d_threshold(self):
        p = QPParams(np.zeros((2, 2)), [1.0, 0.0], -0.7)
        assert qp_eval(p, [2.0, 5.0]) == pytest.approx(2.0 - 0.7)

    def test_mixed_term(self):
        p = QPParams([[1.0, 1.0], [0.0, 1.0]], [0, 0], 0)
        np.testing.assert_array_equal(p.A, [[1.0, 0.5], [0.5, 1.0]])
        assert qp_eval(p, [1.0, 1.0]) == 3.0

    def test_conic_round_trip(self):
        p = QPParams.from_conic(1, 2, 3, 4, 5, 6)
        assert p.to_conic() == (1, 2, 3, 4, 5, 6)

    def test_asymmetric_matrix_same_values(self, rng):
        A = rng.normal(size=(3, 3))
        U = rng.normal(size=(20, 3))
        direct = np.einsum("ij,jk,ik->i", U, A, U)
        np.testing.assert_allclose(QPParams(A, np.zeros(3), 0).value(U), direct, rtol=1e-12, atol=1e-12)
        np.testing.assert_array_equal(QPParams(A, np.zeros(3), 0).value(U), QPParams((A + A.T) / 2, np.zeros(3), 0).value(U))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            qp_eval(QPParams.circle(), [1.0, 2.0, 3.0])

    def test_gradient_at_origin(self):
        grad = qp_grad_params(QPParams.circle(), [0.0, 0.0])
        np.testing.assert_array_equal(grad, [0, 0, 0, 0, 0, 1])

    def test_gradient_m1(self):
        grad = qp_grad_params(QPParams([[0.3]], [0.1], 0.0), [2.0])
        assert grad[0] == 4.0

    def test_gradient_fd(self, rng):
        for m in (1, 2, 3):
            p = random_qp(rng, m)
            u = rng.normal(size=m)
            np.testing.assert_allclose(qp_grad_params(p, u), fd_jacobian(p, u), atol=1e-7)

    def test_batch_matches_single(self, rng):
        p = random_qp(rng, 2)
        U = rng.normal(size=(5, 2))
        np.testing.assert_allclose(p.value(U), [p.value(u) for u in U], rtol=1e-15)
        np.testing.assert_allclose(p.jacobian(U), [p.jacobian(u) for u in U], rtol=1e-15)

    def test_vector_round_trip(self, rng):
        p = random_qp(rng, 3)
        q = QPParams.from_vector(p.to_vector(), 3)
        np.testing.assert_array_equal(p.A, q.A)
        assert p.to_vector().size == n_params("qp", 3) == 10

    def test_non_finite(self):
        with pytest.raises(ValueError):
            QPParams([[np.nan]], [0.0], 0.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_positive_scaling_keeps_signs(self, seed, kappa):
        r = np.random.default_rng(seed)
        p = random_qp(r, 2)
        U = r.normal(size=(50, 2))
        np.testing.assert_array_equal(p.value(U) <= 0, p.scaled(kappa).value(U) <= 0)


class TestNN:
    def test_constant_network(self):
        p = NNParams(np.zeros((4, 2)), np.zeros(4), np.zeros(4), 1.7)
        assert nn_eval(p, [3.0, -2.0]) == 1.7

    def test_single_unit(self):
        p = NNParams([[1.0, 0.0]], [0.0], [1.0], 0.0)
        assert nn_eval(p, [1.0, 0.0]) == pytest.approx(0.761594, abs=1e-6)
        assert nn_eval(p, [1.0, 0.0]) == math.tanh(1.0)

    def test_output_sign_flip(self, rng):
        p = random_nn(rng, 2, 5)
        q = NNParams(p.W1, p.b1, -p.w2, -p.b2)
        U = rng.normal(size=(7, 2))
        np.testing.assert_array_equal(q.value(U), -p.value(U))

    def test_zero_weight_gradient(self):
        p = NNParams(np.zeros((3, 2)), np.zeros(3), np.zeros(3), 0.0)
        grad = nn_grad_params(p, [0.4, -0.2])
        assert grad[-1] == 1.0
        np.testing.assert_array_equal(grad[3 * 2 + 3 : 3 * 2 + 6], 0.0)

    def test_single_unit_gradient(self):
        p = NNParams([[1.0, 0.0]], [0.0], [1.0], 0.0)
        grad = nn_grad_params(p, [1.0, 0.0])
        assert grad[2 + 1] == pytest.approx(math.tanh(1.0), rel=1e-15)

    def test_gradient_fd(self, rng):
        for _ in range(20):
            p = random_nn(rng, 2, 6)
            u = rng.normal(size=2)
            fd = fd_jacobian(p, u)
            an = nn_grad_params(p, u)
            assert np.linalg.norm(an - fd) <= 1e-5 * max(1e-8, np.linalg.norm(fd))

    def test_parameter_count(self):
        assert n_params("nn", 2, 32) == 129
        assert init_params("nn", 2, 32, rng=0).to_vector().size == 129

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            nn_eval(random_nn(np.random.default_rng(0), 2, 3), [1.0])

    def test_no_nan_far_away(self, rng):
        for p in (random_nn(rng, 2, 8), random_qp(rng, 2)):
            vals = p.value(rng.normal(scale=100, size=(10_000, 2)))
            assert np.all(np.isfinite(vals))


class TestInit:
    def test_axis_lines_m2(self):
        bs = [tuple(init_params("qp", 2, strategy="axis-lines", rng=0, index=k).b) for k in range(4)]
        assert (1.0, 0.0) in bs and (0.0, 1.0) in bs
        assert (-1.0, 0.0) in bs and (0.0, -1.0) in bs
        p = init_params("qp", 2, strategy="axis-lines", rng=0, index=0)
        assert np.all(p.A == 0) and p.c == 0

    def test_later_axis_lines_unit_direction(self):
        p = init_params("qp", 3, strategy="axis-lines", rng=5, index=9)
        assert np.linalg.norm(p.b) == pytest.approx(1.0)
        assert p.c == 0.0

    def test_same_seed_same_params(self):
        for fam, strat in (("qp", "random"), ("nn", "axis-lines")):
            a = init_params(fam, 2, 8, strat, rng=42)
            b = init_params(fam, 2, 8, strat, rng=42)
            np.testing.assert_array_equal(a.to_vector(), b.to_vector())

    def test_nn_zero_output_bias(self):
        p = init_params("nn", 2, rng=1)
        assert p.b2 == 0.0
        assert abs(p.value([0.0, 0.0]) - p.w2 @ np.tanh(p.b1)) < 1e-15

    def test_nn_scales(self):
        p = init_params("nn", 4, 2000, rng=3)
        assert np.std(p.W1) == pytest.approx(0.5, rel=0.05)
        assert np.std(p.w2) == pytest.approx(1 / math.sqrt(2000), rel=0.05)


class TestSerialization:
    @pytest.mark.parametrize("family", ["qp", "nn"])
    def test_dict_round_trip(self, family, rng):
        p = random_qp(rng, 2) if family == "qp" else random_nn(rng, 2, 5)
        q = params_from_dict(p.to_dict())
        np.testing.assert_array_equal(p.to_vector(), q.to_vector())

    def test_from_vector_dispatch(self):
        p = params_from_vector("nn", np.zeros(n_params("nn", 2, 3)), 2, 3)
        assert isinstance(p, NNParams) and p.hidden == 3

    def test_corrupt(self):
        with pytest.raises(CorruptResultFile):
            params_from_dict({"family": "qp", "dim": 2})
        with pytest.raises(CorruptResultFile):
            params_from_dict({"family": "spline", "dim": 2})
