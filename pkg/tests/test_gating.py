import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lokal.gating import (
    ClusterGating,
    ConstantGating,
    RegressorGating,
    SoftmaxLinearGating,
    eta_matrix,
    eval_gating,
    softmax,
)
from lokal.kernels import KernelSpec, gram
from lokal.solver import SvmParams, train_svr


class TestSoftmax:
    def test_symmetry(self):
        np.testing.assert_allclose(softmax(np.zeros(2)), [0.5, 0.5])

    def test_analytic(self):
        np.testing.assert_allclose(softmax(np.log([1.0, 3.0])), [0.25, 0.75], atol=1e-12)

    def test_no_overflow(self):
        out = softmax(np.array([1000.0, 0.0]))
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(1.0)

    @settings(max_examples=60, deadline=None, derandomize=True)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=8), st.floats(-30, 30))
    def test_properties(self, vals, shift):
        v = np.array(vals)
        out = softmax(v)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(out > 0.0)
        np.testing.assert_allclose(out, softmax(v + shift), atol=1e-12)


class TestEvalGating:
    def test_softmax_linear_zero_params_uniform(self, rng):
        model = SoftmaxLinearGating(np.zeros((3, 4)), np.zeros(4))
        for _ in range(3):
            out = eval_gating(model, rng.normal(size=3))
            np.testing.assert_allclose(out, np.full(4, 0.25), atol=1e-12)

    def test_constant_ignores_input(self, rng):
        model = ConstantGating(np.array([0.3, 0.7]))
        np.testing.assert_array_equal(eval_gating(model, rng.normal(size=5)), [0.3, 0.7])

    def test_constant_validation(self):
        with pytest.raises(ValueError):
            ConstantGating(np.array([0.5, 0.4]))

    def test_single_regressor_always_one(self, rng):
        X = rng.normal(size=(10, 2))
        K = gram(KernelSpec("gauss", gamma=1.0), X)
        reg = train_svr(K, rng.uniform(0, 1, 10), SvmParams())
        model = RegressorGating((reg,), KernelSpec("gauss", gamma=1.0), X)
        out = eval_gating(model, rng.normal(size=2))
        np.testing.assert_allclose(out, [1.0])

    def test_cluster_variant_refuses_pointwise(self):
        model = ClusterGating(np.ones((2, 1)), np.zeros(4, dtype=int), 1.0)
        with pytest.raises(ValueError, match="pairwise"):
            eval_gating(model, np.zeros(2))
        with pytest.raises(ValueError, match="pairwise"):
            eta_matrix(model, np.zeros((3, 2)))

    def test_permutation_equivariance(self, rng):
        V = rng.normal(size=(3, 4))
        v0 = rng.normal(size=4)
        x = rng.normal(size=3)
        perm = np.array([2, 0, 3, 1])
        a = eval_gating(SoftmaxLinearGating(V, v0), x)[perm]
        b = eval_gating(SoftmaxLinearGating(V[:, perm], v0[perm]), x)
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestEtaMatrix:
    def test_rows_sum_to_one(self, rng):
        model = SoftmaxLinearGating(rng.normal(size=(2, 3)), rng.normal(size=3))
        eta = eta_matrix(model, rng.normal(size=(20, 2)))
        np.testing.assert_allclose(eta.sum(axis=1), np.ones(20), atol=1e-9)
        assert eta.min() >= 0.0

    def test_matches_pointwise_loop(self, rng):
        model = SoftmaxLinearGating(rng.normal(size=(2, 3)), rng.normal(size=3))
        X = rng.normal(size=(8, 2))
        eta = eta_matrix(model, X)
        for j in range(8):
            np.testing.assert_allclose(eta[j], eval_gating(model, X[j]), atol=1e-12)

    def test_regressor_rows_sum_to_one(self, rng):
        X = rng.normal(size=(12, 2))
        K = gram(KernelSpec("gauss", gamma=0.8), X)
        regs = tuple(
            train_svr(K, rng.uniform(0, 1, 12), SvmParams(epsilon=0.1)) for _ in range(3)
        )
        model = RegressorGating(regs, KernelSpec("gauss", gamma=0.8), X)
        eta = eta_matrix(model, rng.normal(size=(6, 2)))
        np.testing.assert_allclose(eta.sum(axis=1), np.ones(6), atol=1e-9)
