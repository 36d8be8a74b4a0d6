import numpy as np
import pytest

from conftest import random_dataset
from oracles import fd_gradient
from lokal.data import Dataset
from lokal.gating import eta_matrix
from lokal.kernels import KernelSpec, combined_gram_separable, gram, gram_cross, parse_kernel_spec
from lokal.lkl import (
    ClmklParams,
    LmklParams,
    TrainConfig,
    decision_values,
    lmkl_objective_grad,
    predict,
    predict_generic,
    predict_ldmkl,
    support_fraction,
    train,
    train_ldmkl,
    train_lmkl,
    train_swmkl,
    train_uniform,
)
from lokal.solver import SvmModel, SvmParams, predict_decision, train_svc

SPECS2 = (parse_kernel_spec("poly:2"), parse_kernel_spec("gauss:1.0"))


def plain_svm_labels(spec, train_ds, X_test, params=SvmParams()):
    model = train_svc(gram(spec, train_ds.features), train_ds.labels, params)
    vals = predict_decision(model, gram_cross(spec, train_ds.features, X_test))
    return np.where(vals >= 0.0, 1.0, -1.0), vals


class TestUniform:
    def test_single_kernel_equals_plain_svm(self, rng):
        ds = random_dataset(rng, 30)
        Xte = rng.normal(size=(12, 2))
        model = train_uniform(ds, [SPECS2[1]], TrainConfig())
        expected, _ = plain_svm_labels(SPECS2[1], ds, Xte)
        np.testing.assert_array_equal(predict(model, Xte), expected)

    def test_two_identical_kernels_equal_single(self, rng):
        ds = random_dataset(rng, 25)
        Xte = rng.normal(size=(10, 2))
        spec = SPECS2[1]
        one = train_uniform(ds, [spec], TrainConfig())
        two = train_uniform(ds, [spec, spec], TrainConfig())
        np.testing.assert_allclose(
            decision_values(one, Xte), decision_values(two, Xte), atol=1e-9
        )


class TestLmklGradient:
    def make_instance(self, rng, n=12, m=2, d=3):
        X = rng.normal(size=(n, d))
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        specs = [KernelSpec("linear"), KernelSpec("gauss", gamma=0.7), KernelSpec("poly", degree=2)][:m]
        grams = [gram(s, X) for s in specs]
        alpha = rng.uniform(0.0, 1.0, n)
        s = alpha * y
        V = rng.normal(size=(d, m)) * 0.5
        v0 = rng.normal(size=m) * 0.5
        return grams, X, s, V, v0

    def test_matches_finite_differences(self, rng):
        for _ in range(3):
            grams, X, s, V, v0 = self.make_instance(rng)
            _, gV, gv0 = lmkl_objective_grad(grams, X, s, V, v0)

            def J(Vm, v0m):
                return lmkl_objective_grad(grams, X, s, Vm, v0m)[0]

            fdV, fdv0 = fd_gradient(J, [V, v0])
            denom = max(np.linalg.norm(np.concatenate([fdV.ravel(), fdv0])), 1e-8)
            err = np.linalg.norm(np.concatenate([(gV - fdV).ravel(), gv0 - fdv0]))
            assert err / denom < 1e-4


class TestLmkl:
    def test_single_outer_iter_is_uniform_gated(self, rng):
        ds = random_dataset(rng, 24)
        Xte = rng.normal(size=(10, 2))
        cfg = TrainConfig(lmkl=LmklParams(outer_iters=1))
        model = train_lmkl(ds, SPECS2, cfg)
        # V = 0 initialization: uniform eta, so the model equals one SVM on
        # the separably gated gram with eta = 1/m
        m = len(SPECS2)
        grams = [gram(s, ds.features) for s in SPECS2]
        eta = np.full((ds.n, m), 1.0 / m)
        ref = train_svc(combined_gram_separable(grams, eta), ds.labels, cfg.svm)
        crosses = [gram_cross(s, ds.features, Xte) for s in SPECS2]
        ref_vals = predict_decision(
            ref, sum((eta[:, i][:, None] * crosses[i]) * (1.0 / m) for i in range(m))
        )
        np.testing.assert_allclose(decision_values(model, Xte), ref_vals, atol=1e-9)

    def test_objective_trace_recorded(self, rng):
        ds = random_dataset(rng, 20)
        model = train_lmkl(ds, SPECS2, TrainConfig(lmkl=LmklParams(outer_iters=5)))
        trace = model.diagnostics["dual_objective_trace"]
        assert 1 <= len(trace) <= 5
        assert all(np.isfinite(t) for t in trace)


class TestSwmkl:
    def test_perfect_kernel_gets_all_one_targets(self, rng):
        from lokal.lkl import _correctness_targets

        ds = random_dataset(rng, 20)
        G = gram(KernelSpec("gauss", gamma=5.0), ds.features)
        model = train_svc(G, ds.labels, SvmParams(C=100.0))
        delta = _correctness_targets(model, G, ds.labels)
        assert set(delta.tolist()) <= {0.0, 1.0}
        assert delta.mean() == 1.0  # sharp kernel with large C fits training data

    def test_single_kernel_final_close_to_stage1(self, rng):
        ds = random_dataset(rng, 30)
        Xte = rng.normal(size=(15, 2))
        model = train_swmkl(ds, [SPECS2[1]], TrainConfig())
        expected, vals = plain_svm_labels(SPECS2[1], ds, Xte)
        got = predict(model, Xte)
        clear = np.abs(vals) > 1e-6
        np.testing.assert_array_equal(got[clear], expected[clear])

    def test_gates_recorded_and_clamped(self, rng):
        ds = random_dataset(rng, 24)
        model = train_swmkl(ds, SPECS2, TrainConfig())
        assert model.train_gates.shape == (24, 2)
        assert model.train_gates.min() >= 1e-6
        assert model.train_gates.max() <= 1.0
        assert model.diagnostics["svr_gamma"] > 0


class TestLdmkl:
    def test_vote_bounded_by_one(self, rng):
        ds = random_dataset(rng, 30)
        model = train_ldmkl(ds, SPECS2, TrainConfig())
        vals = decision_values(model, rng.normal(size=(40, 2)))
        assert np.abs(vals).max() <= 1.0 + 1e-12

    def test_matches_naive_vote(self, rng):
        """Eq-by-eq loop evaluation of the gated tanh vote."""
        ds = random_dataset(rng, 26)
        Xte = rng.normal(size=(9, 2))
        model = train_ldmkl(ds, SPECS2, TrainConfig())
        gates_te = eta_matrix(model.gating, Xte)
        expect = np.zeros(9)
        for t in range(9):
            vote = 0.0
            for i, comp in enumerate(model.models):
                sub = comp.train_ref
                fbar = 0.0
                for pos, j in enumerate(sub):
                    k_val = gram_cross(
                        model.kernels[i], ds.features[j : j + 1], Xte[t : t + 1]
                    )[0, 0]
                    fbar += comp.dual_coef[pos] * model.train_gates[j, i] * k_val
                fbar += model.train_gates[sub, i].mean() * comp.bias
                vote += gates_te[t, i] * np.tanh(fbar)
            expect[t] = vote
        np.testing.assert_allclose(decision_values(model, Xte), expect, atol=1e-9)

    def test_single_kernel_reduces_to_plain_svm(self, rng):
        ds = random_dataset(rng, 28)
        Xte = rng.normal(size=(14, 2))
        model = train_ldmkl(ds, [SPECS2[1]], TrainConfig())
        assert model.models[0].train_ref.size == ds.n  # inclusive threshold keeps all
        expected, _ = plain_svm_labels(SPECS2[1], ds, Xte)
        np.testing.assert_array_equal(predict_ldmkl(model, Xte), expected)

    def test_one_class_subset_keeps_stage1(self, rng):
        # a kernel whose gate never reaches 1/m falls back to its stage-1 model
        ds = random_dataset(rng, 20)
        model = train_ldmkl(ds, SPECS2, TrainConfig())
        for flagged in model.diagnostics["kept_stage1"]:
            assert model.models[flagged].train_ref.size == ds.n


class TestClmkl:
    def test_beta_on_simplex_after_every_update(self, rng):
        ds = random_dataset(rng, 20)
        cfg = TrainConfig(clmkl=ClmklParams(clusters=2, outer_iters=6))
        model = train(
            "clmkl", ds, SPECS2, cfg
        )
        beta = model.gating.beta
        assert beta.min() >= 0.0
        np.testing.assert_allclose(beta.sum(axis=0), np.ones(2), atol=1e-12)

    def test_dual_objective_nondecreasing_across_beta_updates(self, rng):
        X = rng.normal(size=(16, 2))
        y = np.where(rng.random(16) < 0.5, 1.0, -1.0)
        y[:2] = (1.0, -1.0)
        ds = Dataset(X, y)
        cfg = TrainConfig(clmkl=ClmklParams(clusters=3, outer_iters=8))
        model = train("clmkl", ds, SPECS2, cfg)
        for before, after in model.diagnostics["beta_update_objectives"]:
            assert after >= before - 1e-12

    def test_single_cluster_single_kernel_equals_plain_svm(self, rng):
        ds = random_dataset(rng, 22)
        Xte = rng.normal(size=(10, 2))
        cfg = TrainConfig(clmkl=ClmklParams(clusters=1))
        model = train("clmkl", ds, [SPECS2[1]], cfg)
        expected, _ = plain_svm_labels(SPECS2[1], ds, Xte)
        np.testing.assert_array_equal(predict(model, Xte), expected)

    def test_single_cluster_constant_gating(self, rng):
        ds = random_dataset(rng, 18)
        cfg = TrainConfig(clmkl=ClmklParams(clusters=1, outer_iters=4))
        model = train("clmkl", ds, SPECS2, cfg)
        assert model.train_c.shape == (18, 1)
        np.testing.assert_array_equal(model.train_c, np.ones((18, 1)))


class TestGenericPredict:
    def test_ties_break_positive(self):
        model_stub = SvmModel(np.zeros(3), 0.0, np.array([], dtype=int), True, 0, 0.0)
        from lokal.lkl import LklModel

        m = LklModel(
            method="uniform",
            kernels=(KernelSpec("linear"),),
            train_features=np.zeros((3, 2)),
            train_labels=np.array([1.0, -1.0, 1.0]),
            combined=model_stub,
        )
        np.testing.assert_array_equal(predict_generic(m, np.zeros((4, 2))), np.ones(4))

    def test_feature_width_checked(self, rng):
        ds = random_dataset(rng, 15)
        model = train_uniform(ds, SPECS2, TrainConfig())
        with pytest.raises(ValueError):
            predict(model, rng.normal(size=(4, 5)))


class TestSupportFraction:
    def test_zero_for_empty_model(self):
        from lokal.lkl import LklModel

        m = LklModel(
            method="uniform",
            kernels=(KernelSpec("linear"),),
            train_features=np.zeros((10, 2)),
            train_labels=np.ones(10),
            combined=SvmModel(np.zeros(10), 0.0, np.array([], dtype=int), True, 0, 0.0),
        )
        assert support_fraction(m) == 0.0

    def test_union_arithmetic(self):
        from lokal.lkl import LklModel

        comp_a = SvmModel(np.ones(3), 0.0, np.arange(3), True, 0, 0.0, train_ref=np.array([0, 1, 2]))
        comp_b = SvmModel(np.ones(4), 0.0, np.arange(4), True, 0, 0.0, train_ref=np.array([10, 11, 12, 13]))
        m = LklModel(
            method="ldmkl",
            kernels=(KernelSpec("linear"), KernelSpec("linear")),
            train_features=np.zeros((100, 2)),
            train_labels=np.ones(100),
            models=(comp_a, comp_b),
        )
        assert support_fraction(m) == pytest.approx(0.07)


def test_trainers_do_not_mutate_training_data(rng):
    ds = random_dataset(rng, 24)
    before_X = ds.features.copy()
    before_y = ds.labels.copy()
    cfg = TrainConfig(clmkl=ClmklParams(clusters=2, outer_iters=3), lmkl=LmklParams(outer_iters=3))
    for method in ("uniform", "lmkl", "swmkl", "ldmkl", "clmkl"):
        train(method, ds, SPECS2, cfg)
    np.testing.assert_array_equal(ds.features, before_X)
    np.testing.assert_array_equal(ds.labels, before_y)


def test_unknown_method_rejected(rng):
    with pytest.raises(ValueError, match="unknown method"):
        train("samkl", random_dataset(rng, 10), SPECS2, TrainConfig())


def test_unresolved_grid_kernel_rejected(rng):
    with pytest.raises(ValueError, match="gamma"):
        train("uniform", random_dataset(rng, 10), [parse_kernel_spec("gauss:grid")], TrainConfig())
