"""The five training algorithms and their prediction paths.

* ``uniform``  - one SVM on the entrywise mean of the kernel dictionary.
* ``lmkl``     - alternating optimization: SVM solve on the separably gated
  Gram, then one gradient step on the softmax-linear gating parameters.
* ``swmkl``    - per-kernel SVMs, gating regressors smoothing their success
  indicators, and a final SVM on the pairwise-normalized gated kernel.
* ``ldmkl``    - the swmkl first stage, softmax-normalized gates, per-kernel
  retraining on the points each kernel gates above 1/m, and a gated tanh vote.
* ``clmkl``    - kernel k-means soft clusters, then alternating SVM solves
  and exponentiated-gradient updates of per-cluster kernel weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from lokal.clustering import kernel_kmeans, soften, soften_cross
from lokal.data import Dataset
from lokal.gating import (
    ClusterGating,
    ConstantGating,
    GatingModel,
    RegressorGating,
    SoftmaxLinearGating,
    eta_matrix,
    softmax_rows,
)
from lokal.kernels import (
    KernelSpec,
    cluster_gated_cross,
    cluster_gated_gram,
    combined_cross_separable,
    combined_cross_swmkl,
    combined_gram_separable,
    combined_gram_swmkl,
    gram,
    gram_cross,
    kernel_diag,
    median_heuristic_gamma,
    uniform_gram,
)
from lokal.solver import (
    SvmModel,
    SvmParams,
    SvrModel,
    predict_decision,
    predict_gate,
    train_svc,
    train_svr,
)

METHODS = ("uniform", "lmkl", "swmkl", "ldmkl", "clmkl")


@dataclass(frozen=True)
class LmklParams:
    learning_rate: float = 0.01
    outer_iters: int = 100
    grad_tol: float = 1e-5

    def __post_init__(self):
        if self.learning_rate <= 0 or self.outer_iters < 1 or self.grad_tol <= 0:
            raise ValueError("lmkl rates and iteration counts must be positive")


@dataclass(frozen=True)
class ClmklParams:
    clusters: int = 3
    beta_step: float = 0.5
    outer_iters: int = 50
    grad_tol: float = 1e-5
    tau: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.clusters < 1 or self.beta_step <= 0 or self.outer_iters < 1:
            raise ValueError("clmkl parameters must be positive")


@dataclass(frozen=True)
class TrainConfig:
    svm: SvmParams = SvmParams()
    svr: SvmParams = SvmParams()
    svr_gamma: float | None = None  # None: median pairwise-distance heuristic
    lmkl: LmklParams = LmklParams()
    clmkl: ClmklParams = ClmklParams()


@dataclass(eq=False)
class LklModel:
    """A trained localized classifier.

    ``models`` holds per-kernel component models (LD-MKL's retrained
    classifiers); combined-kernel methods instead populate ``combined``.
    ``train_gates`` are the gate values at training points: clamped regressor
    outputs for swmkl, their row softmax for ldmkl.
    """

    method: str
    kernels: tuple[KernelSpec, ...]
    train_features: np.ndarray
    train_labels: np.ndarray
    models: tuple[SvmModel, ...] = ()
    combined: SvmModel | None = None
    gating: GatingModel | None = None
    gate_models: tuple[SvrModel, ...] = ()
    svr_kernel: KernelSpec | None = None
    train_gates: np.ndarray | None = None
    train_eta: np.ndarray | None = None
    train_c: np.ndarray | None = None
    stage1: tuple[SvmModel, ...] = ()
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_train(self) -> int:
        return self.train_features.shape[0]


def _resolved(kernels: Sequence[KernelSpec]) -> tuple[KernelSpec, ...]:
    specs = tuple(kernels)
    if not specs:
        raise ValueError("need at least one kernel")
    for s in specs:
        if s.needs_gamma:
            raise ValueError("unresolved gauss:grid kernel; run gamma selection first")
    return specs


def _grams(specs: Sequence[KernelSpec], X: np.ndarray) -> list[np.ndarray]:
    return [gram(s, X) for s in specs]


# ---------------------------------------------------------------------------
# uniform


def train_uniform(train: Dataset, kernels: Sequence[KernelSpec], cfg: TrainConfig) -> LklModel:
    specs = _resolved(kernels)
    grams = _grams(specs, train.features)
    model = train_svc(uniform_gram(grams), train.labels, cfg.svm)
    m = len(specs)
    return LklModel(
        method="uniform",
        kernels=specs,
        train_features=train.features,
        train_labels=train.labels,
        combined=model,
        gating=ConstantGating(np.full(m, 1.0 / m)),
        converged=model.converged,
    )


# ---------------------------------------------------------------------------
# lmkl


def lmkl_objective_grad(
    grams: Sequence[np.ndarray],
    X: np.ndarray,
    dual_coef: np.ndarray,
    V: np.ndarray,
    v0: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Fixed-coefficient dual objective J(V, v0) and its gating gradient.

    J = sum_j alpha_j - 1/2 sum_i (s*eta_i)' K_i (s*eta_i) with s = alpha*y
    held fixed; the gradient flows through the row softmax only.
    """
    eta = softmax_rows(X @ V + v0)
    s = dual_coef
    n, m = eta.shape
    J = float(np.abs(s).sum())
    D = np.empty((n, m))
    for i, K in enumerate(grams):
        u = s * eta[:, i]
        a = K @ u
        J -= 0.5 * float(u @ a)
        D[:, i] = -(s * a)
    inner = (D * eta).sum(axis=1, keepdims=True)
    g_logits = eta * (D - inner)
    return J, X.T @ g_logits, g_logits.sum(axis=0)


def train_lmkl(train: Dataset, kernels: Sequence[KernelSpec], cfg: TrainConfig) -> LklModel:
    specs = _resolved(kernels)
    X, y = train.features, train.labels
    grams = _grams(specs, X)
    m = len(specs)
    V = np.zeros((train.d, m))
    v0 = np.zeros(m)

    trace: list[float] = []
    outer_converged = False
    model = None
    eta = None
    for t in range(1, cfg.lmkl.outer_iters + 1):
        eta = softmax_rows(X @ V + v0)
        model = train_svc(combined_gram_separable(grams, eta), y, cfg.svm)
        trace.append(model.dual_objective)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < cfg.lmkl.grad_tol:
            outer_converged = True
            break
        if t == cfg.lmkl.outer_iters:
            break
        _, gV, gv0 = lmkl_objective_grad(grams, X, model.dual_coef, V, v0)
        lr = cfg.lmkl.learning_rate / math.sqrt(t)
        V = V - lr * gV
        v0 = v0 - lr * gv0

    return LklModel(
        method="lmkl",
        kernels=specs,
        train_features=X,
        train_labels=y,
        combined=model,
        gating=SoftmaxLinearGating(V, v0),
        train_eta=eta,
        converged=model.converged and outer_converged,
        diagnostics={"dual_objective_trace": trace, "outer_converged": outer_converged},
    )


# ---------------------------------------------------------------------------
# swmkl / ldmkl shared first stage


def _correctness_targets(model: SvmModel, gram_i: np.ndarray, y: np.ndarray) -> np.ndarray:
    preds = np.where(predict_decision(model, gram_i) >= 0.0, 1.0, -1.0)
    return (preds == y).astype(np.float64)


def _stage1(
    train: Dataset,
    specs: tuple[KernelSpec, ...],
    grams: list[np.ndarray],
    cfg: TrainConfig,
) -> tuple[tuple[SvmModel, ...], tuple[SvrModel, ...], KernelSpec, np.ndarray]:
    """Per-kernel classifiers, gating regressors on their success indicators,
    and the clamped gate values at the training points."""
    X, y = train.features, train.labels
    classifiers = tuple(train_svc(K, y, cfg.svm) for K in grams)
    svr_gamma = cfg.svr_gamma if cfg.svr_gamma is not None else median_heuristic_gamma(X)
    svr_spec = KernelSpec("gauss", gamma=svr_gamma)
    K_svr = gram(svr_spec, X)
    regressors = []
    gates = np.empty((train.n, len(specs)))
    for i, K in enumerate(grams):
        delta = _correctness_targets(classifiers[i], K, y)
        reg = train_svr(K_svr, delta, cfg.svr)
        regressors.append(reg)
        gates[:, i] = predict_gate(reg, K_svr)
    return classifiers, tuple(regressors), svr_spec, gates


def train_swmkl(train: Dataset, kernels: Sequence[KernelSpec], cfg: TrainConfig) -> LklModel:
    specs = _resolved(kernels)
    grams = _grams(specs, train.features)
    stage1, regressors, svr_spec, gates = _stage1(train, specs, grams, cfg)
    final = train_svc(combined_gram_swmkl(grams, gates), train.labels, cfg.svm)
    converged = (
        final.converged
        and all(f.converged for f in stage1)
        and all(r.converged for r in regressors)
    )
    return LklModel(
        method="swmkl",
        kernels=specs,
        train_features=train.features,
        train_labels=train.labels,
        combined=final,
        gate_models=regressors,
        svr_kernel=svr_spec,
        train_gates=gates,
        stage1=stage1,
        converged=converged,
        diagnostics={"svr_gamma": svr_spec.gamma},
    )


def train_ldmkl(train: Dataset, kernels: Sequence[KernelSpec], cfg: TrainConfig) -> LklModel:
    specs = _resolved(kernels)
    X, y = train.features, train.labels
    grams = _grams(specs, X)
    stage1, regressors, svr_spec, raw_gates = _stage1(train, specs, grams, cfg)
    m = len(specs)
    gates = softmax_rows(raw_gates)

    threshold = 1.0 / m
    models = []
    kept_stage1 = []
    for i in range(m):
        sub = np.flatnonzero(gates[:, i] >= threshold)
        if sub.size == 0 or np.all(y[sub] == y[sub[0]]):
            # nothing usable to retrain on: keep the stage-1 model
            models.append(replace(stage1[i], train_ref=np.arange(train.n)))
            kept_stage1.append(i)
            continue
        sub_model = train_svc(grams[i][np.ix_(sub, sub)], y[sub], cfg.svm)
        models.append(replace(sub_model, train_ref=sub))

    converged = (
        all(f.converged for f in models)
        and all(f.converged for f in stage1)
        and all(r.converged for r in regressors)
    )
    return LklModel(
        method="ldmkl",
        kernels=specs,
        train_features=X,
        train_labels=y,
        models=tuple(models),
        gating=RegressorGating(regressors, svr_spec, X),
        gate_models=regressors,
        svr_kernel=svr_spec,
        train_gates=gates,
        stage1=stage1,
        converged=converged,
        diagnostics={"svr_gamma": svr_spec.gamma, "kept_stage1": kept_stage1},
    )


# ---------------------------------------------------------------------------
# clmkl


def train_clmkl(train: Dataset, kernels: Sequence[KernelSpec], cfg: TrainConfig) -> LklModel:
    specs = _resolved(kernels)
    X, y = train.features, train.labels
    grams = _grams(specs, X)
    m = len(specs)
    ell = cfg.clmkl.clusters

    K_uni = uniform_gram(grams)
    labels = kernel_kmeans(K_uni, ell, seed=cfg.clmkl.seed)
    c = soften(K_uni, labels, cfg.clmkl.tau).c
    beta = np.full((m, ell), 1.0 / m)

    trace: list[float] = []
    beta_updates: list[tuple[float, float]] = []
    outer_converged = False
    model = None
    for t in range(1, cfg.clmkl.outer_iters + 1):
        model = train_svc(cluster_gated_gram(grams, beta, c), y, cfg.svm)
        trace.append(model.dual_objective)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < cfg.clmkl.grad_tol:
            outer_converged = True
            break
        if t == cfg.clmkl.outer_iters:
            break
        s = model.dual_coef
        sum_alpha = float(np.abs(s).sum())
        q = np.empty((m, ell))
        for i, K in enumerate(grams):
            for r in range(ell):
                u = s * c[:, r]
                q[i, r] = float(u @ (K @ u))
        grad = -0.5 * q
        j_before = sum_alpha + float((beta * grad).sum())
        # exponentiated-gradient ascent, renormalized onto each cluster simplex
        w = beta * np.exp(cfg.clmkl.beta_step * (grad - grad.max(axis=0, keepdims=True)))
        beta = w / w.sum(axis=0, keepdims=True)
        j_after = sum_alpha + float((beta * grad).sum())
        beta_updates.append((j_before, j_after))

    return LklModel(
        method="clmkl",
        kernels=specs,
        train_features=X,
        train_labels=y,
        combined=model,
        gating=ClusterGating(beta, labels, cfg.clmkl.tau),
        train_c=c,
        converged=model.converged and outer_converged,
        diagnostics={
            "dual_objective_trace": trace,
            "beta_update_objectives": beta_updates,
            "outer_converged": outer_converged,
        },
    )


# ---------------------------------------------------------------------------
# prediction


def _swmkl_test_gates(model: LklModel, X_test: np.ndarray) -> np.ndarray:
    cross = gram_cross(model.svr_kernel, model.train_features, X_test)
    return np.column_stack([predict_gate(r, cross) for r in model.gate_models])


def decision_values(model: LklModel, X_test: np.ndarray) -> np.ndarray:
    """Raw decision values at the given points (the gated vote for ldmkl)."""
    X_test = np.asarray(X_test, dtype=np.float64)
    if X_test.ndim != 2 or X_test.shape[1] != model.train_features.shape[1]:
        raise ValueError(
            f"test features must be (*, {model.train_features.shape[1]}), got {X_test.shape}"
        )
    crosses = [gram_cross(spec, model.train_features, X_test) for spec in model.kernels]

    if model.method == "uniform":
        return predict_decision(model.combined, sum(crosses) / len(crosses))

    if model.method == "lmkl":
        eta_z = eta_matrix(model.gating, X_test)
        cross = combined_cross_separable(crosses, model.train_eta, eta_z)
        return predict_decision(model.combined, cross)

    if model.method == "swmkl":
        g_z = _swmkl_test_gates(model, X_test)
        cross = combined_cross_swmkl(crosses, model.train_gates, g_z)
        return predict_decision(model.combined, cross)

    if model.method == "clmkl":
        gating: ClusterGating = model.gating
        K_uni_train = uniform_gram([gram(s, model.train_features) for s in model.kernels])
        cross_uni = sum(crosses) / len(crosses)
        diag_z = np.mean([kernel_diag(s, X_test) for s in model.kernels], axis=0)
        c_z = soften_cross(diag_z, cross_uni, K_uni_train, gating.labels, gating.tau).c
        cross = cluster_gated_cross(crosses, gating.beta, model.train_c, c_z)
        return predict_decision(model.combined, cross)

    if model.method == "ldmkl":
        gates_z = eta_matrix(model.gating, X_test)
        vote = np.zeros(X_test.shape[0])
        for i, comp in enumerate(model.models):
            sub = comp.train_ref
            gates_i = model.train_gates[sub, i]
            # the intercept is weighted by the subset's mean gate so the
            # gated sum keeps the trained decision geometry (and reduces to
            # the plain SVM decision when m = 1, where every gate is 1)
            fbar = (comp.dual_coef * gates_i) @ crosses[i][sub] + gates_i.mean() * comp.bias
            vote += gates_z[:, i] * np.tanh(fbar)
        return vote

    raise ValueError(f"unknown method {model.method!r}")


def predict_ldmkl(model: LklModel, X_test: np.ndarray) -> np.ndarray:
    """Sign of the gated tanh vote; ties break to +1."""
    if model.method != "ldmkl":
        raise ValueError("predict_ldmkl requires an ldmkl model")
    return np.where(decision_values(model, X_test) >= 0.0, 1.0, -1.0)


def predict_generic(model: LklModel, X_test: np.ndarray) -> np.ndarray:
    """Sign of the combined-model decision values; ties break to +1."""
    if model.method == "ldmkl":
        raise ValueError("use predict_ldmkl for ldmkl models")
    return np.where(decision_values(model, X_test) >= 0.0, 1.0, -1.0)


def predict(model: LklModel, X_test: np.ndarray) -> np.ndarray:
    if model.method == "ldmkl":
        return predict_ldmkl(model, X_test)
    return predict_generic(model, X_test)


def support_fraction(model: LklModel) -> float:
    """Fraction of training points that are support points of any component."""
    if model.models:
        union: set[int] = set()
        for comp in model.models:
            ref = comp.train_ref if comp.train_ref is not None else np.arange(model.n_train)
            union.update(int(j) for j in np.asarray(ref)[comp.support_indices])
        return len(union) / model.n_train
    if model.combined is None:
        raise ValueError("model has no trained components")
    return model.combined.support_indices.size / model.n_train


TRAINERS = {
    "uniform": train_uniform,
    "lmkl": train_lmkl,
    "swmkl": train_swmkl,
    "ldmkl": train_ldmkl,
    "clmkl": train_clmkl,
}


def train(
    method: str, train_ds: Dataset, kernels: Sequence[KernelSpec], cfg: TrainConfig | None = None
) -> LklModel:
    if method not in TRAINERS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return TRAINERS[method](train_ds, kernels, cfg or TrainConfig())
