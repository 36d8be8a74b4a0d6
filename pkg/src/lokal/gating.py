"""Per-point kernel-weight (gating) models behind one evaluation interface.

Four variants: constant weights (the global-MKL view), a softmax of a linear
map of the features, softmax-normalized gating regressors, and cluster-based
pairwise gating. The cluster variant has no per-point weight vector; it is
evaluated pairwise at the Gram level (kernels.cluster_gated_gram) and
eval_gating refuses it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lokal.kernels import KernelSpec, gram_cross
from lokal.solver import SvrModel, predict_gate


def softmax(v: np.ndarray) -> np.ndarray:
    """Stable softmax: exp(v_i - max v) / sum, renormalized to unit sum."""
    v = np.asarray(v, dtype=np.float64)
    e = np.exp(v - v.max())
    return e / e.sum()


def softmax_rows(V: np.ndarray) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    e = np.exp(V - V.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class ConstantGating:
    """Fixed per-kernel weights mu >= 0 summing to 1; at the Gram level the
    combination is sum_i mu_i K_i (separable weights sqrt(mu_i))."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if np.any(mu < 0.0) or abs(mu.sum() - 1.0) > 1e-9:
            raise ValueError("mu must be nonnegative and sum to 1")
        object.__setattr__(self, "mu", mu)

    @property
    def n_kernels(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True, eq=False)
class SoftmaxLinearGating:
    """eta(x) = softmax(x^T V + v0), the learned linear gating."""

    V: np.ndarray
    v0: np.ndarray

    @property
    def n_kernels(self) -> int:
        return self.V.shape[1]


@dataclass(frozen=True, eq=False)
class RegressorGating:
    """Softmax over m clamped gating-regressor outputs at a point."""

    models: tuple[SvrModel, ...]
    kernel: KernelSpec
    train_features: np.ndarray

    @property
    def n_kernels(self) -> int:
        return len(self.models)

    def raw_gates(self, X: np.ndarray) -> np.ndarray:
        """Clamped regressor outputs, one column per kernel, before softmax."""
        cross = gram_cross(self.kernel, self.train_features, np.asarray(X, dtype=np.float64))
        return np.column_stack([predict_gate(m, cross) for m in self.models])


@dataclass(frozen=True, eq=False)
class ClusterGating:
    """Per-cluster kernel weights beta (m x ell) over precomputed soft
    assignments; pairwise only."""

    beta: np.ndarray
    labels: np.ndarray
    tau: float

    @property
    def n_kernels(self) -> int:
        return self.beta.shape[0]


GatingModel = ConstantGating | SoftmaxLinearGating | RegressorGating | ClusterGating


def eval_gating(model: GatingModel, x: np.ndarray) -> np.ndarray:
    """Per-kernel weight vector at a single point: length m, nonnegative,
    unit sum."""
    if isinstance(model, ClusterGating):
        raise ValueError("pairwise gating; evaluate at Gram level via cluster_gated_gram")
    return eta_matrix(model, np.asarray(x, dtype=np.float64)[None, :])[0]


def eta_matrix(model: GatingModel, X: np.ndarray) -> np.ndarray:
    """Stacked gating rows for every row of X."""
    X = np.asarray(X, dtype=np.float64)
    if isinstance(model, ConstantGating):
        return np.tile(model.mu, (X.shape[0], 1))
    if isinstance(model, SoftmaxLinearGating):
        return softmax_rows(X @ model.V + model.v0)
    if isinstance(model, RegressorGating):
        return softmax_rows(model.raw_gates(X))
    raise ValueError("pairwise gating; evaluate at Gram level via cluster_gated_gram")
