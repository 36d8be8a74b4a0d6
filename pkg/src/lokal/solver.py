"""Soft-margin kernel SVM (classification) and epsilon-insensitive SVR via
SMO-style dual coordinate optimization on a precomputed Gram matrix.

The hot pair-update loop lives in the compiled extension ``lokal._smo``
(Cython); ``lokal._smo_py`` is a numpy twin selected at import when the
extension is unavailable or ``LOKAL_PURE_PYTHON=1`` is set. Both produce
identical iterates.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Any

import numpy as np

from lokal.kernels import GATE_FLOOR

if os.environ.get("LOKAL_PURE_PYTHON"):
    from lokal import _smo_py as _core

    BACKEND = "python"
else:
    try:
        from lokal import _smo as _core  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from lokal import _smo_py as _core  # type: ignore[no-redef]

        BACKEND = "python"


def backend_name() -> str:
    return BACKEND


@dataclass(frozen=True)
class SvmParams:
    """Solver knobs. ``max_iter=None`` caps pair updates at max(1e5, 100*N)
    for a problem with N dual variables; ``epsilon`` is the SVR tube width;
    ``sv_threshold`` is the dual-coefficient cutoff that defines a support
    point."""

    C: float = 1.0
    tol: float = 1e-3
    max_iter: int | None = None
    epsilon: float = 0.1
    sv_threshold: float = 1e-8

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.sv_threshold <= 0:
            raise ValueError("sv_threshold must be positive")

    def iteration_cap(self, n_vars: int) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return max(100_000, 100 * n_vars)


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Dual solution of the classifier: dual_coef[j] = alpha_j * y_j."""

    dual_coef: np.ndarray
    bias: float
    support_indices: np.ndarray
    converged: bool
    iterations: int
    dual_objective: float
    train_ref: Any = None


@dataclass(frozen=True, eq=False)
class SvrModel:
    """Dual solution of the regressor: dual_coef[j] = alpha_j - alpha*_j."""

    dual_coef: np.ndarray
    bias: float
    support_indices: np.ndarray
    converged: bool
    iterations: int
    dual_objective: float
    train_ref: Any = None


def _bias_from_solution(beta: np.ndarray, G: np.ndarray, y: np.ndarray, C: float) -> float:
    v = -y * G
    free = (beta > 0.0) & (beta < C)
    if free.any():
        return float(v[free].mean())
    up = ((y > 0.0) & (beta < C)) | ((y < 0.0) & (beta > 0.0))
    low = ((y > 0.0) & (beta > 0.0)) | ((y < 0.0) & (beta < C))
    lo = v[up].max() if up.any() else v[low].min()
    hi = v[low].min() if low.any() else lo
    return float((lo + hi) / 2.0)


def _dual_objective(beta: np.ndarray, G: np.ndarray, p: np.ndarray) -> float:
    # grad G = Q beta + p, so the maximized dual is -(1/2 beta.G + 1/2 beta.p)
    return float(-(0.5 * (beta @ G) + 0.5 * (beta @ p)))


def train_svc(gram: np.ndarray, y: np.ndarray, params: SvmParams) -> SvmModel:
    """Train a soft-margin classifier on a precomputed Gram matrix.

    Non-convergence within the iteration cap returns the best iterate with
    ``converged=False`` rather than raising; harness runs must complete.
    """
    gram = np.asarray(gram, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if gram.shape != (n, n):
        raise ValueError(f"gram shape {gram.shape} does not match {n} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be in {-1, +1}")
    if np.all(y == y[0]):
        raise ValueError("both classes must be present")

    idx = np.arange(n, dtype=np.intp)
    p = np.full(n, -1.0)
    beta, G, iterations, converged = _core.solve(
        gram, idx, y, p, params.C, params.tol, params.iteration_cap(n)
    )
    bias = _bias_from_solution(beta, G, y, params.C)
    dual_coef = y * beta
    support = np.flatnonzero(np.abs(dual_coef) > params.sv_threshold)
    return SvmModel(
        dual_coef=dual_coef,
        bias=bias,
        support_indices=support,
        converged=bool(converged),
        iterations=int(iterations),
        dual_objective=_dual_objective(beta, G, p),
    )


def train_svr(gram: np.ndarray, targets: np.ndarray, params: SvmParams) -> SvrModel:
    """Train an epsilon-insensitive regressor on a precomputed Gram matrix.

    Internally solves the doubled 2n-variable system (alpha, alpha*) with the
    same SMO core; the stored dual_coef is their difference.
    """
    gram = np.asarray(gram, dtype=np.float64)
    z = np.asarray(targets, dtype=np.float64)
    n = z.shape[0]
    if gram.shape != (n, n):
        raise ValueError(f"gram shape {gram.shape} does not match {n} targets")
    if not np.all(np.isfinite(z)):
        raise ValueError("targets must be finite")

    idx = np.concatenate([np.arange(n, dtype=np.intp), np.arange(n, dtype=np.intp)])
    y_ext = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([params.epsilon - z, params.epsilon + z])
    beta, G, iterations, converged = _core.solve(
        gram, idx, y_ext, p, params.C, params.tol, params.iteration_cap(2 * n)
    )
    bias = _bias_from_solution(beta, G, y_ext, params.C)
    dual_coef = beta[:n] - beta[n:]
    support = np.flatnonzero(np.abs(dual_coef) > params.sv_threshold)
    return SvrModel(
        dual_coef=dual_coef,
        bias=bias,
        support_indices=support,
        converged=bool(converged),
        iterations=int(iterations),
        dual_objective=_dual_objective(beta, G, p),
    )


def predict_decision(model: SvmModel | SvrModel, cross: np.ndarray) -> np.ndarray:
    """Decision values sum_j dual_coef[j] * cross[j, k] + bias; cross rows
    align with the model's training examples."""
    cross = np.asarray(cross, dtype=np.float64)
    if cross.ndim != 2 or cross.shape[0] != model.dual_coef.shape[0]:
        raise ValueError(
            f"cross matrix must have {model.dual_coef.shape[0]} rows, got {cross.shape}"
        )
    return model.dual_coef @ cross + model.bias


def predict_gate(model: SvrModel, cross: np.ndarray) -> np.ndarray:
    """Gating regression output clamped to [1e-6, 1]."""
    return np.clip(predict_decision(model, cross), GATE_FLOOR, 1.0)


def kkt_report(
    model: SvmModel, gram: np.ndarray, y: np.ndarray, params: SvmParams
) -> dict[str, float]:
    """Worst KKT violation and the dual objective of a classification model."""
    y = np.asarray(y, dtype=np.float64)
    f = predict_decision(model, gram)
    margins = y * f
    alpha = y * model.dual_coef
    at_zero = alpha <= 1e-12
    at_c = alpha >= params.C - 1e-12
    free = ~(at_zero | at_c)
    viol = np.zeros_like(margins)
    viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    viol[free] = np.abs(margins[free] - 1.0)
    quad = model.dual_coef @ gram @ model.dual_coef
    return {
        "max_violation": float(viol.max()) if viol.size else 0.0,
        "dual_objective": float(alpha.sum() - 0.5 * quad),
    }
