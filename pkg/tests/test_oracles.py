"""Self-validation of the reference QP oracle: the analytic two-point
instance, and agreement with an off-the-shelf interior-point QP solver."""

import numpy as np
import pytest

from conftest import random_psd_gram
from oracles import project_box_hyperplane, qp_box_eq_oracle, svc_dual_oracle


def test_projection_satisfies_constraints(rng):
    for _ in range(20):
        n = int(rng.integers(2, 12))
        v = rng.normal(size=n) * 3
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        y[:2] = (1.0, -1.0)
        C = float(rng.uniform(0.5, 5.0))
        b = project_box_hyperplane(v, y, C)
        assert b.min() >= -1e-12 and b.max() <= C + 1e-12
        assert abs(y @ b) <= 1e-9


def test_oracle_reproduces_analytic_two_point():
    K = np.array([[0.0, 0.0], [0.0, 4.0]])
    y = np.array([-1.0, 1.0])
    beta, j_star = svc_dual_oracle(K, y, C=10.0, iters=20_000)
    np.testing.assert_allclose(beta, [0.5, 0.5], atol=1e-6)
    assert j_star == pytest.approx(0.5, abs=1e-8)


def test_oracle_agrees_with_cvxopt(rng):
    cvxopt = pytest.importorskip("cvxopt")
    from cvxopt import matrix, solvers

    solvers.options["show_progress"] = False
    for _ in range(5):
        n = int(rng.integers(4, 10))
        K = random_psd_gram(rng, n)
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        y[:2] = (1.0, -1.0)
        C = 1.0
        Q = (y[:, None] * y[None, :]) * K + 1e-9 * np.eye(n)
        p = -np.ones(n)
        G = np.vstack([-np.eye(n), np.eye(n)])
        h = np.concatenate([np.zeros(n), np.full(n, C)])
        sol = solvers.qp(matrix(Q), matrix(p), matrix(G), matrix(h),
                         matrix(y.reshape(1, -1)), matrix(np.zeros(1)))
        f_ip = float(sol["primal objective"])
        _, fmin = qp_box_eq_oracle(Q, p, y, C, iters=30_000)
        assert fmin == pytest.approx(f_ip, abs=1e-5)
