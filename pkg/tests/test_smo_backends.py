"""The compiled SMO core and the numpy fallback must produce identical
iterates: same pair selections, same arithmetic grouping, bit-equal output."""

import numpy as np
import pytest

from conftest import random_psd_gram
from lokal import _smo_py

_smo = pytest.importorskip("lokal._smo", reason="compiled extension not built")


def _classification_problem(rng, n):
    K = random_psd_gram(rng, n)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[:2] = (1.0, -1.0)
    idx = np.arange(n, dtype=np.intp)
    p = np.full(n, -1.0)
    return K, idx, y, p


def _regression_problem(rng, n, epsilon=0.1):
    K = random_psd_gram(rng, n)
    z = rng.uniform(0.0, 1.0, n)
    idx = np.concatenate([np.arange(n, dtype=np.intp)] * 2)
    y = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - z, epsilon + z])
    return K, idx, y, p


@pytest.mark.parametrize("kind", ["svc", "svr"])
@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_backends_bit_identical(kind, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 50))
    make = _classification_problem if kind == "svc" else _regression_problem
    K, idx, y, p = make(rng, n)
    C = float(rng.choice([0.5, 1.0, 4.0]))
    out_c = _smo.solve(K, idx, y, p, C, 1e-4, 200_000)
    out_p = _smo_py.solve(K, idx, y, p, C, 1e-4, 200_000)
    np.testing.assert_array_equal(out_c[0], out_p[0])
    np.testing.assert_array_equal(out_c[1], out_p[1])
    assert out_c[2] == out_p[2]
    assert out_c[3] == out_p[3]


def test_backends_identical_when_capped():
    rng = np.random.default_rng(9)
    K, idx, y, p = _classification_problem(rng, 30)
    out_c = _smo.solve(K, idx, y, p, 1.0, 1e-6, 7)
    out_p = _smo_py.solve(K, idx, y, p, 1.0, 1e-6, 7)
    assert out_c[2] == out_p[2] == 7
    assert not out_c[3] and not out_p[3]
    np.testing.assert_array_equal(out_c[0], out_p[0])


def test_readonly_inputs_accepted():
    rng = np.random.default_rng(3)
    K, idx, y, p = _classification_problem(rng, 12)
    for arr in (K, idx, y, p):
        arr.flags.writeable = False
    beta, grad, iters, conv = _smo.solve(K, idx, y, p, 1.0, 1e-3, 10_000)
    assert conv


def test_solver_backend_reports():
    from lokal import solver

    assert solver.backend_name() in ("compiled", "python")
