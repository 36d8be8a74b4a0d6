"""Pure-numpy SMO core, the fallback for the compiled extension.

Solves  min_beta  1/2 sum_st beta_s beta_t y_s y_t K[idx_s, idx_t] + p . beta
subject to  y . beta = 0,  0 <= beta <= C.

Classification passes idx = arange(n) and p = -1; epsilon-regression passes
the doubled system (idx repeats each row, y = [+1...,-1...]) so the same
core serves both. Pair selection is the maximal violating pair; when the
pairwise curvature is not positive the step moves to the feasible box
endpoint in the descent direction. Arithmetic is grouped to match the
compiled core bit for bit.
"""

from __future__ import annotations

import numpy as np

CURVATURE_FLOOR = 1e-12


def solve(
    K: np.ndarray,
    idx: np.ndarray,
    y: np.ndarray,
    p: np.ndarray,
    C: float,
    tol: float,
    max_iter: int,
    on_iteration=None,
):
    """Returns (beta, grad, iterations, converged).

    ``on_iteration(beta)`` is a test hook invoked after every pair update;
    the compiled core does not accept it.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    idx = np.ascontiguousarray(idx, dtype=np.intp)
    y = np.ascontiguousarray(y, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    N = y.shape[0]
    beta = np.zeros(N)
    G = p.copy()

    pos = y > 0.0
    neg = ~pos
    iterations = 0
    converged = False
    for _ in range(max_iter):
        v = -y * G
        up = (pos & (beta < C)) | (neg & (beta > 0.0))
        low = (pos & (beta > 0.0)) | (neg & (beta < C))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, v, -np.inf)))
        j = int(np.argmin(np.where(low, v, np.inf)))
        gap = v[i] - v[j]
        if gap <= tol:
            converged = True
            break

        ii = idx[i]
        jj = idx[j]
        a = K[ii, ii] + K[jj, jj] - 2.0 * K[ii, jj]
        room_i = (C - beta[i]) if y[i] > 0.0 else beta[i]
        room_j = beta[j] if y[j] > 0.0 else (C - beta[j])
        dmax = min(room_i, room_j)
        if a > CURVATURE_FLOOR:
            delta = gap / a
            if delta > dmax:
                delta = dmax
        else:
            delta = dmax

        if delta == room_i:
            beta[i] = C if y[i] > 0.0 else 0.0
        else:
            beta[i] = beta[i] + y[i] * delta
        if delta == room_j:
            beta[j] = 0.0 if y[j] > 0.0 else C
        else:
            beta[j] = beta[j] - y[j] * delta

        ki = K[ii].take(idx)
        kj = K[jj].take(idx)
        G += delta * y * (ki - kj)
        iterations += 1
        if on_iteration is not None:
            on_iteration(beta)

    return beta, G, iterations, converged
