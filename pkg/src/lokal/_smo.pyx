# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SMO core; contract identical to lokal._smo_py.solve.

The pair-update loop is pure C and runs without the GIL, so independent
training runs scale across threads.
"""

import numpy as np


def solve(K, idx, y, p, double C, double tol, long max_iter):
    """Returns (beta, grad, iterations, converged); see lokal._smo_py.solve."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    idx = np.ascontiguousarray(idx, dtype=np.intp)
    y = np.ascontiguousarray(y, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    beta_arr = np.zeros(y.shape[0])
    grad_arr = p.copy()

    cdef const double[:, ::1] k_view = K
    cdef const Py_ssize_t[::1] idx_view = idx
    cdef const double[::1] y_view = y
    cdef double[::1] beta = beta_arr
    cdef double[::1] grad = grad_arr

    cdef Py_ssize_t N = y_view.shape[0]
    cdef Py_ssize_t t, i, j, ii, jj
    cdef long it, iterations = 0
    cdef bint converged = False, found_up, found_low
    cdef double vt, vmax, vmin, gap, a, room_i, room_j, dmax, delta
    cdef double curvature_floor = 1e-12

    with nogil:
        for it in range(max_iter):
            found_up = False
            found_low = False
            vmax = 0.0
            vmin = 0.0
            i = -1
            j = -1
            for t in range(N):
                vt = -y_view[t] * grad[t]
                if (y_view[t] > 0.0 and beta[t] < C) or (y_view[t] < 0.0 and beta[t] > 0.0):
                    if not found_up or vt > vmax:
                        vmax = vt
                        i = t
                        found_up = True
                if (y_view[t] > 0.0 and beta[t] > 0.0) or (y_view[t] < 0.0 and beta[t] < C):
                    if not found_low or vt < vmin:
                        vmin = vt
                        j = t
                        found_low = True
            if not found_up or not found_low:
                converged = True
                break
            gap = vmax - vmin
            if gap <= tol:
                converged = True
                break

            ii = idx_view[i]
            jj = idx_view[j]
            a = k_view[ii, ii] + k_view[jj, jj] - 2.0 * k_view[ii, jj]
            room_i = (C - beta[i]) if y_view[i] > 0.0 else beta[i]
            room_j = beta[j] if y_view[j] > 0.0 else (C - beta[j])
            dmax = room_i if room_i < room_j else room_j
            if a > curvature_floor:
                delta = gap / a
                if delta > dmax:
                    delta = dmax
            else:
                delta = dmax

            if delta == room_i:
                beta[i] = C if y_view[i] > 0.0 else 0.0
            else:
                beta[i] = beta[i] + y_view[i] * delta
            if delta == room_j:
                beta[j] = 0.0 if y_view[j] > 0.0 else C
            else:
                beta[j] = beta[j] - y_view[j] * delta

            for t in range(N):
                grad[t] = grad[t] + delta * y_view[t] * (
                    k_view[ii, idx_view[t]] - k_view[jj, idx_view[t]]
                )
            iterations += 1

    return beta_arr, grad_arr, iterations, converged
