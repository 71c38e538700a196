# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Canberra scans and the SMO solver.

Each function has a numpy twin in ``_fallback.py`` with the same arithmetic.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


def separable_moments_loop(F, Tx, Ty):
    """L[p, q] = sum_i Tx[p, i] * sum_j Ty[q, j] * F[i, j] as explicit loops.

    Kept for benchmarking only: numpy's BLAS matmul is several times faster
    on these short, wide tables, so both backends use it for the real pass.
    """
    cdef const double[:, ::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef const double[:, ::1] tx = np.ascontiguousarray(Tx, dtype=np.float64)
    cdef const double[:, ::1] tyt = np.ascontiguousarray(np.asarray(Ty, dtype=np.float64).T)
    cdef Py_ssize_t n_rows = f.shape[0], n_cols = f.shape[1]
    cdef Py_ssize_t P = tx.shape[0], Q = tyt.shape[1]
    if tx.shape[1] != n_rows or tyt.shape[0] != n_cols:
        raise ValueError("kernel tables do not match image shape")
    Y_arr = np.zeros((n_rows, Q))
    L_arr = np.zeros((P, Q))
    cdef double[:, ::1] Y = Y_arr
    cdef double[:, ::1] L = L_arr
    cdef Py_ssize_t i, j, p, q
    cdef double v
    with nogil:
        for i in range(n_rows):
            for j in range(n_cols):
                v = f[i, j]
                for q in range(Q):
                    Y[i, q] += v * tyt[j, q]
        for p in range(P):
            for i in range(n_rows):
                v = tx[p, i]
                for q in range(Q):
                    L[p, q] += v * Y[i, q]
    return L_arr


cdef inline double _canberra(const double* a, const double* b, Py_ssize_t d) noexcept nogil:
    cdef double s = 0.0, den
    cdef Py_ssize_t k
    for k in range(d):
        den = fabs(a[k]) + fabs(b[k])
        if den > 0.0:
            s = s + fabs(a[k] - b[k]) / den
    return s


def canberra_to_many(q, X):
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1], r
    if qv.shape[0] != d:
        raise ValueError("dimension mismatch")
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    if d == 0:
        out_arr[:] = 0.0
        return out_arr
    with nogil:
        for r in range(m):
            out[r] = _canberra(&qv[0], &x[r, 0], d)
    return out_arr


def canberra_pairwise(A, B=None):
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] b = a if B is None else np.ascontiguousarray(B, dtype=np.float64)
    cdef Py_ssize_t ma = a.shape[0], mb = b.shape[0], d = a.shape[1], r, s
    if b.shape[1] != d:
        raise ValueError("dimension mismatch")
    out_arr = np.zeros((ma, mb))
    cdef double[:, ::1] out = out_arr
    if d == 0:
        return out_arr
    with nogil:
        for r in range(ma):
            for s in range(mb):
                out[r, s] = _canberra(&a[r, 0], &b[s, 0], d)
    return out_arr


cdef double _select(double[::1] alpha, double[::1] G, const double[::1] y, const double[:, ::1] K,
                    double C, double tol, Py_ssize_t* out_i, Py_ssize_t* out_j) noexcept nogil:
    cdef Py_ssize_t n = alpha.shape[0], t, i = -1, j = -1
    cdef double gmax = -INFINITY, gmax2 = -INFINITY, obj_min = INFINITY
    cdef double grad_diff, quad, obj
    for t in range(n):
        if y[t] > 0:
            if alpha[t] < C and -G[t] > gmax:
                gmax = -G[t]
                i = t
        else:
            if alpha[t] > 0 and G[t] > gmax:
                gmax = G[t]
                i = t
    if i < 0:
        out_i[0] = -1
        out_j[0] = -1
        return 0.0
    for t in range(n):
        if y[t] > 0:
            if alpha[t] > 0:
                grad_diff = gmax + G[t]
                if G[t] >= gmax2:
                    gmax2 = G[t]
                if grad_diff > 0:
                    quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if quad <= 0:
                        quad = 1e-12
                    obj = -(grad_diff * grad_diff) / quad
                    if obj < obj_min:
                        obj_min = obj
                        j = t
        else:
            if alpha[t] < C:
                grad_diff = gmax - G[t]
                if -G[t] >= gmax2:
                    gmax2 = -G[t]
                if grad_diff > 0:
                    quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if quad <= 0:
                        quad = 1e-12
                    obj = -(grad_diff * grad_diff) / quad
                    if obj < obj_min:
                        obj_min = obj
                        j = t
    if gmax + gmax2 < tol or j < 0:
        out_i[0] = -1
        out_j[0] = -1
    else:
        out_i[0] = i
        out_j[0] = j
    return gmax + gmax2


def smo_solve(K, y, double C, double tol=1e-3, Py_ssize_t max_iter=10000):
    """Solve the soft-margin SVM dual for a precomputed kernel matrix.

    Returns ``(alpha, rho, n_iter, gap)``.
    """
    cdef const double[:, ::1] k = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], t, i = 0, j = 0, it = 0
    alpha_arr = np.zeros(n)
    G_arr = -np.ones(n)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = G_arr
    cdef double gap = INFINITY, quad, delta, diff, s, old_ai, old_aj, dai, daj, qij
    cdef bint converged = False
    with nogil:
        while it < max_iter:
            gap = _select(alpha, G, yv, k, C, tol, &i, &j)
            if i < 0:
                converged = True
                break
            it += 1
            qij = yv[i] * yv[j] * k[i, j]
            old_ai = alpha[i]
            old_aj = alpha[j]
            if yv[i] != yv[j]:
                quad = k[i, i] + k[j, j] + 2.0 * qij
                if quad <= 0:
                    quad = 1e-12
                delta = (-G[i] - G[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j] = 0.0
                        alpha[i] = diff
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0.0
                        alpha[j] = -diff
                if diff > 0:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = C - diff
                else:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = C + diff
            else:
                quad = k[i, i] + k[j, j] - 2.0 * qij
                if quad <= 0:
                    quad = 1e-12
                delta = (G[i] - G[j]) / quad
                s = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if s > C:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = s - C
                else:
                    if alpha[j] < 0:
                        alpha[j] = 0.0
                        alpha[i] = s
                if s > C:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = s - C
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0.0
                        alpha[j] = s
            dai = alpha[i] - old_ai
            daj = alpha[j] - old_aj
            for t in range(n):
                G[t] += (yv[i] * yv[t] * k[i, t]) * dai + (yv[j] * yv[t] * k[j, t]) * daj
        if not converged:
            gap = _select(alpha, G, yv, k, C, tol, &i, &j)
    return alpha_arr, _rho(alpha, G, yv, C), it, gap


cdef double _rho(double[::1] alpha, double[::1] G, const double[::1] y, double C) noexcept nogil:
    cdef double ub = INFINITY, lb = -INFINITY, total = 0.0, yg
    cdef Py_ssize_t t, nfree = 0
    for t in range(alpha.shape[0]):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            total += yg
    if nfree > 0:
        return total / nfree
    return (ub + lb) / 2.0
