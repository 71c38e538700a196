"""Pure-Python/numpy versions of the hot kernels.

The Canberra and SMO functions mirror ``_kernels.pyx`` operation for
operation and are used when the compiled extension is unavailable (or forced
with MOMENTCBIR_PURE=1). ``separable_moments`` is used by both backends.
"""
import numpy as np


def separable_moments(F, Tx, Ty):
    F = np.asarray(F, dtype=np.float64)
    Y = F @ np.asarray(Ty, dtype=np.float64).T
    return np.asarray(Tx, dtype=np.float64) @ Y


def _canberra_terms(a, b):
    # 0/0 terms stay 0
    num = np.abs(a - b)
    den = np.abs(a) + np.abs(b)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0.0)


def _canberra_rows(q, X):
    return _canberra_terms(X, q).sum(axis=1)


def canberra_to_many(q, X):
    q = np.ascontiguousarray(q, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    return _canberra_rows(q, X)


def canberra_pairwise(A, B=None, chunk=64):
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = A if B is None else np.ascontiguousarray(B, dtype=np.float64)
    out = np.empty((A.shape[0], B.shape[0]))
    for start in range(0, A.shape[0], chunk):
        out[start : start + chunk] = _canberra_terms(A[start : start + chunk, None, :], B[None, :, :]).sum(axis=2)
    return out


def _select(alpha, G, y, K, C, tol):
    # maximal-violating i, second-order j (same rule as the compiled kernel)
    n = alpha.shape[0]
    gmax = -np.inf
    gmax2 = -np.inf
    i = -1
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
        return -1, -1, 0.0
    j = -1
    obj_min = np.inf
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
        return -1, -1, gmax + gmax2
    return i, j, gmax + gmax2


def smo_solve(K, y, C, tol=1e-3, max_iter=10000):
    """Solve the soft-margin SVM dual for a precomputed kernel matrix.

    Returns ``(alpha, rho, n_iter, gap)`` with decision function
    ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    gap = np.inf
    it = 0
    while it < max_iter:
        i, j, gap = _select(alpha, G, y, K, C, tol)
        if i < 0:
            break
        it += 1
        Qi = y[i] * y * K[i]
        Qj = y[j] * y * K[j]
        old_ai, old_aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] + 2.0 * Qi[j]
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
            quad = K[i, i] + K[j, j] - 2.0 * Qi[j]
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
        G += Qi * dai + Qj * daj
    else:
        _, _, gap = _select(alpha, G, y, K, C, tol)
    return alpha, _rho(alpha, G, y, C), it, gap


def _rho(alpha, G, y, C):
    ub, lb = np.inf, -np.inf
    total, nfree = 0.0, 0
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
