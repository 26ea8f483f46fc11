"""Compiled inner loops for the dual of the dissimilarity program.

All kernels work on *standardized* data: ``A`` is the ``(N, m)`` matrix whose
row ``i`` is ``[z_i_std, 1]`` (``m = n + 1``) and ``b = [z_std, 1]`` is the
right-hand side of the equality constraints ``A.T @ lam = b``.  For a dual
vector ``eta`` the separable inner problem has the closed-form solution

    lam_i = -soft(a_i @ eta, gamma) / (2 w_i)

and the dual function is ``g(eta) = -sum soft(a_i @ eta, gamma)**2 / (4 w_i) - b @ eta``.
"""
import numpy as np
from numba import njit

# status codes returned by the kernels
CONVERGED = 0
MAX_ITER = 1


@njit(cache=True)
def soft_threshold_min(c, gamma, w):
    """argmin over lam of ``w lam**2 + gamma |lam| + c lam``."""
    if c > gamma:
        return -(c - gamma) / (2.0 * w)
    if c < -gamma:
        return -(c + gamma) / (2.0 * w)
    return 0.0


@njit(cache=True)
def _inner(A, w, eta, b, gamma, lam, r):
    """Fill ``lam`` and the dual gradient ``r = A.T lam - b``; return ``g(eta)``."""
    N, m = A.shape
    g = 0.0
    for k in range(m):
        r[k] = -b[k]
        g -= b[k] * eta[k]
    for i in range(N):
        c = 0.0
        for k in range(m):
            c += A[i, k] * eta[k]
        li = soft_threshold_min(c, gamma, w[i])
        lam[i] = li
        if li != 0.0:
            g -= w[i] * li * li
            for k in range(m):
                r[k] += A[i, k] * li
    return g


@njit(cache=True)
def _inf_norm(v):
    out = 0.0
    for k in range(v.shape[0]):
        a = abs(v[k])
        if a > out:
            out = a
    return out


@njit(cache=True)
def _finish(A, w, b, gamma, Ginv, lam, r):
    """Project ``lam`` onto the affine feasible set and return (value, residual).

    The projection uses ``Ginv = inv(A.T A)``; the value of a feasible point is
    an upper bound on the optimum, which keeps reported values on the safe side.
    """
    N, m = A.shape
    corr = Ginv @ r
    for i in range(N):
        s = 0.0
        for k in range(m):
            s += A[i, k] * corr[k]
        lam[i] -= s
    res = np.empty(m)
    for k in range(m):
        res[k] = -b[k]
    val = 0.0
    for i in range(N):
        li = lam[i]
        val += w[i] * li * li + gamma * abs(li)
        for k in range(m):
            res[k] += A[i, k] * li
    return val, _inf_norm(res)


@njit(cache=True)
def agd_solve(A, w, b, gamma, L, tol, maxit, eta0, Ginv):
    """Accelerated dual gradient ascent with function-value restart.

    Returns ``(eta, lam, value, residual, raw_residual, iterations, status)``;
    ``raw_residual`` is the dual-gradient norm at stopping, before projection.
    """
    N, m = A.shape
    lam = np.empty(N)
    r = np.empty(m)
    r_y = np.empty(m)
    eta = eta0.copy()
    y = eta0.copy()
    eta_new = np.empty(m)
    t = 1.0
    g_eta = _inner(A, w, eta, b, gamma, lam, r)
    status = MAX_ITER
    it = 0
    raw = np.inf
    while it < maxit:
        it += 1
        _inner(A, w, y, b, gamma, lam, r_y)
        raw = _inf_norm(r_y)
        if raw <= tol:
            eta[:] = y
            status = CONVERGED
            break
        for k in range(m):
            eta_new[k] = y[k] + r_y[k] / L
        g_new = _inner(A, w, eta_new, b, gamma, lam, r)
        raw = _inf_norm(r)
        if raw <= tol:
            eta[:] = eta_new
            status = CONVERGED
            break
        # restart when the step moves against the gradient at the extrapolated
        # point or the dual value drops beyond rounding; raw value comparisons
        # alone are noise once the residual approaches sqrt(machine eps)
        turn = 0.0
        for k in range(m):
            turn += r_y[k] * (eta_new[k] - eta[k])
        if turn < 0.0 or g_new < g_eta - 1e-13 * (1.0 + abs(g_eta)):
            y[:] = eta
            t = 1.0
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_new
        for k in range(m):
            y[k] = eta_new[k] + beta * (eta_new[k] - eta[k])
            eta[k] = eta_new[k]
        g_eta = g_new
        t = t_new
    _inner(A, w, eta, b, gamma, lam, r)
    value, res = _finish(A, w, b, gamma, Ginv, lam, r)
    return eta, lam, value, res, raw, it, status


@njit(cache=True)
def _chol_solve(H, r, out):
    """Solve ``H out = r`` for small SPD ``H``; False if ``H`` is numerically singular."""
    m = H.shape[0]
    Lc = np.zeros((m, m))
    scale = 0.0
    for k in range(m):
        if H[k, k] > scale:
            scale = H[k, k]
    if scale <= 0.0:
        return False
    for j in range(m):
        s = H[j, j]
        for k in range(j):
            s -= Lc[j, k] * Lc[j, k]
        if s <= 1e-13 * scale:
            return False
        Lc[j, j] = np.sqrt(s)
        for i in range(j + 1, m):
            s = H[i, j]
            for k in range(j):
                s -= Lc[i, k] * Lc[j, k]
            Lc[i, j] = s / Lc[j, j]
    tmp = np.empty(m)
    for i in range(m):
        s = r[i]
        for k in range(i):
            s -= Lc[i, k] * tmp[k]
        tmp[i] = s / Lc[i, i]
    for i in range(m - 1, -1, -1):
        s = tmp[i]
        for k in range(i + 1, m):
            s -= Lc[k, i] * out[k]
        out[i] = s / Lc[i, i]
    return True


@njit(cache=True)
def _cold_start(A, w, b, gamma, eta):
    # dual optimum of the unit-weight gamma=0 problem on standardized data,
    # shifted by -gamma so that the positive weights stay active
    N, m = A.shape
    for k in range(m - 1):
        eta[k] = -2.0 * b[k] / N
    eta[m - 1] = -2.0 / N - gamma


@njit(cache=True)
def newton_sweep(A, w, Q, restart, gamma, L, tol, maxit, Ginv):
    """Semismooth Newton on the dual for a sequence of standardized queries.

    ``Q`` holds one standardized query point per row.  Unless ``restart[j]``
    is set, query ``j`` is warm started from the previous solutions: the dual
    optimum is piecewise affine along a line, so a secant extrapolation of the
    last two optima is usually already optimal for ordered grid sweeps.

    Returns ``(values, residuals, iterations, status)`` per query.
    """
    N, m = A.shape
    P = Q.shape[0]
    values = np.empty(P)
    residuals = np.empty(P)
    iters = np.zeros(P, dtype=np.int64)
    status = np.zeros(P, dtype=np.int64)
    lam = np.empty(N)
    lam_t = np.empty(N)
    r = np.empty(m)
    r_t = np.empty(m)
    b = np.empty(m)
    eta = np.zeros(m)
    eta_prev = np.zeros(m)
    eta_t = np.empty(m)
    d = np.empty(m)
    H = np.empty((m, m))
    # Levenberg shift: with fewer than m active points the dual is flat along
    # some directions and the shifted step jumps straight to the next kink
    ridge = 1e-10 * L
    run = 0  # consecutive warm-started queries ending at j - 1
    for j in range(P):
        for k in range(m - 1):
            b[k] = Q[j, k]
        b[m - 1] = 1.0
        if j == 0 or restart[j]:
            _cold_start(A, w, b, gamma, eta)
            run = 0
        elif run >= 1:
            num = 0.0
            den = 0.0
            for k in range(m - 1):
                num += (Q[j, k] - Q[j - 1, k]) ** 2
                den += (Q[j - 1, k] - Q[j - 2, k]) ** 2
            ratio = np.sqrt(num / den) if den > 0.0 else 0.0
            for k in range(m):
                eta_t[k] = eta[k] + ratio * (eta[k] - eta_prev[k])
                eta_prev[k] = eta[k]
                eta[k] = eta_t[k]
            run += 1
        else:
            eta_prev[:] = eta
            run += 1
        g = _inner(A, w, eta, b, gamma, lam, r)
        st = MAX_ITER
        it = 0
        while it < maxit:
            r_norm = _inf_norm(r)
            if r_norm <= tol:
                st = CONVERGED
                break
            it += 1
            H[:, :] = 0.0
            for i in range(N):
                if lam[i] != 0.0:
                    s = 0.5 / w[i]
                    for p in range(m):
                        ap = A[i, p] * s
                        for q in range(p + 1):
                            H[p, q] += ap * A[i, q]
            for p in range(m):
                H[p, p] += ridge
                for q in range(p):
                    H[q, p] = H[p, q]
            if not _chol_solve(H, r, d):
                for k in range(m):
                    d[k] = r[k] / L
            slope = 0.0
            for k in range(m):
                slope += r[k] * d[k]
            # once the predicted ascent is below the resolution of g, the
            # Armijo test is rounding noise; judge steps by the residual instead
            flat = slope <= 1e-13 * (1.0 + abs(g))
            step = 1.0
            accepted = False
            for _ls in range(60):
                for k in range(m):
                    eta_t[k] = eta[k] + step * d[k]
                g_t = _inner(A, w, eta_t, b, gamma, lam_t, r_t)
                if g_t >= g + 1e-4 * step * slope:
                    accepted = True
                    break
                if flat and _inf_norm(r_t) < r_norm:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                for k in range(m):
                    eta_t[k] = eta[k] + r[k] / L
                g_t = _inner(A, w, eta_t, b, gamma, lam_t, r_t)
            eta[:] = eta_t
            lam[:] = lam_t
            r[:] = r_t
            g = g_t
        values[j], residuals[j] = _finish(A, w, b, gamma, Ginv, lam, r)
        iters[j] = it
        status[j] = st
    return values, residuals, iters, status
