# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; semantics match ``porous_soc._fallback``."""

import numpy as np

from libc.math cimport fabs, pow, sqrt
from libc.stdlib cimport malloc, free

cdef enum:
    PWL = 0
    POWER = 1

cdef double CURVATURE = 0.5
cdef int MAX_SEARCH = 60


cdef inline double _pw(double x, double a) noexcept nogil:
    # libm pow is the bottleneck for power graphs; exact shortcuts for 1/2 and 2
    if a == 0.5:
        return sqrt(x)
    if a == 2.0:
        return x * x
    return pow(x, a)


cdef inline double _power_root(double ax, double k, double alpha) noexcept nogil:
    # t + k t^alpha = ax, t >= 0; monotone Newton from an upper bound,
    # in u = t^alpha when alpha <= 1 so that the equation is convex
    cdef double u, q, g, step, v
    cdef int it
    if alpha == 1.0:
        return ax / (1.0 + k)
    if ax <= 0.0:
        return 0.0
    if alpha < 1.0:
        q = 1.0 / alpha
        u = ax / k
        if _pw(ax, alpha) < u:
            u = _pw(ax, alpha)
        for it in range(100):
            v = _pw(u, q)
            g = v + k * u - ax
            if g <= 0:
                break
            step = g / (q * v / u + k)
            u -= step
            if step <= 4e-16 * u:
                break
        return _pw(u, q)
    u = _pw(ax / k, 1.0 / alpha)
    if ax < u:
        u = ax
    for it in range(100):
        v = _pw(u, alpha)
        g = u + k * v - ax
        if g <= 0:
            break
        step = g / (1.0 + k * alpha * v / u)
        u -= step
        if step <= 4e-16 * u:
            break
    return u


cdef inline double _power_slope(double t, double lam, double alpha, double c) noexcept nogil:
    return c * alpha / (_pw(t, 1.0 - alpha) + lam * c * alpha)


cdef inline void _table(const double* xs, const double* ws, Py_ssize_t m, double x,
                        double* y, double* dy) noexcept nogil:
    # piecewise-linear interpolation, linear extension past both ends, right slope
    cdef Py_ssize_t lo = 0, hi = m - 1, mid
    cdef double s
    if x < xs[1]:
        lo = 0
    elif x >= xs[m - 2]:
        lo = m - 2
    else:
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if xs[mid] <= x:
                lo = mid
            else:
                hi = mid
    s = (ws[lo + 1] - ws[lo]) / (xs[lo + 1] - xs[lo])
    y[0] = ws[lo] + s * (x - xs[lo])
    dy[0] = s


cdef inline void _phi(int code, const double* p, const double* xs, const double* ws,
                      Py_ssize_t m, double lam, double x, double* w, double* dw) noexcept nogil:
    cdef double t, g
    if code == PWL:
        _table(xs, ws, m, x, w, dw)
        return
    t = _power_root(fabs(x), lam * p[1], p[0])
    g = p[1] * _pw(t, p[0])
    if x < 0:
        g = -g
    elif x == 0:
        g = 0.0
    w[0] = g + lam * x
    dw[0] = _power_slope(t, lam, p[0], p[1]) + lam


cdef inline void _phi_inv(int code, const double* p, const double* xs, const double* ws,
                          Py_ssize_t m, double lam, double w, double* x, double* dx) noexcept nogil:
    cdef double t, v
    if code == PWL:
        _table(ws, xs, m, w, x, dx)
        return
    t = _power_root(fabs(w) / lam, (1.0 + lam * lam) * p[1] / lam, p[0])
    v = t + lam * p[1] * _pw(t, p[0])
    if w < 0:
        v = -v
    elif w == 0:
        v = 0.0
    x[0] = v
    dx[0] = 1.0 / (_power_slope(t, lam, p[0], p[1]) + lam)


def phi(int code, const double[::1] params, const double[::1] xs, const double[::1] ws,
        double lam, x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=float).ravel()
    cdef Py_ssize_t n = xv.shape[0], i, m = xs.shape[0]
    w_arr = np.empty(n)
    dw_arr = np.empty(n)
    cdef double[::1] w = w_arr, dw = dw_arr
    for i in range(n):
        _phi(code, &params[0], &xs[0], &ws[0], m, lam, xv[i], &w[i], &dw[i])
    return w_arr.reshape(np.shape(x)), dw_arr.reshape(np.shape(x))


def phi_inv(int code, const double[::1] params, const double[::1] xs, const double[::1] ws,
            double lam, w):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=float).ravel()
    cdef Py_ssize_t n = wv.shape[0], i, m = xs.shape[0]
    x_arr = np.empty(n)
    dx_arr = np.empty(n)
    cdef double[::1] x = x_arr, dx = dx_arr
    for i in range(n):
        _phi_inv(code, &params[0], &xs[0], &ws[0], m, lam, wv[i], &x[i], &dx[i])
    return x_arr.reshape(np.shape(w)), dx_arr.reshape(np.shape(w))


cdef inline double _gradient(int code, const double* p, const double* xs, const double* ws,
                             Py_ssize_t m, double lam, double coef, const double* w,
                             const double* f, Py_ssize_t n, double* x, double* dx,
                             double* G) noexcept nogil:
    # G = phi_inv(w) + coef * L w - f; returns max |G|
    cdef Py_ssize_t i
    cdef double lw, rw, v, res = 0.0
    for i in range(n):
        _phi_inv(code, p, xs, ws, m, lam, w[i], &x[i], &dx[i])
    for i in range(n):
        lw = w[i - 1] if i > 0 else 0.0
        rw = w[i + 1] if i < n - 1 else 0.0
        v = x[i] + coef * (2.0 * w[i] - lw - rw) - f[i]
        G[i] = v
        if fabs(v) > res:
            res = fabs(v)
    return res


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(n):
        s += a[i] * b[i]
    return s


cdef inline void _spd_solve(const double* dx, double coef, const double* r, Py_ssize_t n,
                            double* cp, double* d) noexcept nogil:
    # (diag(dx) + coef * tridiag(-1, 2, -1)) d = r
    cdef Py_ssize_t i
    cdef double m
    m = dx[0] + 2.0 * coef
    cp[0] = -coef / m
    d[0] = r[0] / m
    for i in range(1, n):
        m = dx[i] + 2.0 * coef + coef * cp[i - 1]
        cp[i] = -coef / m
        d[i] = (r[i] + coef * d[i - 1]) / m
    for i in range(n - 2, -1, -1):
        d[i] -= cp[i] * d[i + 1]


def newton_solve(const double[::1] forcing, double[::1] x, int code, const double[::1] params,
                 const double[::1] xs, const double[::1] ws, double lam, double coef,
                 double tol, int maxit, double[::1] w_out):
    cdef Py_ssize_t n = x.shape[0], i, m = xs.shape[0]
    cdef double* buf = <double*> malloc(10 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* w = buf
    cdef double* dx = buf + n
    cdef double* G = buf + 2 * n
    cdef double* d = buf + 3 * n
    cdef double* cp = buf + 4 * n
    cdef double* wt = buf + 5 * n
    cdef double* xt = buf + 6 * n
    cdef double* dxt = buf + 7 * n
    cdef double* Gt = buf + 8 * n
    cdef double* xc = buf + 9 * n
    cdef double* tmp
    cdef const double* pp = &params[0]
    cdef const double* xp = &xs[0]
    cdef const double* wp = &ws[0]
    cdef const double* fp = &forcing[0]
    cdef double res, rest = 0.0, g0, g1, gs, s, a, ga, b, gb, dummy
    cdef int it = 0, k, side
    cdef bint ok = False, found
    with nogil:
        for i in range(n):
            _phi(code, pp, xp, wp, m, lam, x[i], &w[i], &dummy)
        res = _gradient(code, pp, xp, wp, m, lam, coef, w, fp, n, xc, dx, G)
        while True:
            if res <= tol:
                ok = True
                break
            if it == maxit:
                break
            _spd_solve(dx, coef, G, n, cp, d)
            g0 = _dot(G, d, n)
            if not g0 > 0:
                break
            for i in range(n):
                wt[i] = w[i] - d[i]
            rest = _gradient(code, pp, xp, wp, m, lam, coef, wt, fp, n, xt, dxt, Gt)
            g1 = _dot(Gt, d, n)
            found = True
            if g1 < 0:
                # convex along the line: find s with 0 <= g(s) <= CURVATURE * g0
                found = False
                a = 0.0; ga = g0; b = 1.0; gb = g1; side = 0
                for k in range(MAX_SEARCH):
                    s = (a * gb - b * ga) / (gb - ga)
                    for i in range(n):
                        wt[i] = w[i] - s * d[i]
                    rest = _gradient(code, pp, xp, wp, m, lam, coef, wt, fp, n, xt, dxt, Gt)
                    gs = _dot(Gt, d, n)
                    if gs >= 0 and gs <= CURVATURE * g0:
                        found = True
                        break
                    if gs > 0:
                        a = s; ga = gs
                        if side == 1:
                            gb *= 0.5
                        side = 1
                    else:
                        b = s; gb = gs
                        if side == -1:
                            ga *= 0.5
                        side = -1
            if not found:
                break
            tmp = w; w = wt; wt = tmp
            tmp = xc; xc = xt; xt = tmp
            tmp = dx; dx = dxt; dxt = tmp
            tmp = G; G = Gt; Gt = tmp
            res = rest
            it += 1
        for i in range(n):
            x[i] = xc[i]
            w_out[i] = w[i]
    free(buf)
    return it, res, ok


def hm1_sq(const double[::1] f, double h):
    cdef Py_ssize_t n = f.shape[0], i
    cdef double* cp = <double*> malloc(2 * n * sizeof(double))
    if cp == NULL:
        raise MemoryError()
    cdef double* u = cp + n
    cdef double m, s = 0.0
    with nogil:
        # Thomas for tridiag(-1, 2, -1) u = h^2 f
        cp[0] = -0.5
        u[0] = h * h * f[0] / 2.0
        for i in range(1, n):
            m = 2.0 + cp[i - 1]
            cp[i] = -1.0 / m
            u[i] = (h * h * f[i] + u[i - 1]) / m
        for i in range(n - 2, -1, -1):
            u[i] -= cp[i] * u[i + 1]
        for i in range(n):
            s += u[i] * f[i]
    free(cp)
    return h * s
