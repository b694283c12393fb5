"""Pure numpy versions of the hot kernels (see ``_kernels.pyx``).

Both modules expose the same functions with identical semantics. The
regularized nonlinearity ``phi(x) = g_lam(x) + lam * x`` is strictly
increasing; it is described either by a piecewise-linear table ``(xs, ws)``
extended linearly past both ends (``code == PWL``) or, for the power law,
by ``params = (alpha, coefficient)`` (``code == POWER``).

``phi(code, params, xs, ws, lam, x) -> (w, dw)``
    Forward map and its right derivative.
``phi_inv(code, params, xs, ws, lam, w) -> (x, dx)``
    Inverse map and its right derivative.
``newton_solve(forcing, x, code, params, xs, ws, lam, coef, tol, maxit, w_out)``
    Solve ``x + coef * L phi(x) = forcing`` where ``L`` is the unscaled
    second difference ``(2, -1, -1)`` with zero ghosts. Newton runs on
    ``w = phi(x)``, where the Jacobian ``diag(phi_inv') + coef * L`` is
    symmetric positive definite and the system is the gradient of a
    strictly convex functional; steps are safeguarded by a line search on
    the directional derivative. ``x`` holds the initial guess on entry and
    the solution on exit. Returns ``(iterations, max_residual, converged)``.
``hm1_sq(f, h)``
    ``h * <A_h^-1 f, f>``.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

PWL, POWER = 0, 1

CURVATURE = 0.5
MAX_SEARCH = 60


def _power_root(ax, k, alpha):
    """Solve ``t + k * t**alpha = ax`` for ``t >= 0`` componentwise.

    Newton from an upper bound on a convex increasing function decreases
    monotonically to the root: in ``u = t**alpha`` when ``alpha <= 1``,
    in ``t`` itself otherwise.
    """
    ax = np.asarray(ax, dtype=float)
    if alpha == 1.0:
        return ax / (1.0 + k)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if alpha < 1.0:
            q = 1.0 / alpha
            u = np.minimum(ax / k, ax**alpha)
            for _ in range(100):
                g = u**q + k * u - ax
                step = np.where(g > 0, g / (q * u ** (q - 1.0) + k), 0.0)
                u = u - step
                if np.all(step <= 4e-16 * u):
                    break
            return u**q
        t = np.minimum(ax, (ax / k) ** (1.0 / alpha))
        for _ in range(100):
            g = t + k * t**alpha - ax
            step = np.where(g > 0, g / (1.0 + k * alpha * t ** (alpha - 1.0)), 0.0)
            t = t - step
            if np.all(step <= 4e-16 * t):
                break
        return t


def _power_slope(t, lam, alpha, c):
    # derivative of the Yosida approximation at resolvent value t = |J x|
    with np.errstate(divide="ignore"):
        return c * alpha / (t ** (1.0 - alpha) + lam * c * alpha)


def _table(xs, ws, x):
    j = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
    s = (ws[j + 1] - ws[j]) / (xs[j + 1] - xs[j])
    return ws[j] + s * (x - xs[j]), s


def phi(code, params, xs, ws, lam, x):
    x = np.asarray(x, dtype=float)
    if code == PWL:
        return _table(xs, ws, x)
    alpha, c = params[0], params[1]
    t = _power_root(np.abs(x), lam * c, alpha)
    g = np.sign(x) * c * t**alpha
    return g + lam * x, _power_slope(t, lam, alpha, c) + lam


def phi_inv(code, params, xs, ws, lam, w):
    w = np.asarray(w, dtype=float)
    if code == PWL:
        x, s = _table(ws, xs, w)
        return x, s
    alpha, c = params[0], params[1]
    # w = lam * y + (1 + lam^2) * c |y|^alpha sgn(y) with y the resolvent of x
    t = _power_root(np.abs(w) / lam, (1.0 + lam * lam) * c / lam, alpha)
    x = np.sign(w) * (t + lam * c * t**alpha)
    return x, 1.0 / (_power_slope(t, lam, alpha, c) + lam)


def _second_difference(w):
    out = 2.0 * w
    out[1:] -= w[:-1]
    out[:-1] -= w[1:]
    return out


def newton_solve(forcing, x, code, params, xs, ws, lam, coef, tol, maxit, w_out):
    n = x.size
    ab = np.empty((3, n))
    ab[0] = -coef
    ab[2] = -coef
    ab[0, 0] = ab[2, -1] = 0.0
    w, _ = phi(code, params, xs, ws, lam, x)

    def gradient(wv):
        xv, dxv = phi_inv(code, params, xs, ws, lam, wv)
        return xv, dxv, xv + coef * _second_difference(wv) - forcing

    xv, dxv, G = gradient(w)
    res = np.abs(G).max()
    it = 0
    ok = res <= tol
    while not ok and it < maxit:
        ab[1] = dxv + 2.0 * coef
        d = solve_banded((1, 1), ab, G, check_finite=False)
        g0 = G @ d
        if not g0 > 0:
            break
        trial = gradient(w - d)
        g1 = trial[2] @ d
        s = 1.0
        if g1 < 0:
            # convex along the line: find s with 0 <= g(s) <= CURVATURE * g0
            a, ga, b, gb, side = 0.0, g0, 1.0, g1, 0
            for _ in range(MAX_SEARCH):
                s = (a * gb - b * ga) / (gb - ga)
                trial = gradient(w - s * d)
                gs = trial[2] @ d
                if 0 <= gs <= CURVATURE * g0:
                    break
                if gs > 0:
                    a, ga = s, gs
                    if side == 1:
                        gb *= 0.5
                    side = 1
                else:
                    b, gb = s, gs
                    if side == -1:
                        ga *= 0.5
                    side = -1
            else:
                break
        w = w - s * d
        xv, dxv, G = trial
        res = np.abs(G).max()
        it += 1
        ok = res <= tol
    x[:] = xv
    w_out[:] = w
    return it, float(res), bool(ok)


def hm1_sq(f, h):
    n = f.size
    ab = np.empty((3, n))
    ab[0] = -1.0
    ab[1] = 2.0
    ab[2] = -1.0
    u = solve_banded((1, 1), ab, f * h**2, check_finite=False)
    return float(h * (u @ f))
