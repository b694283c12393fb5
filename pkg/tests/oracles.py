"""Independent reference computations used by the tests.

Nothing here calls into the closed forms or kernels it is checked against.
"""
import math

import numpy as np


def resolvent_oracle(g, lam, x, iters=400):
    """Bisection for ``y`` with ``x in y + lam * g(y)`` using only ``g.eval``."""
    r = 1.0 + abs(x)
    lo, hi = x - r, x + r
    while lo + lam * g.eval(lo).hi >= x:
        lo -= r
        r *= 2
    r = 1.0 + abs(x)
    while hi + lam * g.eval(hi).lo <= x:
        hi += r
        r *= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        I = g.eval(mid)
        if mid + lam * I.lo > x:
            hi = mid
        elif mid + lam * I.hi < x:
            lo = mid
        else:
            return mid
    return 0.5 * (lo + hi)


def yosida_oracle(g, lam, x):
    return (x - resolvent_oracle(g, lam, x)) / lam


def laplacian_matrix(n):
    h = math.pi / (n + 1)
    return (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h**2


def hminus1_dense(f):
    n = f.size
    h = math.pi / (n + 1)
    return math.sqrt(h * f @ np.linalg.solve(laplacian_matrix(n), f))


def cn_direct(mu):
    s = 0.0
    for k, m in enumerate(mu, start=1):
        s += (1 + k) ** 2 * m**2
    return math.pi / 4 * s


def linear_step_dense(f, dt, slope):
    """``X + dt A (slope X) = f`` by a dense solve."""
    n = f.size
    return np.linalg.solve(np.eye(n) + dt * slope * laplacian_matrix(n), f)
