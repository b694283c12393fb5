"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 400] [--repeat 5]

Times one implicit step (``newton_solve``), the pointwise map ``phi`` and
the H^-1 norm ``hm1_sq`` for each graph family, and a short trajectory.
"""
import argparse
import timeit

import numpy as np

from porous_soc import _fallback
from porous_soc.graphs import CoerciveSign, LipschitzSpec, PowerSign, Sign, Stefan
from porous_soc.hspace import continuum_mode
from porous_soc.solver import SolverConfig, integrate_trajectory

try:
    from porous_soc import _kernels
except ImportError:
    _kernels = None

GRAPHS = {
    "coercive_sign": CoerciveSign(1.0, LipschitzSpec.linear(0.1)),
    "sign": Sign(1.0),
    "stefan": Stefan(0.0, 1.0, 1.0, 2.0),
    "power_sign": PowerSign(0.5, 1.0),
}


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_graph(mod, cfg, f, repeat):
    code, params, xs, ws = cfg.kernel
    coef = cfg.dt / cfg.grid.h**2
    x, w = np.empty_like(f), np.empty_like(f)

    def step():
        x[:] = f
        mod.newton_solve(f, x, code, params, xs, ws, cfg.lam, coef, 1e-11, 50, w)

    return {
        "newton_solve": best(step, repeat, 20),
        "phi": best(lambda: mod.phi(code, params, xs, ws, cfg.lam, f), repeat, 200),
        "hm1_sq": best(lambda: mod.hm1_sq(f, cfg.grid.h), repeat, 200),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        raise SystemExit("compiled kernels not built; run pip install -e . --no-build-isolation")

    print(f"{'graph':<14} {'kernel':<13} {'cython_us':>10} {'python_us':>10} {'speedup':>8}")
    for name, g in GRAPHS.items():
        cfg = SolverConfig(g, n=args.n, dt=1e-4, lam=1e-3)
        f = (continuum_mode(cfg.grid, 1) * 0.1).values.copy()
        fast = bench_graph(_kernels, cfg, f, args.repeat)
        slow = bench_graph(_fallback, cfg, f, args.repeat)
        for k in fast:
            print(f"{name:<14} {k:<13} {fast[k] * 1e6:10.1f} {slow[k] * 1e6:10.1f} "
                  f"{slow[k] / fast[k]:8.1f}")

    # end to end through the solver; the backend is bound at import, so swap it
    import porous_soc.solver as solver_mod

    cfg = SolverConfig(GRAPHS["coercive_sign"], n=args.n, dt=1e-4, T=0.02, lam=1e-3, mu=(1.0,))
    x0 = continuum_mode(cfg.grid, 1) * 0.1
    times = {}
    for label, mod in (("cython", _kernels), ("python", _fallback)):
        solver_mod.kernels = mod
        times[label] = best(lambda: integrate_trajectory(cfg, x0), 3, 1)
    print(f"trajectory ({cfg.steps} steps, n={args.n}): cython {times['cython']:.3f}s, "
          f"python {times['python']:.3f}s, speedup {times['python'] / times['cython']:.1f}")


if __name__ == "__main__":
    main()
