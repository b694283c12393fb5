"""Extinction times, the probability lower bound, and Monte Carlo ensembles.

For ``Psi = rho sign + tilde`` with multiplicative noise of constant
``C_N = (pi/4) sum (1 + k)^2 mu_k^2`` and initial energy ``|x|_{-1}``,

    P(tau <= t) >= 1 - |x|_{-1} / (rho gamma) / I(t),    I(t) = int_0^t exp(-C_N s) ds,

where ``gamma`` is the L^1 / H^-1 embedding constant. Without noise the
state is extinct by ``|x|_{-1} / (rho gamma)``.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import beta

from .hspace import Field, estimate_gamma, hminus1_norm
from .noise import RngStream, cn_constant
from .solver import SolverConfig, StepError, Trajectory, integrate_trajectory

__all__ = [
    "ExtinctionConfig",
    "EnsembleResult",
    "EnsembleError",
    "ExtinctionWarning",
    "detect_extinction",
    "extinction_bound",
    "deterministic_bound",
    "admissibility_check",
    "clopper_pearson",
    "soc_shift",
    "soc_unshift",
    "run_ensemble",
]


class ExtinctionWarning(UserWarning):
    """A trajectory left the extinction threshold after crossing it."""


class EnsembleError(RuntimeError):
    def __init__(self, message: str, partial: dict):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class ExtinctionConfig:
    rho: float = 1.0
    eps_ext: float = 1e-6
    horizons: tuple[float, ...] = (0.05, 0.1, 0.2, 0.5)
    M: int = 400
    x_c: float = 0.0
    persistence_steps: int = 100
    confidence: float = 0.99

    def __post_init__(self):
        hz = tuple(float(h) for h in self.horizons)
        object.__setattr__(self, "horizons", hz)
        if not (self.rho > 0 and self.eps_ext > 0):
            raise ValueError("rho and eps_ext must be positive")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not hz or any(h <= 0 for h in hz) or any(b <= a for a, b in zip(hz, hz[1:])):
            raise ValueError(f"horizons must be positive and strictly increasing, got {hz}")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")


@dataclass
class HorizonRow:
    n: float
    p_hat: float
    ci_lo: float
    ci_hi: float
    bound: float
    vacuous: bool


@dataclass
class EnsembleResult:
    params: dict
    x_norm: float
    rho: float
    gamma_est: float
    c_n: float
    admissible: bool
    horizons: list[HorizonRow]
    extinction_times: list[float | None]
    violations: dict[int, list[float]] = field(default_factory=dict)

    @property
    def M(self) -> int:
        return len(self.extinction_times)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "x_norm": self.x_norm,
            "rho": self.rho,
            "gamma_est": self.gamma_est,
            "c_n": self.c_n,
            "admissible": self.admissible,
            "exploratory": not self.admissible,
            "horizons": [asdict(r) for r in self.horizons],
            "extinction_times": self.extinction_times,
            "violations": {str(k): v for k, v in sorted(self.violations.items())},
        }


def detect_extinction(traj: Trajectory, eps_ext: float, x0_norm: float) -> float | None:
    """First recorded time after which ``|X|_{-1} <= eps_ext * x0_norm`` for
    the rest of the record; ``None`` if the final sample is above threshold.

    Earlier crossings that were later undone are reported with an
    :class:`ExtinctionWarning` and do not count.
    """
    if not eps_ext > 0:
        raise ValueError(f"eps_ext must be positive, got {eps_ext}")
    thr = eps_ext * x0_norm
    h1 = np.asarray(traj.h1norm)
    t = np.asarray(traj.times)
    if h1.size == 0:
        return None
    above = np.flatnonzero(h1 > thr)
    if above.size == 0:
        return float(t[0])
    last = int(above[-1])
    if np.any(h1[:last] <= thr):
        warnings.warn(f"trajectory {traj.trajectory_id} rose above the extinction threshold "
                      f"after crossing it", ExtinctionWarning, stacklevel=2)
    return float(t[last + 1]) if last + 1 < h1.size else None


def _check_params(rho: float, gamma: float):
    if not (rho > 0 and gamma > 0):
        raise ValueError(f"rho and gamma must be positive, got rho={rho}, gamma={gamma}")


def extinction_bound(x_norm: float, rho: float, gamma: float, c_n: float, n: float,
                     clamp: bool = True) -> float:
    """Lower bound on ``P(tau <= n)``; clamped at 0 where it is vacuous."""
    _check_params(rho, gamma)
    if not n > 0:
        raise ValueError(f"horizon must be positive, got {n}")
    if c_n < 0:
        raise ValueError(f"C_N must be nonnegative, got {c_n}")
    integral = n if c_n == 0 else -math.expm1(-c_n * n) / c_n
    b = 1.0 - x_norm / (rho * gamma) / integral
    return max(b, 0.0) if clamp else b


def deterministic_bound(x_norm: float, rho: float, gamma: float) -> float:
    """Time by which the noise-free state is extinct."""
    _check_params(rho, gamma)
    return x_norm / (rho * gamma)


def admissibility_check(x_norm: float, rho: float, gamma: float, c_n: float) -> bool:
    return c_n == 0 or x_norm * c_n < rho * gamma


def clopper_pearson(k: int, m: int, confidence: float = 0.99) -> tuple[float, float]:
    """Exact two-sided binomial interval for ``k`` successes in ``m`` trials."""
    a = 1.0 - confidence
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, m - k + 1))
    hi = 1.0 if k == m else float(beta.ppf(1 - a / 2, k + 1, m - k))
    return lo, hi


def soc_shift(x: Field, x_c: float) -> Field:
    return Field(x.grid, x.values - x_c)


def soc_unshift(x: Field, x_c: float) -> Field:
    return Field(x.grid, x.values + x_c)


def _run_one(args):
    cfg, x0, seed, tid = args
    try:
        tr = integrate_trajectory(cfg, x0, RngStream(seed, tid), trajectory_id=tid)
    except StepError as exc:
        return tid, None, None, str(exc)
    return tid, tr.extinction_time, tr.violations, None


def run_ensemble(cfg: SolverConfig, ext: ExtinctionConfig, x0: Field, seed: int = 0,
                 workers: int = 1) -> EnsembleResult:
    """``M`` trajectories with ids ``0..M-1`` from ``x0 - x_c``.

    Trajectories stop after persistent extinction; runs that never go
    extinct are censored at ``cfg.T`` and count as surviving, which can
    only lower the empirical probability.
    """
    if cfg.T < ext.horizons[-1]:
        raise ValueError(f"horizon {ext.horizons[-1]} exceeds T={cfg.T}")
    run_cfg = cfg.replace(stop_on_extinction=True, eps_ext=ext.eps_ext,
                          persistence_steps=ext.persistence_steps, record_stride=10**9,
                          record_fields=False)
    shifted = soc_shift(x0, ext.x_c)
    x_norm = hminus1_norm(shifted)
    gamma = estimate_gamma(cfg.n)
    c_n = cn_constant(cfg.noise)

    jobs = [(run_cfg, shifted, seed, tid) for tid in range(ext.M)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_run_one, jobs, chunksize=max(1, ext.M // (4 * workers))))
    else:
        out = [_run_one(j) for j in jobs]
    out.sort(key=lambda r: r[0])

    times = [r[1] for r in out]
    violations = {r[0]: r[2] for r in out if r[2]}
    failed = {r[0]: r[3] for r in out if r[3] is not None}
    params = {"n": cfg.n, "dt": cfg.dt, "lam": cfg.lam, "T": cfg.T, "mu": list(cfg.mu),
              "graph": cfg.graph.to_dict(), "eps_ext": ext.eps_ext, "M": ext.M,
              "x_c": ext.x_c, "seed": seed, "confidence": ext.confidence}
    if failed:
        raise EnsembleError(f"{len(failed)} of {ext.M} trajectories failed",
                            {"extinction_times": times, "failures": failed, "params": params})

    tau = np.array([np.inf if t is None else t for t in times])
    rows = []
    for hz in ext.horizons:
        k = int(np.sum(tau <= hz + 1e-12))
        lo, hi = clopper_pearson(k, ext.M, ext.confidence)
        raw = extinction_bound(x_norm, ext.rho, gamma, c_n, hz, clamp=False)
        rows.append(HorizonRow(hz, k / ext.M, lo, hi, max(raw, 0.0), raw <= 0))
    return EnsembleResult(params, x_norm, ext.rho, gamma, c_n,
                          admissibility_check(x_norm, ext.rho, gamma, c_n), rows, times,
                          violations)
