"""Drift-implicit Euler-Maruyama for ``dX + A(g_lam(X) + lam X) dt = sum_k mu_k X e_k dbeta_k``.

Each step solves

    X + dt * A_h w = f,    w = g_lam(X) + lam * X,    w = 0 on the boundary,

with ``f = X_prev * (1 + sum_k mu_k e_k dbeta_k)`` built from the start-of-step
state. ``g_lam`` is the Yosida approximation of the graph, or the smoothed
sign plus Lipschitz part for :class:`~porous_soc.graphs.CoerciveSign`.

Because the step is the resolvent of a monotone operator in H^-1 it satisfies

    |X|_{-1}^2 + 2 dt <w, X>_2 = |f|_{-1}^2 - |X - f|_{-1}^2,

so the discrete energy inequality holds exactly up to the solver tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .graphs import GraphSpec
from .hspace import Field, Grid
from .noise import NoiseModel, RngStream, noise_field

__all__ = [
    "SolverConfig",
    "Trajectory",
    "StepError",
    "implicit_step",
    "integrate_trajectory",
    "energy_residual",
    "positivity_check",
    "lp_bound_check",
    "trajectory_l2_distance",
    "lambda_refinement",
    "dt_refinement",
]

#: retry budget multiplier when the first Newton attempt stalls
RETRY_FACTOR = 4


class StepError(ArithmeticError):
    """Nonlinear solve failed; carries the final residual and the step index."""

    def __init__(self, message: str, residual: float, step: int | None = None, partial=None):
        super().__init__(message)
        self.residual = residual
        self.step = step
        self.partial = partial


@dataclass(frozen=True)
class SolverConfig:
    graph: GraphSpec
    n: int = 400
    dt: float = 1e-4
    T: float = 1.0
    lam: float = 1e-3
    mu: tuple[float, ...] = ()
    record_stride: int = 1
    newton_tol: float = 1e-11
    newton_max_iter: int = 50
    eps_ext: float = 1e-6
    persistence_steps: int = 100
    stop_on_extinction: bool = False
    record_fields: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        for name in ("dt", "T", "lam", "newton_tol", "eps_ext"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")
        if self.newton_max_iter < 1 or self.persistence_steps < 0:
            raise ValueError("newton_max_iter must be >= 1 and persistence_steps >= 0")
        Grid(self.n)
        NoiseModel(Grid(self.n), self.mu)

    @cached_property
    def grid(self) -> Grid:
        return Grid(self.n)

    @cached_property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.grid, self.mu)

    @cached_property
    def kernel(self):
        return self.graph.kernel_spec(self.lam)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def replace(self, **changes) -> "SolverConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return SolverConfig(**d)


@dataclass
class Trajectory:
    """Strided record of one run.

    ``dissipation[k]`` is ``<w, X>_2`` at the recorded step and
    ``forcing_h1sq[k]`` is ``|f|_{-1}^2`` of the forcing that produced it
    (``|x0|_{-1}^2`` at ``t = 0``). ``eta`` is the selection ``w - lam X``.
    """

    times: list = field(default_factory=list)
    h1norm: list = field(default_factory=list)
    l2norm: list = field(default_factory=list)
    l1norm: list = field(default_factory=list)
    minX: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    forcing_h1sq: list = field(default_factory=list)
    newton_iters: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    eta: list = field(default_factory=list)
    extinction_time: float | None = None
    violations: list = field(default_factory=list)
    max_energy_residual: float = 0.0
    trajectory_id: int = 0
    x0_nonnegative: bool = True

    def __len__(self):
        return len(self.times)

    def arrays(self) -> dict[str, np.ndarray]:
        keys = ("times", "h1norm", "l2norm", "l1norm", "minX", "dissipation", "forcing_h1sq")
        return {k: np.asarray(getattr(self, k), dtype=float) for k in keys}

    def _record(self, t, X, w, f_h1sq, h, h1, iters, lam, keep_fields):
        self.times.append(t)
        self.h1norm.append(h1)
        self.l2norm.append(math.sqrt(h * float(X @ X)))
        self.l1norm.append(h * float(np.abs(X).sum()))
        self.minX.append(float(X.min()))
        self.dissipation.append(h * float(w @ X))
        self.forcing_h1sq.append(f_h1sq)
        self.newton_iters.append(iters)
        if keep_fields:
            self.fields.append(X.copy())
            self.eta.append(w - lam * X)


def _solve(forcing: np.ndarray, guess: np.ndarray, cfg: SolverConfig, coef: float):
    code, params, xs, ws = cfg.kernel
    x = np.array(guess, dtype=float)
    w = np.empty_like(x)
    it, res, ok = kernels.newton_solve(forcing, x, code, params, xs, ws, cfg.lam, coef,
                                       cfg.newton_tol, cfg.newton_max_iter, w)
    if not ok:
        # restart from the forcing with a larger budget before giving up
        x = np.array(forcing, dtype=float)
        it2, res, ok = kernels.newton_solve(forcing, x, code, params, xs, ws, cfg.lam, coef,
                                            cfg.newton_tol, RETRY_FACTOR * cfg.newton_max_iter, w)
        it += it2
    if not ok:
        raise StepError(f"Newton failed: residual {res:.3e} > tol {cfg.newton_tol:.1e} "
                        f"(dt={cfg.dt}, lam={cfg.lam})", res)
    return x, w, it


def implicit_step(X_prev: Field, forcing: Field, cfg: SolverConfig) -> tuple[Field, Field]:
    """Solve ``X + dt A_h w = forcing``; returns ``(X, w)``.

    ``X_prev`` only seeds the Newton iteration.
    """
    if forcing.grid.n != cfg.n or X_prev.grid.n != cfg.n:
        raise ValueError("field grid does not match cfg.n")
    x, w, _ = _solve(np.ascontiguousarray(forcing.values), X_prev.values, cfg,
                     cfg.dt / cfg.grid.h**2)
    return Field(cfg.grid, x), Field(cfg.grid, w)


def integrate_trajectory(cfg: SolverConfig, x0: Field, rng: RngStream | None = None,
                         trajectory_id: int | None = None) -> Trajectory:
    """Run from ``x0`` to ``cfg.T`` (or to persistent extinction if requested).

    Extinction is tracked on every step: the state is extinct once
    ``|X|_{-1} <= eps_ext * |x0|_{-1}``; a later exceedance is logged in
    ``violations`` and resets the clock. With ``stop_on_extinction`` the run
    ends ``persistence_steps`` steps after the crossing.
    """
    grid, h = cfg.grid, cfg.grid.h
    if x0.grid.n != cfg.n:
        raise ValueError("x0 grid does not match cfg.n")
    if rng is None:
        rng = RngStream(0, trajectory_id or 0)
    noisy = not cfg.noise.is_deterministic
    coef = cfg.dt / h**2
    X = np.array(x0.values, dtype=float)
    code, params, xs, ws = cfg.kernel
    w, _ = kernels.phi(code, params, xs, ws, cfg.lam, X)

    traj = Trajectory(trajectory_id=rng.trajectory_id if trajectory_id is None else trajectory_id,
                      x0_nonnegative=bool(X.min() >= 0.0))
    h1sq0 = prev_h1sq = kernels.hm1_sq(X, h)
    h1 = math.sqrt(max(h1sq0, 0.0))
    threshold = cfg.eps_ext * h1
    traj._record(0.0, X, w, h1sq0, h, h1, 0, cfg.lam, cfg.record_fields)
    crossed = 0 if h1 <= threshold else None

    for k in range(1, cfg.steps + 1):
        t = k * cfg.dt
        if noisy:
            f = X * (1.0 + noise_field(cfg.noise, cfg.dt, rng))
        else:
            f = X
        try:
            X, w, iters = _solve(f, X, cfg, coef)
        except StepError as exc:
            exc.step, exc.partial = k, traj
            raise
        h1sq = kernels.hm1_sq(X, h)
        h1 = math.sqrt(max(h1sq, 0.0))
        f_h1sq = kernels.hm1_sq(f, h) if noisy else prev_h1sq
        resid = h1sq + 2.0 * cfg.dt * h * float(w @ X) - f_h1sq
        if resid > traj.max_energy_residual:
            traj.max_energy_residual = resid
        prev_h1sq = h1sq
        if k % cfg.record_stride == 0 or k == cfg.steps:
            traj._record(t, X, w, f_h1sq, h, h1, iters, cfg.lam, cfg.record_fields)
        if h1 <= threshold:
            if crossed is None:
                crossed = k
            elif cfg.stop_on_extinction and k - crossed >= cfg.persistence_steps:
                if traj.times[-1] != t:
                    traj._record(t, X, w, f_h1sq, h, h1, iters, cfg.lam, cfg.record_fields)
                break
        elif crossed is not None:
            traj.violations.append(t)
            crossed = None

    if crossed is not None:
        traj.extinction_time = crossed * cfg.dt
    return traj


def energy_residual(traj: Trajectory, cfg: SolverConfig) -> np.ndarray:
    """Per-step ``|X_{k+1}|^2_{-1} + 2 dt <w, X_{k+1}>_2 - |f_k|^2_{-1}``; all ``<= 0`` up to tolerance."""
    if cfg.record_stride != 1:
        raise ValueError("energy residual needs a trajectory recorded every step")
    a = traj.arrays()
    return a["h1norm"][1:] ** 2 + 2.0 * cfg.dt * a["dissipation"][1:] - a["forcing_h1sq"][1:]


def positivity_check(traj: Trajectory) -> float:
    """Minimum of ``X`` over all recorded times and nodes."""
    return float(min(traj.minX)) if traj.minX else 0.0


def lp_bound_check(traj: Trajectory | Sequence[Trajectory], p: float = 2.0,
                   grid: Grid | None = None) -> tuple[np.ndarray, float]:
    """``|X(t)|_p^p`` (ensemble mean for a list) and the least rate ``C`` with
    ``s(t) <= s(0) exp(C t)`` on the recorded mesh.

    Trajectories must carry fields unless ``p == 2``.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    trajs = [traj] if isinstance(traj, Trajectory) else list(traj)
    series = []
    for tr in trajs:
        if p == 2 and not tr.fields:
            series.append(np.asarray(tr.l2norm) ** 2)
            continue
        if not tr.fields:
            raise ValueError("lp_bound_check needs recorded fields for p != 2")
        hh = grid.h if grid is not None else math.pi / (tr.fields[0].size + 1)
        series.append(np.array([hh * np.sum(np.abs(x) ** p) for x in tr.fields]))
    m = min(s.size for s in series)
    mean = np.mean([s[:m] for s in series], axis=0)
    t = np.asarray(trajs[0].times[:m])
    ok = (t > 0) & (mean > 0)
    if mean[0] <= 0 or not ok.any():
        return mean, 0.0
    rate = float(np.max(np.log(mean[ok] / mean[0]) / t[ok]))
    return mean, rate


def trajectory_l2_distance(a: Trajectory, b: Trajectory, dt: float, grid: Grid) -> float:
    """Discrete ``L^2(0, T; L^2)`` distance of two runs recorded on the same mesh."""
    m = min(len(a.fields), len(b.fields))
    if m == 0:
        raise ValueError("trajectories carry no fields")
    d = np.array([np.sum((x - y) ** 2) for x, y in zip(a.fields[:m], b.fields[:m])])
    stride_dt = (a.times[1] - a.times[0]) if m > 1 else dt
    return math.sqrt(grid.h * stride_dt * d.sum())


def lambda_refinement(cfg: SolverConfig, x0: Field, lams: Sequence[float] = (1e-1, 1e-2, 1e-3),
                      seed: int = 0, trajectory_id: int = 0) -> tuple[list[float], list[float]]:
    """Runs at each ``lam`` on a shared noise path; returns ``(lams, increments)``
    with ``increments[i] = |X_{lam_i} - X_{lam_{i+1}}|_{L^2(L^2)}``."""
    runs = []
    for lam in lams:
        c = cfg.replace(lam=lam, record_fields=True, stop_on_extinction=False)
        runs.append(integrate_trajectory(c, x0, RngStream(seed, trajectory_id)))
    inc = [trajectory_l2_distance(runs[i], runs[i + 1], cfg.dt, cfg.grid)
           for i in range(len(runs) - 1)]
    return list(lams), inc


def dt_refinement(cfg: SolverConfig, x0: Field, levels: int = 4) -> tuple[list[float], list[float], list[float]]:
    """Deterministic runs halving ``dt``; returns ``(dts, errors, orders)``.

    Errors are final-time L^2 differences to the finest run.
    """
    dts = [cfg.dt / 2**i for i in range(levels + 1)]
    finals = []
    for dt in dts:
        c = cfg.replace(dt=dt, mu=(), record_stride=10**9, stop_on_extinction=False,
                        record_fields=True)
        finals.append(integrate_trajectory(c, x0).fields[-1])
    ref = finals[-1]
    h = cfg.grid.h
    errs = [math.sqrt(h * float(np.sum((x - ref) ** 2))) for x in finals[:-1]]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)
              if errs[i + 1] > 0]
    return dts[:-1], errs, orders
