import math

import numpy as np
import pytest

from catalog import FAMILY_REPS, GRAPHS, ORIGIN_GRAPHS
from oracles import hminus1_dense, linear_step_dense
from porous_soc import _fallback, kernels
from porous_soc.graphs import CoerciveSign, LipschitzSpec, Sign, Stefan
from porous_soc.hspace import Field, Grid, continuum_mode, hminus1_norm
from porous_soc.noise import RngStream
from porous_soc.solver import (SolverConfig, StepError, dt_refinement, energy_residual,
                               implicit_step, integrate_trajectory, lambda_refinement,
                               lp_bound_check, positivity_check)

LINEAR = CoerciveSign(0.0, LipschitzSpec.linear(1.0))
COERCIVE = CoerciveSign(1.0, LipschitzSpec.linear(0.1))


def cfg_for(g, **kw):
    base = dict(graph=g, n=64, dt=1e-3, T=0.05, lam=1e-2)
    base.update(kw)
    return SolverConfig(**base)


def bump(grid, amp=0.2):
    return Field(grid, amp * np.sin(grid.nodes) ** 2)


# --- configuration ---------------------------------------------------------

@pytest.mark.parametrize("bad", [dict(dt=0), dict(lam=-1), dict(T=math.nan), dict(n=1),
                                 dict(record_stride=0), dict(mu=(-1.0,)),
                                 dict(newton_max_iter=0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        cfg_for(COERCIVE, **bad)


def test_config_replace():
    c = cfg_for(COERCIVE)
    d = c.replace(lam=0.5)
    assert d.lam == 0.5 and d.graph == c.graph and c.lam == 1e-2
    assert c.steps == 50


# --- single step -----------------------------------------------------------

@pytest.mark.parametrize("g", ORIGIN_GRAPHS, ids=repr)
def test_zero_is_fixed(g):
    cfg = cfg_for(g)
    X, w = implicit_step(cfg.grid.zeros(), cfg.grid.zeros(), cfg)
    assert np.all(X.values == 0) and np.all(w.values == 0)


@pytest.mark.parametrize("lam", [1e-3, 0.1])
def test_linear_step_closed_form(lam):
    cfg = cfg_for(LINEAR, lam=lam)
    grid = cfg.grid
    s1 = Field(grid, np.sin(grid.nodes))
    X, w = implicit_step(s1, s1, cfg)
    expect = s1.values / (1 + cfg.dt * (1 + lam) * grid.eigenvalues[0])
    np.testing.assert_allclose(X.values, expect, atol=1e-12)
    np.testing.assert_allclose(X.values, linear_step_dense(s1.values, cfg.dt, 1 + lam),
                               atol=1e-12)
    np.testing.assert_allclose(w.values, (1 + lam) * X.values, atol=1e-12)


@pytest.mark.parametrize("g", GRAPHS, ids=repr)
def test_step_residual(g):
    cfg = cfg_for(g, lam=1e-3, dt=1e-3)
    rng = np.random.default_rng(0)
    f = Field(cfg.grid, rng.normal(size=cfg.n) * 0.5)
    X, w = implicit_step(cfg.grid.zeros(), f, cfg)
    lap = np.convolve(np.concatenate(([0], w.values, [0])), [-1, 2, -1], "valid") / cfg.grid.h**2
    assert np.max(np.abs(X.values + cfg.dt * lap - f.values)) <= 1e-9
    code, p, xs, ws = cfg.kernel
    np.testing.assert_allclose(kernels.phi(code, p, xs, ws, cfg.lam, X.values)[0], w.values,
                               atol=1e-8)


@pytest.mark.parametrize("seed, name", list(enumerate(sorted(FAMILY_REPS))))
def test_step_contracts_in_hminus1(seed, name):
    cfg = cfg_for(FAMILY_REPS[name], lam=1e-3)
    rng = np.random.default_rng(seed)
    for _ in range(25):
        a, b = (Field(cfg.grid, rng.normal(size=cfg.n) * rng.uniform(0.01, 1)) for _ in range(2))
        Xa, _ = implicit_step(a, a, cfg)
        Xb, _ = implicit_step(b, b, cfg)
        assert hminus1_dense(Xa.values - Xb.values) <= hminus1_dense(a.values - b.values) + 1e-10


def test_step_error_reports_residual():
    cfg = cfg_for(Sign(1.0), lam=1e-4, dt=1e-2, newton_max_iter=1, newton_tol=1e-15)
    f = Field(cfg.grid, np.random.default_rng(1).normal(size=cfg.n))
    with pytest.raises(StepError) as info:
        implicit_step(f, f, cfg)
    assert info.value.residual > 1e-15


# --- trajectories ----------------------------------------------------------

def test_zero_trajectory():
    cfg = cfg_for(COERCIVE, mu=(1.0,))
    tr = integrate_trajectory(cfg, cfg.grid.zeros(), RngStream(1))
    assert tr.extinction_time == 0.0
    assert all(v == 0 for v in tr.h1norm) and positivity_check(tr) == 0.0
    np.testing.assert_array_equal(energy_residual(tr, cfg), 0.0)


def test_zero_noise_matches_deterministic():
    g = Stefan(0.0, 1.0, 1.0, 2.0)
    x0 = bump(Grid(64))
    a = integrate_trajectory(cfg_for(g, mu=(0.0, 0.0), record_fields=True), x0, RngStream(3))
    b = integrate_trajectory(cfg_for(g, record_fields=True), x0, RngStream(3))
    for x, y in zip(a.fields, b.fields):
        np.testing.assert_array_equal(x, y)


def test_reproducible_given_seed():
    cfg = cfg_for(COERCIVE, mu=(1.0, 0.3), record_fields=True)
    x0 = bump(cfg.grid)
    a = integrate_trajectory(cfg, x0, RngStream(9, 4))
    b = integrate_trajectory(cfg, x0, RngStream(9, 4))
    c = integrate_trajectory(cfg, x0, RngStream(9, 5))
    assert a.h1norm == b.h1norm and a.h1norm != c.h1norm


def test_backends_give_same_trajectory(monkeypatch):
    cfg = cfg_for(COERCIVE, mu=(1.0,), lam=1e-3)
    x0 = bump(cfg.grid)
    a = integrate_trajectory(cfg, x0, RngStream(2))
    for name in ("newton_solve", "phi", "hm1_sq"):
        monkeypatch.setattr(kernels, name, getattr(_fallback, name))
    b = integrate_trajectory(cfg, x0, RngStream(2))
    np.testing.assert_allclose(a.h1norm, b.h1norm, rtol=1e-9, atol=1e-13)


def test_record_stride():
    cfg = cfg_for(COERCIVE, record_stride=7, record_fields=True)
    tr = integrate_trajectory(cfg, bump(cfg.grid))
    assert tr.times[:3] == pytest.approx([0.0, 7e-3, 14e-3])
    assert tr.times[-1] == pytest.approx(cfg.T)
    assert len(tr.fields) == len(tr.times) == len(tr.eta)
    with pytest.raises(ValueError):
        energy_residual(tr, cfg)


def test_eta_is_selection():
    cfg = cfg_for(Sign(1.0), record_fields=True, lam=1e-2)
    tr = integrate_trajectory(cfg, bump(cfg.grid))
    for X, eta in zip(tr.fields[1:], tr.eta[1:]):
        # eta lies in the graph evaluated at the resolvent, |eta| <= rho
        assert np.all(np.abs(eta) <= 1.0 + 1e-9)
        assert np.all(eta[X > cfg.lam] >= 1 - 1e-9)


def test_deterministic_extinction_before_bound():
    cfg = SolverConfig(COERCIVE, n=200, dt=1e-4, T=0.2, lam=1e-3, stop_on_extinction=True)
    x0 = continuum_mode(cfg.grid, 1) * 0.1
    tr = integrate_trajectory(cfg, x0)
    bound = hminus1_norm(x0) / 1.1284
    assert tr.extinction_time is not None and tr.extinction_time <= 1.05 * bound
    assert not tr.violations
    # stopped persistence_steps after the crossing
    assert tr.times[-1] == pytest.approx(tr.extinction_time + 100 * cfg.dt)


def test_violation_is_logged():
    # a loose threshold near |x0|_{-1} under strong noise is crossed both ways
    cfg = cfg_for(LINEAR, eps_ext=0.9, mu=(6.0,), T=0.2, dt=1e-3)
    x0 = bump(cfg.grid)
    found = False
    for tid in range(30):
        tr = integrate_trajectory(cfg, x0, RngStream(0, tid))
        if tr.violations:
            found = True
            assert all(0 < t <= cfg.T for t in tr.violations)
            break
    assert found


# --- diagnostics -----------------------------------------------------------

@pytest.mark.parametrize("g", GRAPHS, ids=repr)
@pytest.mark.parametrize("mu", [(), (1.0, 0.5)])
def test_energy_inequality(g, mu):
    cfg = cfg_for(g, mu=mu, lam=1e-3)
    tr = integrate_trajectory(cfg, bump(cfg.grid), RngStream(5))
    r = energy_residual(tr, cfg)
    assert r.max() <= 1e-8
    assert tr.max_energy_residual <= 1e-8


def test_energy_residual_linear_closed_form():
    cfg = cfg_for(LINEAR, lam=1e-2)
    grid = cfg.grid
    s1 = np.sin(grid.nodes)
    tr = integrate_trajectory(cfg, Field(grid, 0.1 * s1))
    q = 1 / (1 + cfg.dt * (1 + cfg.lam) * grid.eigenvalues[0])
    a = 0.1 * q ** np.arange(cfg.steps + 1)
    s1_h1sq = hminus1_dense(s1) ** 2
    expect = -((a[:-1] - a[1:]) ** 2) * s1_h1sq
    np.testing.assert_allclose(energy_residual(tr, cfg), expect, atol=1e-12, rtol=1e-6)


def test_positivity_deterministic_stefan():
    cfg = cfg_for(Stefan(0.0, 1.0, 1.0, 1.0), lam=1e-3)
    rng = np.random.default_rng(4)
    tr = integrate_trajectory(cfg, Field(cfg.grid, rng.uniform(0, 1, cfg.n)))
    assert tr.x0_nonnegative and positivity_check(tr) >= -1e-8


def test_positivity_reports_raw_min_for_signed_data():
    cfg = cfg_for(COERCIVE)
    x0 = Field(cfg.grid, np.sin(2 * cfg.grid.nodes))
    tr = integrate_trajectory(cfg, x0)
    assert not tr.x0_nonnegative
    assert positivity_check(tr) < 0


def test_lp_bound_deterministic_nonincreasing():
    cfg = cfg_for(Stefan(0.0, 1.0, 1.0, 2.0), record_fields=True)
    tr = integrate_trajectory(cfg, bump(cfg.grid, 1.0))
    for p in (2, 3, 4):
        s, rate = lp_bound_check(tr, p)
        assert np.all(np.diff(s) <= 1e-8) and rate <= 1e-8


def test_lp_bound_zero_and_ensemble():
    cfg = cfg_for(COERCIVE, record_fields=True)
    s, rate = lp_bound_check(integrate_trajectory(cfg, cfg.grid.zeros()), 4)
    assert np.all(s == 0) and rate == 0.0
    noisy = cfg.replace(mu=(1.5,), T=0.1)
    trs = [integrate_trajectory(noisy, bump(cfg.grid, 1.0), RngStream(1, i)) for i in range(8)]
    s, rate = lp_bound_check(trs, 4)
    assert np.all(np.isfinite(s)) and math.isfinite(rate)
    with pytest.raises(ValueError):
        lp_bound_check(trs, 1.5)


def test_absorption_under_noise():
    cfg = cfg_for(Sign(1.0), mu=(2.0, 1.0, 0.5), record_fields=True)
    tr = integrate_trajectory(cfg, cfg.grid.zeros(), RngStream(8))
    assert all(np.all(x == 0) for x in tr.fields)


def test_lambda_refinement_decreasing():
    cfg = SolverConfig(COERCIVE, n=64, dt=1e-3, T=0.1, lam=1e-2, mu=(0.8,))
    lams, inc = lambda_refinement(cfg, bump(cfg.grid), seed=3)
    assert len(inc) == 2 and inc[0] > inc[1] > 0


def test_dt_refinement_first_order():
    cfg = SolverConfig(LINEAR, n=32, dt=4e-3, T=0.2, lam=1e-2)
    x0 = Field(cfg.grid, np.sin(cfg.grid.nodes) + 0.3 * np.sin(3 * cfg.grid.nodes))
    dts, errs, orders = dt_refinement(cfg, x0, levels=4)
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert min(orders) >= 0.9
