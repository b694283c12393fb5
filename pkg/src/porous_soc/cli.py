"""Command-line front end: ``porous-soc {simulate,ensemble,gamma,bound,convergence}``.

Exit codes: 0 success, 2 configuration or parameter error, 3 solver error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .config import (ENSEMBLE_SCHEMA, SIMULATE_SCHEMA, ConfigError, build_extinction_config,
                     build_initial, build_solver_config, defaults_yaml, load_config)
from .extinction import (EnsembleError, admissibility_check, deterministic_bound,
                         extinction_bound, run_ensemble)
from .hspace import GAMMA_CONTINUUM, Grid, estimate_gamma
from .noise import NoiseModel, RngStream, cn_constant
from .solver import StepError, dt_refinement, integrate_trajectory, lambda_refinement

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

TRAJECTORY_COLUMNS = ("t", "h1norm", "l2norm", "l1norm", "minX", "dissipation")


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write_json(path: Path, payload: dict, schema: dict):
    jsonschema.validate(payload, schema)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_trajectory_csv(path: Path, traj):
    a = traj.arrays()
    cols = [a["times"], a["h1norm"], a["l2norm"], a["l1norm"], a["minX"], a["dissipation"]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output"]["dir"] = args.out
    if args.record:
        cfg["output"]["record"] = True
    out = Path(cfg["output"]["dir"])
    return cfg, out


def cmd_simulate(args) -> int:
    cfg, out = _load(args)
    scfg = build_solver_config(cfg, stop_on_extinction=False,
                               record_fields=cfg["output"]["record"])
    x0 = build_initial(cfg, shifted=True)
    try:
        traj = integrate_trajectory(scfg, x0, RngStream(cfg["seed"], 0))
    except StepError as exc:
        print(f"solver error at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out / "trajectory.csv", traj)
    if cfg["output"]["record"]:
        np.savetxt(out / "fields.csv", np.column_stack([traj.times, np.array(traj.fields)]),
                   delimiter=",", header="t,X_1..X_n")
    rho = cfg["model"].get("rho")
    det = None
    if rho:
        det = deterministic_bound(traj.h1norm[0], rho, estimate_gamma(scfg.n))
    summary = {
        "extinction_time": traj.extinction_time,
        "deterministic_bound": det,
        "final": {"t": traj.times[-1], "h1norm": traj.h1norm[-1], "l2norm": traj.l2norm[-1],
                  "l1norm": traj.l1norm[-1]},
        "max_energy_residual": traj.max_energy_residual,
        "min_x": min(traj.minX),
        "steps": scfg.steps,
        "violations": traj.violations,
        "params": {"config": cfg},
        "timestamp": _timestamp(),
    }
    _write_json(out / "summary.json", summary, SIMULATE_SCHEMA)
    print(f"extinction_time={traj.extinction_time} max_energy_residual="
          f"{traj.max_energy_residual:.3e} min_x={summary['min_x']:.3e} -> {out}")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    cfg, out = _load(args)
    scfg = build_solver_config(cfg)
    ext = build_extinction_config(cfg)
    x0 = build_initial(cfg, shifted=False)
    try:
        res = run_ensemble(scfg, ext, x0, seed=cfg["seed"], workers=cfg["workers"])
    except EnsembleError as exc:
        print(f"ensemble error: {exc}", file=sys.stderr)
        for tid, msg in sorted(exc.partial["failures"].items())[:5]:
            print(f"  trajectory {tid}: {msg}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out.mkdir(parents=True, exist_ok=True)
    payload = res.to_dict()
    payload["timestamp"] = _timestamp()
    _write_json(out / "ensemble.json", payload, ENSEMBLE_SCHEMA)
    with open(out / "extinction_times.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("trajectory_id", "extinction_time", "censored"))
        for tid, t in enumerate(res.extinction_times):
            w.writerow((tid, "" if t is None else repr(t), int(t is None)))
    if cfg["output"]["record"]:
        tdir = out / "trajectories"
        tdir.mkdir(exist_ok=True)
        rec = scfg.replace(stop_on_extinction=True, eps_ext=ext.eps_ext)
        shifted = build_initial(cfg, shifted=True)
        for tid in range(ext.M):
            tr = integrate_trajectory(rec, shifted, RngStream(cfg["seed"], tid), trajectory_id=tid)
            write_trajectory_csv(tdir / f"trajectory_{tid:05d}.csv", tr)
    tag = "" if res.admissible else " (exploratory: outside admissible region)"
    print(f"M={res.M} |x|_-1={res.x_norm:.6g} gamma={res.gamma_est:.6g} C_N={res.c_n:.6g}{tag}")
    print(f"{'n':>8} {'p_hat':>8} {'ci_lo':>8} {'ci_hi':>8} {'bound':>8}")
    for r in res.horizons:
        flag = " vacuous" if r.vacuous else ""
        print(f"{r.n:8.4g} {r.p_hat:8.4f} {r.ci_lo:8.4f} {r.ci_hi:8.4f} {r.bound:8.4f}{flag}")
    return EXIT_OK


def cmd_gamma(args) -> int:
    ns = args.n or [10, 100, 1000, 2000]
    if any(n < 2 for n in ns):
        raise ConfigError("grid sizes must be >= 2")
    print(f"{'n':>8} {'gamma_est':>12} {'rel_to_continuum':>18}")
    for n in ns:
        g = estimate_gamma(n)
        print(f"{n:8d} {g:12.6f} {g / GAMMA_CONTINUUM - 1:18.3e}")
    print(f"continuum 2/sqrt(pi) = {GAMMA_CONTINUUM:.6f}")
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.x_norm < 0 or args.rho <= 0:
        raise ConfigError("need x_norm >= 0 and rho > 0")
    gamma = args.gamma if args.gamma is not None else estimate_gamma(args.grid)
    if args.cn is not None:
        c_n = args.cn
    else:
        c_n = cn_constant(NoiseModel(Grid(2), tuple(args.mu or ())))
    if gamma <= 0 or c_n < 0:
        raise ConfigError("need gamma > 0 and C_N >= 0")
    horizons = args.horizons or [0.05, 0.1, 0.2, 0.5, 1.0]
    if any(h <= 0 for h in horizons):
        raise ConfigError("horizons must be positive")
    adm = admissibility_check(args.x_norm, args.rho, gamma, c_n)
    print(f"x_norm={args.x_norm} rho={args.rho} gamma={gamma:.6f} C_N={c_n:.6f} "
          f"admissible={adm} deterministic_bound={deterministic_bound(args.x_norm, args.rho, gamma):.6f}")
    print(f"{'n':>8} {'bound':>10}")
    for h in horizons:
        b = extinction_bound(args.x_norm, args.rho, gamma, c_n, h, clamp=False)
        print(f"{h:8.4g} {max(b, 0.0):10.6f}{'  vacuous' if b <= 0 else ''}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg, _ = _load(args)
    scfg = build_solver_config(cfg)
    x0 = build_initial(cfg, shifted=True)
    lams = args.lambdas or [1e-1, 1e-2, 1e-3]
    try:
        lams, inc = lambda_refinement(scfg, x0, lams, seed=cfg["seed"])
        dts, errs, orders = dt_refinement(scfg, x0, levels=args.levels)
    except StepError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print("lambda refinement (shared noise path), L2(0,T;L2) increments")
    print(f"{'lam_i':>10} {'lam_i+1':>10} {'increment':>12}")
    for a, b, d in zip(lams, lams[1:], inc):
        print(f"{a:10.3g} {b:10.3g} {d:12.4e}")
    dec = all(b < a for a, b in zip(inc, inc[1:]))
    print(f"decreasing: {dec}")
    print("dt refinement (deterministic), final-time L2 error vs finest run")
    print(f"{'dt':>10} {'error':>12}")
    for dt, e in zip(dts, errs):
        print(f"{dt:10.3g} {e:12.4e}")
    if orders:
        print("observed orders: " + " ".join(f"{o:.2f}" for o in orders))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="porous-soc", description=__doc__.splitlines()[0])
    p.add_argument("--print-defaults", action="store_true",
                   help="print the default configuration as YAML and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--record", action="store_true",
                        help="also write recorded fields / per-trajectory CSVs")
        sp.add_argument("--print-defaults", action="store_true", default=argparse.SUPPRESS)

    common(sub.add_parser("simulate", help="run one trajectory"))
    common(sub.add_parser("ensemble", help="Monte Carlo extinction study"))
    sp = sub.add_parser("convergence", help="lambda and dt refinement study")
    common(sp)
    sp.add_argument("--lambdas", type=float, nargs="+")
    sp.add_argument("--levels", type=int, default=3)
    sp = sub.add_parser("gamma", help="embedding constant over a grid-size sweep")
    sp.add_argument("--n", type=int, nargs="+")
    sp = sub.add_parser("bound", help="extinction probability bound over horizons")
    sp.add_argument("--x-norm", type=float, required=True)
    sp.add_argument("--rho", type=float, default=1.0)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--grid", type=int, default=2000, help="grid size for gamma if not given")
    sp.add_argument("--cn", type=float)
    sp.add_argument("--mu", type=float, nargs="*")
    sp.add_argument("--horizons", type=float, nargs="+")
    return p


COMMANDS = {"simulate": cmd_simulate, "ensemble": cmd_ensemble, "gamma": cmd_gamma,
            "bound": cmd_bound, "convergence": cmd_convergence}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.print_defaults:
        sys.stdout.write(defaults_yaml())
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
