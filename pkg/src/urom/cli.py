"""Command-line front end.

Four commands: solve (one run, trace.csv + summary.json), sweep (rate
exponent fits over a target axis, sweep.csv), gcb (curvature profiling,
kappa_profile.csv), check (invariant suite).  All CSV bodies are
byte-reproducible for a fixed config and seed; wall-clock times appear only
in summary.json.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._util import fmt_float
from .bench import log_orthant_demo, parse_instance
from .checks import run_checks
from .curvature import (LogOrthantMetric, NormedMetric, check_quadratic_growth,
                        gcb_estimate, profile_csv_rows, sigma_hat,
                        sigma_hat_prime)
from .errors import MalformedSpecError, SamplingError, UromError
from .solver import SolverConfig, run, summary_dict, write_trace_csv

EXIT_OK = 0
EXIT_INCOMPLETE = 2
EXIT_FAILURE = 3
EXIT_USAGE = 64


@dataclass
class ExperimentConfig:
    """One CLI invocation, resolved from flags and the optional JSON file."""

    command: str
    instance: str = None
    p: int = 1
    delta: float = None
    epsilon: float = None
    M0: object = "auto"
    max_iters: int = 2000
    seed: int = 0
    jobs: int = 1
    out: str = "."
    verbose: bool = False
    filter: str = None
    inject: tuple = ()
    sweep_delta: list = field(default_factory=list)
    sweep_eps: list = field(default_factory=list)
    orders: tuple = (0, 1)
    r_max: float = None
    n_pairs: int = 24
    grid_size: int = 12
    x0: list = None

    def validate(self):
        for axis in (self.sweep_delta, self.sweep_eps):
            if axis:
                arr = np.asarray(axis, dtype=float)
                if np.any(arr <= 0) or np.any(np.diff(arr) >= 0):
                    raise MalformedSpecError(
                        "sweep axis must be strictly decreasing positive values")
        if not os.path.isdir(self.out):
            os.makedirs(self.out, exist_ok=True)
        if not os.access(self.out, os.W_OK):
            raise MalformedSpecError(f"output directory {self.out!r} not writable")


def _write_json(path, doc):
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_csv(path, rows):
    with open(path, "w", newline="") as f:
        for row in rows:
            f.write(",".join(str(c) for c in row))
            f.write("\n")


def _default_start(problem, seed):
    """Seeded feasible start; x0 = 0 is often the exact zero of the field."""
    return problem.set.sample(np.random.default_rng(seed), 1)[0]


def _solver_config(cfg, problem, delta=None, epsilon=None):
    delta = cfg.delta if delta is None else delta
    epsilon = cfg.epsilon if epsilon is None else epsilon
    if delta is None:
        delta = 1e-6 if not epsilon else 0.0
    if epsilon is None:
        epsilon = 0.0
    x0 = np.asarray(cfg.x0, dtype=float) if cfg.x0 is not None \
        else _default_start(problem, cfg.seed)
    return SolverConfig(p=cfg.p, delta=delta, epsilon=epsilon, M0=cfg.M0,
                        max_outer=cfg.max_iters, seed=cfg.seed, x0=x0)


def cmd_solve(cfg):
    try:
        inst = parse_instance(cfg.instance)
        scfg = _solver_config(cfg, inst.problem)
    except (MalformedSpecError, UromError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    result = run(inst.problem, scfg)
    write_trace_csv(result, os.path.join(cfg.out, "trace.csv"))
    summary = summary_dict(result, inst.problem, inst.known,
                           extra={"instance": cfg.instance})
    _write_json(os.path.join(cfg.out, "summary.json"), summary)
    if cfg.verbose:
        print(f"{inst.name}: {result.status} after {result.iterations} iterations")
    if result.status in ("stopped-on-delta", "stopped-on-epsilon"):
        return EXIT_OK
    if result.status == "max-iters":
        return EXIT_INCOMPLETE
    return EXIT_FAILURE


def _one_sweep_run(inst_spec, cfg, mode, target):
    """Solve one sweep point; returns (iterations, predicted, status)."""
    inst = parse_instance(inst_spec)
    D = inst.problem.diameter()
    if mode == "epsilon":
        if D is None:
            raise UromError("epsilon sweep needs a bounded set")
        scfg = _solver_config(cfg, inst.problem, delta=target / D, epsilon=target)
    else:
        scfg = _solver_config(cfg, inst.problem, delta=target, epsilon=0.0)
    result = run(inst.problem, scfg)
    summary = summary_dict(result, inst.problem, inst.known)
    pred = summary["predicted_K_epsilon" if mode == "epsilon" else "predicted_K_delta"]
    return result.iterations, pred, result.status


def cmd_sweep(cfg):
    if cfg.sweep_eps and cfg.sweep_delta:
        print("error: give either --eps or --delta values, not both", file=sys.stderr)
        return EXIT_USAGE
    axis = cfg.sweep_eps or cfg.sweep_delta
    mode = "epsilon" if cfg.sweep_eps else "delta"
    if len(axis) < 4:
        print("error: a sweep needs at least 4 axis values", file=sys.stderr)
        return EXIT_USAGE
    try:
        parse_instance(cfg.instance)
    except (MalformedSpecError, UromError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    results = {}
    failed = False
    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        futures = {t: pool.submit(_one_sweep_run, cfg.instance, cfg, mode, t)
                   for t in axis}
        for t, fut in futures.items():
            try:
                results[t] = fut.result()
            except Exception as exc:
                results[t] = None
                failed = True
                print(f"target {t:g} failed: {exc}", file=sys.stderr)

    rows = [["target", "iterations", "predicted"]]
    pts = []
    pred_pts = []
    for t in axis:
        got = results[t]
        if got is None:
            rows.append([fmt_float(t), "", ""])
            continue
        iters, pred, status = got
        if status not in ("stopped-on-delta", "stopped-on-epsilon"):
            failed = True
        rows.append([fmt_float(t), iters, fmt_float(pred) if pred else ""])
        pts.append((t, iters))
        if pred:
            pred_pts.append((t, pred))
    _write_csv(os.path.join(cfg.out, "sweep.csv"), rows)

    def fit_loglog(points):
        if len(points) < 2:
            return {}
        lx = np.log([1.0 / t for t, _ in points])
        ly = np.log([k for _, k in points])
        slope, intercept = np.polyfit(lx, ly, 1)
        return {"slope": float(slope), "intercept": float(intercept)}

    # two fits: realized iteration counts, and the complexity bound itself.
    # On benign instances the realized counts decay faster than the bound
    # (the bound is worst-case), so both are reported.
    fit = fit_loglog(pts)
    fit_predicted = fit_loglog(pred_pts)
    if cfg.verbose and fit:
        print(f"fitted slope {fit['slope']:.4f} over {len(pts)} runs "
              f"(bound slope {fit_predicted.get('slope', float('nan')):.4f})")
    summary = {
        "mode": mode,
        "instance": cfg.instance,
        "targets": [float(t) for t in axis],
        "statuses": {fmt_float(t): (results[t][2] if results[t] else "error")
                     for t in axis},
        "fit": fit,
        "fit_predicted": fit_predicted,
        "seed": cfg.seed,
    }
    _write_json(os.path.join(cfg.out, "summary.json"), summary)
    return EXIT_INCOMPLETE if failed else EXIT_OK


def _gcb_grid(cfg, D):
    upper = cfg.r_max if cfg.r_max is not None else (0.6 * D if D is not None else 10.0)
    return np.linspace(upper / cfg.grid_size, upper, cfg.grid_size)


def _compat_report(prof, orders):
    worst = np.inf
    for q in orders:
        if q < 1:
            continue
        for r in prof.r_grid[1::2]:
            s = sigma_hat(q, prof, float(r))
            spr = sigma_hat_prime(q, prof, float(r))
            worst = min(worst, float(r) * spr - s)
            worst = min(worst, (q + 2) * s - float(r) * spr)
    return worst


def cmd_gcb(cfg):
    try:
        if cfg.instance.startswith("log_demo"):
            _, _, rest = cfg.instance.partition(":")
            kv = dict(item.split("=", 1) for item in rest.split(",") if item)
            fn, metric, domain = log_orthant_demo(
                kind=kv.get("kind", "power"), n=int(kv.get("n", 3)),
                a=float(kv.get("a", 0.5)), shift=float(kv.get("shift", 1.0)))
            grid = np.linspace(0.1, 1.0, cfg.grid_size)
            geo_report = _log_geodesic_report(metric, cfg.seed)
        else:
            inst = parse_instance(cfg.instance)
            pr = inst.problem
            sp = pr.space
            fn = pr.oracle
            metric = (NormedMetric(sp), NormedMetric(norm=sp.dual_norm))
            domain = pr.set
            grid = _gcb_grid(cfg, pr.diameter())
            geo_report = None
    except (MalformedSpecError, UromError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        prof = gcb_estimate(fn, metric, grid, domain, n_pairs=cfg.n_pairs,
                            seed=cfg.seed)
    except SamplingError as exc:
        print(f"sampling failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    orders = tuple(q for q in cfg.orders)
    _write_csv(os.path.join(cfg.out, "kappa_profile.csv"),
               profile_csv_rows(prof, orders=orders))
    all_zero = bool(np.max(prof.kappa_values) <= 1e-12)
    # diagnostic, not a gate: a sampled sup underestimates radii whose
    # extremal pairs are rare (curvature concentrated at a point), which
    # can read as a growth violation even for compliant fields
    growth = check_quadratic_growth(prof, tol=1e-6)
    summary = {
        "instance": cfg.instance,
        "r_grid": [float(r) for r in prof.r_grid],
        "kappa_max": float(np.max(prof.kappa_values)),
        "all_zero_profile": all_zero,
        "growth": {"passed": bool(growth.passed), "vacuous": all_zero,
                   "worst_margin": float(growth.worst_margin)},
        "compat_worst_margin": float(_compat_report(prof, orders)),
        "seed": cfg.seed,
        "sample_meta": prof.sample_meta,
    }
    if geo_report is not None:
        summary["geodesic_identity"] = geo_report
    _write_json(os.path.join(cfg.out, "summary.json"), summary)
    if cfg.verbose:
        print(f"kappa profile written; max kappa {summary['kappa_max']:.3e}")
    return EXIT_OK


def _log_geodesic_report(metric, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        x = np.exp(rng.uniform(-1, 1, 3))
        y = np.exp(rng.uniform(-1, 1, 3))
        s, t = sorted(rng.uniform(0, 1, 2))
        d = metric.dist(x, y)
        worst = max(worst, abs(metric.dist(metric.geodesic(x, y, s),
                                           metric.geodesic(x, y, t)) - (t - s) * d))
    return {"passed": bool(worst <= 1e-10), "worst_defect": float(worst)}


def cmd_check(cfg):
    outcomes = run_checks(filter=cfg.filter, seed=cfg.seed, inject=cfg.inject,
                          verbose=cfg.verbose, printer=print)
    n_pass = sum(o.passed for o in outcomes)
    print(f"{n_pass}/{len(outcomes)} checks passed")
    if all(o.passed for o in outcomes) and outcomes:
        return EXIT_OK
    for o in outcomes:
        if not o.passed:
            print(f"failing invariant: {o.name}", file=sys.stderr)
    return 1


def _parse_float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    par = argparse.ArgumentParser(prog="urom")
    sub = par.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep", "gcb", "check"):
        sp = sub.add_parser(name)
        if name != "check":
            sp.add_argument("instance", nargs="?", default=None)
        # value flags default to None so a JSON --config file can fill them in;
        # explicit flags always win over the file
        sp.add_argument("--p", type=int, default=None)
        sp.add_argument("--delta", type=str, default=None)
        sp.add_argument("--eps", type=str, default=None)
        sp.add_argument("--m0", type=str, default=None)
        sp.add_argument("--max-iters", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--config", type=str, default=None)
        sp.add_argument("--verbose", action="store_true")
        if name == "check":
            sp.add_argument("--filter", type=str, default=None)
            sp.add_argument("--inject-affine-nonzero-kappa", action="store_true")
        if name == "gcb":
            sp.add_argument("--orders", type=str, default=None)
            sp.add_argument("--r-max", type=float, default=None)
            sp.add_argument("--n-pairs", type=int, default=None)
            sp.add_argument("--grid-size", type=int, default=None)
    return par


def _config_from_args(args):
    doc = {}
    if args.config:
        with open(args.config) as f:
            doc = json.load(f)

    def pick(name, default=None):
        flag = getattr(args, name, None)
        if flag is None:
            return doc.get(name, default)
        return flag

    def pick_flag(name):
        return bool(getattr(args, name, False) or doc.get(name, False))

    delta_text = pick("delta")
    eps_text = pick("eps")
    sweep_delta = []
    sweep_eps = []
    delta = epsilon = None
    if args.command == "sweep":
        if delta_text:
            sweep_delta = _parse_float_list(str(delta_text))
        if eps_text:
            sweep_eps = _parse_float_list(str(eps_text))
    else:
        delta = float(delta_text) if delta_text is not None else None
        epsilon = float(eps_text) if eps_text is not None else None
    m0 = pick("m0", "auto")
    if m0 != "auto":
        m0 = float(m0)
    inject = ("affine-nonzero-kappa",) if pick_flag("inject_affine_nonzero_kappa") else ()
    cfg = ExperimentConfig(
        command=args.command,
        instance=pick("instance"),
        p=int(pick("p", 1)),
        delta=delta, epsilon=epsilon, M0=m0,
        max_iters=int(pick("max_iters", 2000)),
        seed=int(pick("seed", 0)),
        jobs=int(pick("jobs", 1)),
        out=str(pick("out", ".")),
        verbose=pick_flag("verbose"),
        filter=pick("filter"),
        inject=inject,
        sweep_delta=sweep_delta, sweep_eps=sweep_eps,
        x0=doc.get("x0"),
    )
    if args.command == "gcb":
        cfg.orders = tuple(int(v) for v in str(pick("orders", "0,1")).split(","))
        rm = pick("r_max")
        cfg.r_max = float(rm) if rm is not None else None
        cfg.n_pairs = int(pick("n_pairs", 24))
        cfg.grid_size = int(pick("grid_size", 12))
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        cfg.validate()
        if cfg.command != "check" and not cfg.instance:
            raise MalformedSpecError("an instance spec is required")
    except (MalformedSpecError, UromError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handler = {"solve": cmd_solve, "sweep": cmd_sweep,
               "gcb": cmd_gcb, "check": cmd_check}[cfg.command]
    return handler(cfg)


if __name__ == "__main__":
    sys.exit(main())
