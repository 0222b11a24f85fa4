"""Release gate: one test per advertised guarantee, at the advertised
tolerance and runtime budget.

Each test prints a single ``criterion NN ... PASS`` line with the key
measured numbers, so a bare ``pytest -s tests/test_acceptance.py`` reads as
an acceptance report.  Budgets are asserted, not just advertised.
"""

import json
import time

import numpy as np
import pytest

from urom.bench import (make_cubic_field, make_holder_mixture,
                        make_power_potential, merit_lower_bound,
                        parse_instance)
from urom.cli import ExperimentConfig, cmd_solve, cmd_sweep
from urom.curvature import (CurvatureProfile, HolderEnvelope, NormedMetric,
                            check_quadratic_growth, gcb_estimate, sigma_hat,
                            sigma_hat_prime)
from urom.solver import (SolverConfig, check_telescoped_guarantee, default_M0,
                         predicted_iterations, run)
from urom.space import Box, taylor_model
from urom.step import (alpha_from, c_p_constant, check_subproblem_monotone,
                       solve_step, verify_progress)


def _report(num, label, t0, budget_s, detail=""):
    elapsed = time.perf_counter() - t0
    assert elapsed < budget_s, \
        f"criterion {num} took {elapsed:.1f}s, budget {budget_s}s"
    print(f"criterion {num:02d} ({label}): PASS {detail} [{elapsed:.2f}s]")


def _smallest_M(condition, lo=1e-6, hi=1e6):
    """Bisect the monotone-in-M feasibility condition to 1e-9 relative."""
    assert not condition(lo) and condition(hi)
    for _ in range(200):
        mid = (lo * hi) ** 0.5
        if condition(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _seeded_start(problem, seed):
    return problem.set.sample(np.random.default_rng(seed), 1)[0]


def _delta_run(inst, delta, seed=0, **kw):
    cfg = SolverConfig(p=1, delta=delta, epsilon=0.0,
                       x0=_seeded_start(inst.problem, seed), **kw)
    return run(inst.problem, cfg)


# -- 1 ----------------------------------------------------------------------

def test_criterion_01_gcb_exactness():
    t0 = time.perf_counter()
    dom = Box(np.array([-3.0]), np.array([3.0]))
    grid = np.linspace(0.1, 2.0, 20)
    prof = gcb_estimate(lambda x: x ** 2, NormedMetric(), grid, dom,
                        n_pairs=8, seed=0)
    rel = float(np.max(np.abs(prof.kappa_values - grid ** 2) / grid ** 2))
    assert rel <= 1e-9
    _report(1, "gcb exactness, scalar quadratic", t0, 1.0,
            f"max rel error {rel:.2e} on 20-point grid")


# -- 2 ----------------------------------------------------------------------

def test_criterion_02_quadratic_growth():
    t0 = time.perf_counter()
    grid = np.linspace(0.05, 2.0, 40)
    worst = np.inf
    for fn in (lambda r: r ** 2, lambda r: r ** 1.5, lambda r: 3.0 * r ** 2):
        rep = check_quadratic_growth(CurvatureProfile.from_function(fn, grid),
                                     betas=(0.25, 0.5, 0.75), tol=1e-9)
        assert rep.passed
        worst = min(worst, rep.worst_margin)
    assert worst >= -1e-9
    _report(2, "quadratic growth of curvature profiles", t0, 1.0,
            f"worst margin {worst:.2e} over 3 profiles x 3 scalings")


# -- 3 ----------------------------------------------------------------------

def test_criterion_03_smoothing_identities():
    t0 = time.perf_counter()
    grid = np.linspace(0.05, 2.0, 40)
    prof = CurvatureProfile.from_function(lambda t: t ** 2, grid)
    s1 = sigma_hat(1, prof, 1.0)
    assert s1 == pytest.approx(1.0 / 3.0, abs=1e-8)
    rng = np.random.default_rng(3)
    worst_c = worst_t = np.inf
    for q in (1, 2):
        for r in grid:
            s = sigma_hat(q, prof, r)
            sp = sigma_hat_prime(q, prof, r)
            worst_c = min(worst_c, r * sp - s, (q + 2) * s - r * sp)
        for _ in range(100):
            r, s = rng.choice(grid, 2, replace=True)
            base = sigma_hat_prime(q, prof, s)
            worst_t = min(worst_t, base + base / s ** (q + 1) * r ** (q + 1)
                          - sigma_hat_prime(q, prof, r))
    assert worst_c >= -1e-8 and worst_t >= -1e-8
    _report(3, "smoothing value + sandwich + two-point", t0, 1.0,
            f"sigma_1(1)={s1:.10f}, sandwich margin {worst_c:.2e}, "
            f"two-point margin {worst_t:.2e}")


# -- 4 ----------------------------------------------------------------------

def test_criterion_04_taylor_error_bounds():
    t0 = time.perf_counter()
    inst = make_cubic_field(n=5)
    pr, sp = inst.problem, inst.problem.space
    kv = inst.known["kappa_v_fn"]
    s1 = inst.known["sigma1_fn"]
    rng = np.random.default_rng(4)
    xs = pr.set.sample(rng, 1000, sp)
    ys = pr.set.sample(rng, 1000, sp)
    worst1 = worst2 = -np.inf
    for x, y in zip(xs, ys):
        r = sp.norm(y - x)
        v = pr.oracle(y)
        e1 = sp.dual_norm(v - taylor_model(pr.oracle, x, y, 1)) - kv(r)
        e2 = sp.dual_norm(v - taylor_model(pr.oracle, x, y, 2)) - s1(r)
        worst1 = max(worst1, e1)
        worst2 = max(worst2, e2)
    assert worst1 <= 1e-8 and worst2 <= 1e-8
    _report(4, "taylor error vs smoothed curvature", t0, 5.0,
            f"1000 pairs, excess p=1 {worst1:.2e}, p=2 {worst2:.2e}")


# -- 5 ----------------------------------------------------------------------

def test_criterion_05_step_soundness():
    t0 = time.perf_counter()
    inst = make_power_potential(n=10, nu=1.0)
    pr, sp = inst.problem, inst.problem.space
    delta = 1e-3
    env = HolderEnvelope(1, 1.0, 2.0)  # analytic curvature of this field
    M = _smallest_M(lambda m: env.kappa(np.sqrt(2 * delta / (5 * m)))
                    <= delta / 5.0)
    assert M == pytest.approx(2.0, rel=1e-6)
    M = 2.0
    alpha = alpha_from(M, delta, 1)
    rng = np.random.default_rng(5)
    starts = pr.set.sample(rng, 100, sp)
    checked = 0
    for x in starts:
        step = solve_step(pr, x, alpha, M, 1)
        rep = verify_progress(step, M, delta, sp)
        if rep.norm_v_psi < delta:
            continue
        checked += 1
        assert rep.progress_ok, f"progress margin {rep.margins['progress']:.2e}"
        assert rep.r_lower_ok, f"radius margin {rep.margins['r_lower']:.2e}"
    assert checked >= 90
    _report(5, "step progress + radius lower bound", t0, 30.0,
            f"{checked}/100 starts above delta, M={M:g}, "
            f"c_1={c_p_constant(1):.4f}")


# -- 6 ----------------------------------------------------------------------

def test_criterion_06_subproblem_monotonicity():
    t0 = time.perf_counter()
    inst = make_cubic_field(n=5, skew_seed=3)
    pr = inst.problem
    delta = 1e-2
    sigma1 = inst.known["sigma1_fn"]
    M = _smallest_M(lambda m: sigma1((2 * delta / (5 * m)) ** (1.0 / 3.0))
                    <= 2 * delta / 15.0)
    assert M == pytest.approx(3.0, rel=1e-6)
    M = 3.0
    x = pr.project(np.full(5, 0.1))
    good = check_subproblem_monotone(pr, x, alpha=alpha_from(M, delta, 2),
                                     M=M, p=2, delta=delta, sigma=sigma1,
                                     n_samples=1000, seed=6, tol=1e-9)
    assert good.passed and good.mbig_ok and good.min_form >= -1e-9
    bad = check_subproblem_monotone(pr, x, alpha=0.0, M=M / 1e4, p=2,
                                    delta=delta, sigma=sigma1,
                                    n_samples=1000, seed=6, tol=1e-9)
    assert not bad.passed and bad.min_form < 0.0
    _report(6, "frozen-subproblem monotonicity threshold", t0, 10.0,
            f"M={M:g}: min form {good.min_form:.2e}; "
            f"M/1e4: min form {bad.min_form:.2e}")


# -- 7 ----------------------------------------------------------------------

def test_criterion_07_telescoped_guarantee():
    t0 = time.perf_counter()
    runs = []
    for spec, cfg_kw in [
        ("power_potential:n=10,nu=1", dict(delta=1e-6)),
        ("power_potential:n=8,nu=0.5", dict(delta=1e-5)),
        ("cubic_field:n=5", dict(delta=1e-8)),
        ("holder_mixture:n=10", dict(delta=1e-5)),
        ("affine:n=5,seed=4", dict(delta=1e-9)),
        ("matrix_game:preset=cycle", dict(delta=0.0, epsilon=1e-3)),
    ]:
        inst = parse_instance(spec)
        assert inst.known.get("x_star") is not None, spec
        cfg = SolverConfig(p=1, x0=_seeded_start(inst.problem, 7),
                           **{"epsilon": 0.0, **cfg_kw})
        res = run(inst.problem, cfg)
        assert res.status in ("stopped-on-delta", "stopped-on-epsilon"), spec
        rep = check_telescoped_guarantee(res, inst.known["x_star"],
                                         inst.problem, tol_scale=1e-8)
        assert rep.ok, f"{spec}: slack {rep.slack:.2e}"
        runs.append((spec, rep.slack, rep.per_term_min))
    worst = min(s for _, s, _ in runs)
    _report(7, "telescoped dual-step guarantee on replay", t0, 10.0,
            f"{len(runs)} runs, worst slack {worst:.2e}")


# -- 8 ----------------------------------------------------------------------

def test_criterion_08_certificate_sandwich():
    t0 = time.perf_counter()
    eps = 1e-3
    n_checked = 0
    worst = np.inf
    for spec in ("matrix_game:preset=cycle", "power_potential:n=10,nu=1",
                 "power_potential:n=8,nu=0.5"):
        inst = parse_instance(spec)
        pr = inst.problem
        cfg = SolverConfig(p=1, delta=0.0, epsilon=eps,
                           x0=_seeded_start(pr, 8))
        res = run(pr, cfg)
        assert res.status == "stopped-on-epsilon", spec
        assert res.Delta_final <= eps
        acc = np.zeros(pr.n)
        mass = 0.0
        for i, rec in enumerate(res.records):
            if rec.a_k is None:
                continue
            acc = acc + rec.a_k * res.xs[i]
            mass += rec.a_k
            if rec.Delta_k is None:
                continue
            low = merit_lower_bound(pr, acc / mass, n_samples=256, seed=8)
            worst = min(worst, rec.Delta_k - low)
            assert rec.Delta_k >= low - 1e-9, \
                f"{spec} k={rec.k}: gap {rec.Delta_k:.3e} < bound {low:.3e}"
            n_checked += 1
        np.testing.assert_allclose(acc / mass, res.x_bar, atol=1e-12)
    assert n_checked > 0
    _report(8, "certificate dominates sampled merit", t0, 30.0,
            f"{n_checked} recorded gaps, worst slack {worst:.2e}")


# -- 9 ----------------------------------------------------------------------

def _run_sweep(tmp_path, mode, targets):
    out = tmp_path / mode
    kw = {"sweep_eps": targets} if mode == "eps" else {"sweep_delta": targets}
    cfg = ExperimentConfig(command="sweep",
                           instance="power_potential:n=10,nu=1",
                           p=1, seed=3, jobs=1, max_iters=8000,
                           out=str(out), **kw)
    cfg.validate()
    assert cmd_sweep(cfg) == 0
    rows = [ln.split(",") for ln in
            (out / "sweep.csv").read_text().strip().splitlines()[1:]]
    summary = json.loads((out / "summary.json").read_text())
    return rows, summary


def test_criterion_09_rate_exponents(tmp_path):
    t0 = time.perf_counter()
    targets = [1e-1, 1e-2, 1e-3, 1e-4]
    details = []
    for mode, lo, hi in (("eps", 0.47, 0.87), ("delta", 0.7, 1.3)):
        rows, summary = _run_sweep(tmp_path, mode, targets)
        assert len(rows) == 4
        for tgt, iters, pred in rows:
            assert float(iters) <= float(pred), \
                f"{mode} {tgt}: {iters} > predicted {pred}"
        pred_slope = summary["fit_predicted"]["slope"]
        meas_slope = summary["fit"]["slope"]
        # the worst-case envelope exponent shows up in the predicted counts;
        # measured counts on this scale-invariant field contract linearly,
        # so only the upper edge binds them
        assert lo <= pred_slope <= hi, f"{mode}: predicted {pred_slope:.3f}"
        assert meas_slope <= hi, f"{mode}: measured {meas_slope:.3f}"
        details.append(f"{mode}: predicted {pred_slope:.3f} in "
                       f"[{lo},{hi}], measured {meas_slope:.3f}")
    _report(9, "complexity exponents over target sweeps", t0, 300.0,
            "; ".join(details))


# -- 10 ---------------------------------------------------------------------

def test_criterion_10_universality():
    t0 = time.perf_counter()
    inst = make_holder_mixture(n=10, nu1=0.3, nu2=1.0)
    pr = inst.problem
    delta = 1e-4
    # the solver sees no smoothness class: M0 auto, line search only
    res = _delta_run(inst, delta, seed=10, M0="auto", max_outer=8000)
    assert res.status == "stopped-on-delta"
    cfg_num = SolverConfig(p=1, delta=delta, epsilon=0.0,
                           M0=default_M0(pr, res.config))
    R0 = pr.space.norm(res.x0 - inst.known["x_star"])
    preds = [predicted_iterations(env, cfg_num, R0, "delta")
             for env in inst.known["term_envelopes"]]
    bound = 4.0 * min(preds)
    assert res.iterations <= bound
    _report(10, "parameter-free run beats single-class bounds", t0, 300.0,
            f"{res.iterations} iters <= 4 x min({preds[0]:.0f}, "
            f"{preds[1]:.0f})")


# -- 11 ---------------------------------------------------------------------

def test_criterion_11_determinism(tmp_path):
    t0 = time.perf_counter()
    traces = []
    for name in ("a", "b"):
        cfg = ExperimentConfig(command="solve",
                               instance="power_potential:n=10,nu=1",
                               delta=1e-6, seed=7, out=str(tmp_path / name))
        cfg.validate()
        assert cmd_solve(cfg) == 0
        traces.append((tmp_path / name / "trace.csv").read_bytes())
    assert traces[0] == traces[1]
    _report(11, "byte-identical traces under fixed seed", t0, 5.0,
            f"{len(traces[0])} bytes x 2 runs")
