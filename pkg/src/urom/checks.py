"""Runnable invariant suite.

Every check is a named, seeded, self-contained verification of one library
invariant; the CLI check command runs them and reports a pass/fail table.
Checks share a lazily built context of benchmark instances and solver runs
so the whole suite stays at desk scale.
"""

from __future__ import annotations

import numpy as np

from .bench import (make_affine, make_bilinear_saddle, make_cubic_field,
                    make_holder_mixture, make_power_potential, make_zero,
                    merit_lower_bound)
from .curvature import (CurvatureProfile, HolderEnvelope, LogOrthantMetric,
                        NormedMetric, check_quadratic_growth, gcb_estimate,
                        holder_kappa_envelope, pointwise_delta, sigma_hat,
                        sigma_hat_inverse, sigma_hat_prime)
from .errors import UromError
from .solver import SolverConfig, c_p_constant, default_M0, run, trace_rows
from .space import (Ball, Box, EuclideanSpace, Simplex, WholeSpace,
                    taylor_model)
from .step import alpha_from, solve_inner_vi, solve_step, verify_progress

CHECKS = []


def register_check(name, tags):
    def deco(fn):
        CHECKS.append((name, tuple(tags), fn))
        return fn
    return deco


class CheckContext:
    """Shared instances and runs, built on first use."""

    def __init__(self, seed=0, inject=()):
        self.seed = seed
        self.inject = set(inject)
        self._cache = {}

    def get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # --- benchmark instances -------------------------------------------
    def power(self):
        return self.get("power", lambda: make_power_potential(
            n=10, nu=1.0, set_kind="ball:D=2"))

    def power_half(self):
        return self.get("power_half", lambda: make_power_potential(
            n=6, nu=0.5, set_kind="ball:D=2"))

    def cubic(self):
        return self.get("cubic", lambda: make_cubic_field(
            n=5, set_kind="ball:D=1", skew_seed=3))

    def game(self):
        return self.get("game", lambda: make_bilinear_saddle(
            2, 2, np.array([[1.0, -1.0], [-1.0, 1.0]])))

    def affine(self):
        return self.get("affine", lambda: make_affine(n=5, seed=4))

    def mixture(self):
        return self.get("mixture", lambda: make_holder_mixture(n=6))

    def instances(self):
        return [self.power(), self.power_half(), self.cubic(), self.game(),
                self.affine(), self.mixture(), make_zero(n=4)]

    # --- solver runs ---------------------------------------------------
    def power_delta_run(self):
        def build():
            inst = self.power()
            x0 = np.ones(10) / np.sqrt(10.0)
            cfg = SolverConfig(p=1, delta=1e-4, epsilon=0.0, M0="auto",
                               max_outer=3000, seed=self.seed, x0=x0)
            return inst, cfg, run(inst.problem, cfg)
        return self.get("power_delta_run", build)

    def power_eps_run(self):
        def build():
            inst = self.power()
            x0 = np.ones(10) / np.sqrt(10.0)
            cfg = SolverConfig(p=1, delta=1e-3 / 2.0 * 1e-3, epsilon=1e-3,
                               M0="auto", max_outer=5000, seed=self.seed, x0=x0)
            return inst, cfg, run(inst.problem, cfg)
        return self.get("power_eps_run", build)

    def game_run(self):
        def build():
            inst = self.game()
            D = inst.problem.diameter()
            cfg = SolverConfig(p=1, delta=1e-2 / D * 1e-3, epsilon=1e-2,
                               M0="auto", max_outer=4000, seed=self.seed)
            return inst, cfg, run(inst.problem, cfg)
        return self.get("game_run", build)


# ---------------------------------------------------------------------------
# space checks


def _set_zoo(rng):
    sp3 = EuclideanSpace(3)
    spd = EuclideanSpace(3, np.array([4.0, 1.0, 0.25]))
    dense = np.array([[2.0, 0.3, 0.0], [0.3, 1.5, 0.2], [0.0, 0.2, 1.0]])
    spf = EuclideanSpace(3, dense)
    return [
        (Box(-np.ones(3), np.ones(3)), sp3),
        (Box(-np.ones(3), np.ones(3)), spd),
        (Ball(np.array([0.5, 0.0, -0.5]), 1.5), sp3),
        (Ball(np.zeros(3), 1.0), spf),
        (Simplex(3), sp3),
        (WholeSpace(3, radius=2.0), spf),
    ]


@register_check("space-cauchy-inequality", ["space"])
def check_cauchy(ctx):
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for B in ("identity", np.array([4.0, 1.0, 0.25]),
              np.array([[2.0, 0.3, 0.0], [0.3, 1.5, 0.2], [0.0, 0.2, 1.0]])):
        sp = EuclideanSpace(3, B)
        for _ in range(200):
            x = rng.standard_normal(3)
            s = rng.standard_normal(3)
            lhs = abs(float(np.dot(s, x)))
            rhs = sp.dual_norm(s) * sp.norm(x)
            worst = max(worst, lhs - rhs)
    return worst <= 1e-10, f"max <s,x> - |s|_*|x| = {worst:.3e}"


@register_check("space-projection-variational", ["space"])
def check_proj_variational(ctx):
    rng = np.random.default_rng(ctx.seed + 1)
    worst = -np.inf
    for fset, sp in _set_zoo(rng):
        if isinstance(fset, (Box, Simplex)) and not sp.is_diagonal:
            continue
        for _ in range(100):
            y = 3.0 * rng.standard_normal(3)
            px = fset.project(y, sp)
            z = fset.sample(rng, 1, sp)[0]
            worst = max(worst, float(np.dot(sp.apply_B(y - px), z - px)))
    return worst <= 1e-9, f"max <B(y-Py), z-Py> = {worst:.3e}"


@register_check("space-projection-idempotent-nonexpansive", ["space"])
def check_proj_idem(ctx):
    rng = np.random.default_rng(ctx.seed + 2)
    worst_idem = 0.0
    worst_nonexp = -np.inf
    for fset, sp in _set_zoo(rng):
        if isinstance(fset, (Box, Simplex)) and not sp.is_diagonal:
            continue
        for _ in range(170):
            y = 3.0 * rng.standard_normal(3)
            py = fset.project(y, sp)
            worst_idem = max(worst_idem, sp.norm(fset.project(py, sp) - py))
            z = fset.sample(rng, 1, sp)[0]
            worst_nonexp = max(worst_nonexp, sp.norm(py - z) - sp.norm(y - z))
    ok = worst_idem <= 1e-10 and worst_nonexp <= 1e-9
    return ok, f"idempotency defect {worst_idem:.3e}, expansion {worst_nonexp:.3e}"


@register_check("space-lmo-optimality", ["space"])
def check_lmo(ctx):
    rng = np.random.default_rng(ctx.seed + 3)
    worst = -np.inf
    for fset, sp in _set_zoo(rng):
        for _ in range(100):
            s = rng.standard_normal(3)
            v = fset.lmo(s, sp)
            if not fset.contains(v, tol=1e-9, space=sp):
                return False, f"lmo left the set for {fset.kind}"
            z = fset.sample(rng, 1, sp)[0]
            worst = max(worst, float(np.dot(s, v)) - float(np.dot(s, z)))
    return worst <= 1e-9, f"max <s,lmo(s)> - <s,z> = {worst:.3e}"


@register_check("space-diameter-bound", ["space"])
def check_diameter(ctx):
    rng = np.random.default_rng(ctx.seed + 4)
    worst = -np.inf
    for fset, sp in _set_zoo(rng):
        D = fset.diameter(sp)
        if D is None:
            continue
        X = fset.sample(rng, 300, sp)
        Y = fset.sample(rng, 300, sp)
        for x, y in zip(X, Y):
            worst = max(worst, sp.norm(x - y) - D)
    return worst <= 1e-9, f"max |x-y| - D = {worst:.3e}"


@register_check("space-jvp-finite-difference", ["space", "bench"])
def check_jvp_fd(ctx):
    rng = np.random.default_rng(ctx.seed + 5)
    worst = 0.0
    for inst in ctx.instances():
        pr = inst.problem
        for _ in range(20):
            x = pr.set.sample(rng, 1, pr.space)[0]
            h = rng.standard_normal(pr.n)
            h /= np.linalg.norm(h)
            eps = 1e-6 * max(1.0, np.linalg.norm(x))
            fd = (pr.oracle(x + eps * h) - pr.oracle(x - eps * h)) / (2 * eps)
            jv = pr.oracle.jvp(x, h)
            scale = max(np.linalg.norm(jv), 1e-8)
            worst = max(worst, np.linalg.norm(fd - jv) / scale)
    return worst <= 1e-5, f"max relative jvp error {worst:.3e}"


@register_check("space-taylor-exact-polynomial", ["space"])
def check_taylor_exact(ctx):
    from .space import OperatorOracle
    rng = np.random.default_rng(ctx.seed + 6)
    # degree-2 components with constant second derivative: order-2 model exact
    n = 4
    Qs = [0.5 * (Q + Q.T) for Q in rng.standard_normal((n, n, n))]
    G = rng.standard_normal((n, n))
    g = rng.standard_normal(n)
    quad = OperatorOracle(
        lambda x: np.array([0.5 * x @ Qi @ x for Qi in Qs]) + G @ x + g,
        jvp=lambda x, h: np.array([x @ Qi @ h for Qi in Qs]) + G @ h,
        d2vp=lambda x, h1, h2: np.array([h1 @ Qi @ h2 for Qi in Qs]),
        max_order=2)
    aff = ctx.affine().problem
    worst = 0.0
    for _ in range(50):
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        t2 = taylor_model(quad, x, y, 2)
        vy = quad(y)
        worst = max(worst, np.linalg.norm(t2 - vy) / max(np.linalg.norm(vy), 1e-12))
        xa = aff.set.sample(rng, 1)[0]
        ya = aff.set.sample(rng, 1)[0]
        t1 = taylor_model(aff.oracle, xa, ya, 1)
        va = aff.oracle(ya)
        worst = max(worst, np.linalg.norm(t1 - va) / max(np.linalg.norm(va), 1e-12))
    return worst <= 1e-12, f"max relative Taylor defect {worst:.3e}"


@register_check("space-lmo-project-vertex", ["space"])
def check_lmo_project(ctx):
    rng = np.random.default_rng(ctx.seed + 7)
    sp = EuclideanSpace(3)
    worst = 0.0
    for fset in (Box(-np.ones(3), np.ones(3)), Simplex(3)):
        for _ in range(50):
            s = rng.standard_normal(3)
            if np.min(np.abs(s)) < 1e-3:
                continue
            v = fset.lmo(s, sp)
            far = fset.project(-1e6 * s, sp)
            worst = max(worst, float(sp.norm(far - v)))
    return worst <= 1e-6, f"max |project(-1e6 s) - lmo(s)| = {worst:.3e}"


# ---------------------------------------------------------------------------
# curvature checks


@register_check("gcb-affine-zero-kappa", ["gcb"])
def check_affine_kappa(ctx):
    rng = np.random.default_rng(ctx.seed + 8)
    G = rng.standard_normal((3, 3))
    g = rng.standard_normal(3)
    if "affine-nonzero-kappa" in ctx.inject:
        fn = lambda x: G @ x + g + 1e-3 * x * x
    else:
        fn = lambda x: G @ x + g
    metric = NormedMetric()
    dom = Box(-2.0 * np.ones(3), 2.0 * np.ones(3))
    prof = gcb_estimate(fn, metric, np.linspace(0.2, 2.0, 8), dom,
                        n_pairs=16, seed=ctx.seed)
    worst = float(np.max(prof.kappa_values))
    return worst <= 1e-9, f"max empirical kappa of affine map = {worst:.3e}"


@register_check("gcb-scalar-quadratic-exact", ["gcb"])
def check_scalar_quadratic(ctx):
    fn = lambda x: x ** 2
    metric = NormedMetric()
    dom = Box(np.array([-3.0]), np.array([3.0]))
    grid = np.linspace(0.1, 2.0, 20)
    prof = gcb_estimate(fn, metric, grid, dom, n_pairs=8, seed=ctx.seed)
    rel = np.max(np.abs(prof.kappa_values - grid ** 2) / grid ** 2)
    return rel <= 1e-9, f"max relative error vs r^2 = {rel:.3e}"


@register_check("gcb-quadratic-growth", ["gcb"])
def check_growth(ctx):
    grid = np.linspace(0.05, 2.0, 40)
    profs = [
        CurvatureProfile.from_function(lambda r: r ** 2, grid),
        CurvatureProfile.from_function(lambda r: r ** 1.5, grid),
        CurvatureProfile.from_function(lambda r: 3.0 * r ** 2, grid),
    ]
    worst = np.inf
    for prof in profs:
        rep = check_quadratic_growth(prof, tol=1e-9)
        worst = min(worst, rep.worst_margin)
        if not rep.passed:
            return False, f"violation margin {rep.worst_margin:.3e}"
    return True, f"worst margin {worst:.3e} over 3 analytic profiles"


@register_check("gcb-sigma-growth", ["gcb"])
def check_sigma_growth(ctx):
    grid = np.linspace(0.05, 1.5, 25)
    prof = CurvatureProfile.from_function(lambda r: r ** 2, grid)
    worst = np.inf
    for q in (1, 2):
        for beta in (0.25, 0.5, 0.75):
            for r in grid[5::4]:
                s_r = sigma_hat(q, prof, r)
                s_b = sigma_hat(q, prof, beta * r)
                worst = min(worst, s_b - beta ** (q + 2) * s_r)
                sp_r = sigma_hat_prime(q, prof, r)
                sp_b = sigma_hat_prime(q, prof, beta * r)
                worst = min(worst, sp_b - beta ** (q + 1) * sp_r)
    return worst >= -1e-9, f"worst growth margin {worst:.3e}"


@register_check("gcb-compat-sandwich", ["gcb"])
def check_compat(ctx):
    grid = np.linspace(0.05, 1.5, 25)
    prof = CurvatureProfile.from_function(lambda r: r ** 2, grid)
    worst = np.inf
    for q in (1, 2):
        for r in grid[2::3]:
            s = sigma_hat(q, prof, r)
            sp = sigma_hat_prime(q, prof, r)
            worst = min(worst, r * sp - s)
            worst = min(worst, (q + 2) * s - r * sp)
    return worst >= -1e-8, f"worst sandwich margin {worst:.3e}"


@register_check("gcb-ratio-monotone", ["gcb"])
def check_ratio_monotone(ctx):
    # only growth-compliant kappa (kappa(r)/r^2 nonincreasing) can arise as a
    # GCB; the ratio theorem presumes that, so test such profiles
    grid = np.linspace(0.1, 1.5, 15)
    worst = np.inf
    for fn in (lambda r: r ** 2, lambda r: r ** 1.5, lambda r: 3.0 * r ** 2):
        prof = CurvatureProfile.from_function(fn, grid)
        for q in (0, 1, 2):
            vals = np.array([sigma_hat(q, prof, r) / r ** (q + 2) for r in grid])
            worst = min(worst, float(np.min(-np.diff(vals))))
            der = np.array([sigma_hat_prime(q + 1, prof, r) / r ** (q + 2)
                            for r in grid])
            worst = min(worst, float(np.min(-np.diff(der))))
    return worst >= -1e-9, f"worst ratio decrease {worst:.3e}"


@register_check("gcb-two-point-bound", ["gcb"])
def check_two_point(ctx):
    rng = np.random.default_rng(ctx.seed + 9)
    grid = np.linspace(0.05, 1.5, 30)
    prof = CurvatureProfile.from_function(lambda r: r ** 2, grid)
    worst = np.inf
    for q in (1, 2):
        for _ in range(100):
            r, s = rng.choice(grid, 2, replace=True)
            lhs = sigma_hat_prime(q, prof, r)
            base = sigma_hat_prime(q, prof, s)
            rhs = base + base / s ** (q + 1) * r ** (q + 1)
            worst = min(worst, rhs - lhs)
    return worst >= -1e-8, f"worst two-point margin {worst:.3e}"


@register_check("gcb-taylor-error-bound", ["gcb"])
def check_taylor_error(ctx):
    rng = np.random.default_rng(ctx.seed + 10)
    inst = ctx.cubic()
    pr = inst.problem
    sp = pr.space
    R = pr.set.radius
    worst = -np.inf
    for _ in range(300):
        x = pr.set.sample(rng, 1, sp)[0]
        y = pr.set.sample(rng, 1, sp)[0]
        r = sp.norm(y - x)
        if r == 0.0:
            continue
        rem2 = sp.dual_norm(pr.oracle(y) - pr.taylor(x, y, 2))
        worst = max(worst, rem2 - inst.known["sigma1_fn"](r))
        rem1 = sp.dual_norm(pr.oracle(y) - pr.taylor(x, y, 1))
        worst = max(worst, rem1 - inst.known["kappa_v_fn"](r))
    return worst <= 1e-8, f"max remainder excess {worst:.3e}"


@register_check("gcb-holder-domination", ["gcb"])
def check_holder_domination(ctx):
    inst = ctx.power_half()
    pr = inst.problem
    sp = pr.space
    metric = (NormedMetric(sp), NormedMetric(norm=sp.dual_norm))
    grid = np.linspace(0.2, 1.6, 6)
    prof = gcb_estimate(pr.oracle, metric, grid, pr.set, n_pairs=24,
                        seed=ctx.seed)
    p, nu, H = inst.known["holder"][0]
    env = holder_kappa_envelope(nu, H, grid)
    worst = float(np.max(prof.kappa_values - env))
    return worst <= 1e-9, f"max empirical kappa minus envelope = {worst:.3e}"


@register_check("gcb-log-orthant-geodesic", ["gcb"])
def check_log_metric(ctx):
    rng = np.random.default_rng(ctx.seed + 11)
    met = LogOrthantMetric()
    worst_geo = 0.0
    worst_conv = -np.inf
    for _ in range(60):
        x = np.exp(rng.uniform(-1, 1, 3))
        y = np.exp(rng.uniform(-1, 1, 3))
        d = met.dist(x, y)
        worst_geo = max(worst_geo, met.dist(met.geodesic(x, y, 0.0), x))
        worst_geo = max(worst_geo, met.dist(met.geodesic(x, y, 1.0), y))
        s, t = sorted(rng.uniform(0, 1, 2))
        worst_geo = max(worst_geo,
                        abs(met.dist(met.geodesic(x, y, s), met.geodesic(x, y, t))
                            - (t - s) * d))
        # Busemann midpoint convexity against a second geodesic
        x2 = np.exp(rng.uniform(-1, 1, 3))
        y2 = np.exp(rng.uniform(-1, 1, 3))
        t1, t2 = rng.uniform(0, 1, 2)
        tm = 0.5 * (t1 + t2)
        phi = lambda t: met.dist(met.geodesic(x, y, t), met.geodesic(x2, y2, t))
        worst_conv = max(worst_conv, phi(tm) - 0.5 * (phi(t1) + phi(t2)))
    ok = worst_geo <= 1e-10 and worst_conv <= 1e-10
    return ok, f"geodesic defect {worst_geo:.3e}, convexity excess {worst_conv:.3e}"


# ---------------------------------------------------------------------------
# step checks


@register_check("step-stationarity-identity", ["step"])
def check_stationarity(ctx):
    rng = np.random.default_rng(ctx.seed + 12)
    worst = 0.0
    # alpha = 3 keeps the frozen quadratic model monotone over the whole ball
    # (the Hessian term of the cubic field is bounded by 6 R |d| <= 3 there)
    for inst, p, alpha in ((ctx.power(), 1, 0.1), (ctx.cubic(), 2, 3.0)):
        pr = inst.problem
        sp = pr.space
        for _ in range(10):
            x = pr.set.sample(rng, 1, sp)[0]
            step = solve_step(pr, x, alpha=alpha, M=3.0, p=p, tol_inner=1e-11)
            beta = alpha + 3.0 * step.r ** p
            lhs = sp.dual_norm(step.v_psi + beta * sp.apply_B(step.x_plus - x))
            rhs = sp.dual_norm(pr.oracle(step.x_plus) - pr.taylor(x, step.x_plus, p))
            worst = max(worst, abs(lhs - rhs) / max(rhs, 1e-12))
    return worst <= 1e-10, f"max relative identity defect {worst:.3e}"


@register_check("step-model-remainder-bound", ["step"])
def check_model_remainder(ctx):
    rng = np.random.default_rng(ctx.seed + 13)
    inst = ctx.cubic()
    pr = inst.problem
    sp = pr.space
    worst = -np.inf
    for _ in range(15):
        x = pr.set.sample(rng, 1, sp)[0]
        step = solve_step(pr, x, alpha=3.0, M=3.0, p=2, tol_inner=1e-11)
        if step.r == 0.0:
            continue
        rem = sp.dual_norm(pr.oracle(step.x_plus) - pr.taylor(x, step.x_plus, 2))
        worst = max(worst, rem - inst.known["sigma1_fn"](step.r))
    return worst <= 1e-8, f"max remainder minus sigma1(r) = {worst:.3e}"


@register_check("step-radius-monotone-in-beta", ["step"])
def check_radius_monotone(ctx):
    rng = np.random.default_rng(ctx.seed + 14)
    worst = -np.inf
    # sweeps start where the frozen model is monotone, so y(beta) is unique
    for inst, p, beta_lo in ((ctx.power(), 1, 0.01), (ctx.cubic(), 2, 3.0)):
        pr = inst.problem
        x = pr.set.sample(rng, 1, pr.space)[0]
        prev = None
        for beta in np.geomspace(beta_lo, 100.0 * beta_lo, 12):
            res = solve_inner_vi(pr, x, beta, p, tol=1e-11, max_iters=400000)
            rr = pr.space.norm(res.y - x)
            if prev is not None:
                worst = max(worst, rr - prev)
            prev = rr
    return worst <= 1e-10, f"max radius increase along beta sweep = {worst:.3e}"


@register_check("step-fixed-point-defect", ["step"])
def check_fixed_point(ctx):
    rng = np.random.default_rng(ctx.seed + 15)
    worst = 0.0
    for inst, p, alpha in ((ctx.power(), 1, 0.01), (ctx.cubic(), 2, 3.0)):
        pr = inst.problem
        for _ in range(8):
            x = pr.set.sample(rng, 1, pr.space)[0]
            step = solve_step(pr, x, alpha=alpha, M=2.0, p=p, tol_inner=1e-11)
            worst = max(worst, step.fixed_point_defect)
    return worst <= 1e-8, f"max |r - |x+ - x|| = {worst:.3e}"


@register_check("step-progress-inequality", ["step"])
def check_progress_inequality(ctx):
    rng = np.random.default_rng(ctx.seed + 16)
    inst = ctx.power()
    pr = inst.problem
    delta = 1e-3
    # analytic sigma0 envelope r^2: the smallest M with
    # sigma0((2 delta / 5 M)^(1/2)) <= delta/5 is M = 2
    M = 2.0
    alpha = alpha_from(M, delta, 1)
    n_checked = 0
    worst_prog = np.inf
    worst_r = np.inf
    for _ in range(100):
        x = pr.set.sample(rng, 1, pr.space)[0]
        step = solve_step(pr, x, alpha, M, 1, tol_inner=1e-11)
        rep = verify_progress(step, M, delta, pr.space)
        if rep.norm_v_psi < delta:
            continue
        n_checked += 1
        worst_prog = min(worst_prog, rep.lhs - rep.rhs)
        worst_r = min(worst_r, step.r - (2 * delta / (5 * M)) ** 0.5)
    ok = n_checked > 0 and worst_prog >= -1e-12 and worst_r >= -1e-12
    return ok, (f"{n_checked} steps, worst progress margin {worst_prog:.3e}, "
                f"worst radius margin {worst_r:.3e}")


@register_check("step-subproblem-monotone", ["step"])
def check_monotone_subproblem(ctx):
    from .step import check_subproblem_monotone
    rng = np.random.default_rng(ctx.seed + 17)
    inst = ctx.cubic()
    pr = inst.problem
    delta = 1e-2
    grid = np.linspace(0.01, 1.0, 60)
    prof = CurvatureProfile.from_function(lambda r: 3.0 * r ** 2, grid)
    # smallest M with sigma1((2d/5M)^(1/3)) = (2d/5M) <= 2d/15 -> M = 3
    M = 3.0
    x = pr.set.sample(rng, 1, pr.space)[0]
    rep = check_subproblem_monotone(pr, x, alpha_from(M, delta, 2), M, 2,
                                    delta=delta, sigma=prof, n_samples=400,
                                    seed=ctx.seed)
    return rep.passed, (f"min sampled form {rep.min_form:.3e}, "
                        f"threshold ok: {rep.mbig_ok}")


# ---------------------------------------------------------------------------
# solver checks


@register_check("solver-acceptance-soundness", ["solver"])
def check_acceptance(ctx):
    inst, cfg, res = ctx.power_delta_run()
    c = c_p_constant(cfg.p)
    worst = np.inf
    for rec in res.records:
        if rec.a_k is None:
            continue
        rhs = c * (rec.norm_v_psi ** (cfg.p + 2) / rec.M_plus) ** (1.0 / (cfg.p + 1))
        scale = max(abs(rec.progress_rhs), 1e-300)
        if abs(rhs - rec.progress_rhs) / scale > 1e-12:
            return False, "recorded progress rhs does not reproduce"
        worst = min(worst, rec.progress_lhs - rhs)
    return worst >= -1e-12, f"worst re-evaluated margin {worst:.3e}"


@register_check("solver-ak-positive", ["solver"])
def check_ak_positive(ctx):
    _, _, res = ctx.power_delta_run()
    aks = [r.a_k for r in res.records if r.a_k is not None]
    if not aks:
        return False, "no accepted steps"
    return all(a > 0 for a in aks), f"min a_k = {min(aks):.3e}"


@register_check("solver-m-bounded", ["solver"])
def check_m_bounded(ctx):
    inst, cfg, res = ctx.power_delta_run()
    env = inst.known["sigma_envelope"]
    M0 = default_M0(inst.problem, cfg)
    rinv = env.sigma_inverse(cfg.delta / 5.0)
    threshold = 2.0 * cfg.delta / (5.0 * rinv ** (cfg.p + 1))
    bound = 2.0 * max(threshold, M0)
    peak = max(r.M_plus for r in res.records)
    return peak <= bound * (1 + 1e-12), f"peak M+ {peak:.3e} vs bound {bound:.3e}"


@register_check("solver-certificate-dominates-merit", ["solver"])
def check_cert_dominates(ctx):
    worst = np.inf
    for inst, cfg, res in (ctx.power_eps_run(), ctx.game_run()):
        A = 0.0
        acc = np.zeros(inst.problem.n)
        for rec, x in zip([r for r in res.records if r.a_k is not None], res.xs):
            A += rec.a_k
            acc = acc + rec.a_k * x
            if rec.Delta_k is None:
                continue
            mlow = merit_lower_bound(inst.problem, acc / A, n_samples=256,
                                     seed=ctx.seed)
            worst = min(worst, rec.Delta_k - mlow)
    return worst >= -1e-9, f"worst Delta_k - merit_low = {worst:.3e}"


@register_check("solver-dual-norm-merit-link", ["solver"])
def check_dual_norm_merit(ctx):
    inst, cfg, res = ctx.power_eps_run()
    D = inst.problem.diameter()
    worst = np.inf
    for rec, x, g in zip(res.records, res.xs, res.v_psis):
        mlow = merit_lower_bound(inst.problem, x, n_samples=256, seed=ctx.seed)
        worst = min(worst, rec.norm_v_psi - mlow / D)
    return worst >= -1e-9, f"worst |v_psi| - merit/D = {worst:.3e}"


@register_check("solver-deterministic-trace", ["solver"])
def check_determinism(ctx):
    inst = ctx.power()
    x0 = np.ones(10) / np.sqrt(10.0)
    rows = []
    for _ in range(2):
        cfg = SolverConfig(p=1, delta=1e-3, epsilon=0.0, M0="auto",
                           max_outer=500, seed=7, x0=x0)
        rows.append(trace_rows(run(inst.problem, cfg)))
    return rows[0] == rows[1], f"{len(rows[0]) - 1} iterations compared"


@register_check("solver-telescoped-guarantee", ["solver"])
def check_telescope(ctx):
    from .solver import check_telescoped_guarantee
    worst = np.inf
    for inst, cfg, res in (ctx.power_delta_run(), ctx.power_eps_run(),
                           ctx.game_run()):
        x_star = inst.known.get("x_star")
        if x_star is None:
            continue
        rep = check_telescoped_guarantee(res, x_star, inst.problem)
        if not rep.ok:
            return False, f"telescope violated by {rep.slack:.3e} on {inst.name}"
        worst = min(worst, rep.slack)
    return True, f"min telescope slack {worst:.3e}"


# ---------------------------------------------------------------------------
# benchmark checks


@register_check("bench-monotonicity", ["bench"])
def check_bench_monotone(ctx):
    rng = np.random.default_rng(ctx.seed + 18)
    worst = np.inf
    for inst in ctx.instances():
        pr = inst.problem
        if not pr.oracle.monotone:
            continue
        X = pr.set.sample(rng, 1500, pr.space)
        Y = pr.set.sample(rng, 1500, pr.space)
        for x, y in zip(X, Y):
            worst = min(worst, float(np.dot(pr.oracle(y) - pr.oracle(x), y - x)))
    return worst >= -1e-10, f"min monotone product {worst:.3e}"


@register_check("bench-weak-solution", ["bench"])
def check_weak_solution(ctx):
    rng = np.random.default_rng(ctx.seed + 19)
    worst = np.inf
    n_with = 0
    for inst in ctx.instances():
        xs = inst.known.get("x_star")
        if xs is None:
            continue
        n_with += 1
        pr = inst.problem
        X = pr.set.sample(rng, 1000, pr.space)
        for x in X:
            worst = min(worst, float(np.dot(pr.oracle(x), x - xs)))
    return worst >= -1e-8 and n_with > 0, \
        f"min <V(x), x - x*> = {worst:.3e} over {n_with} instances"


@register_check("bench-analytic-dominates-empirical", ["bench"])
def check_analytic_dominates(ctx):
    worst = np.inf
    for inst in (ctx.power_half(), ctx.cubic(), ctx.affine()):
        fn_kappa = inst.known.get("kappa_v_fn")
        if fn_kappa is None:
            continue
        pr = inst.problem
        sp = pr.space
        metric = (NormedMetric(sp), NormedMetric(norm=sp.dual_norm))
        D = pr.diameter()
        grid = np.linspace(0.15 * D, 0.8 * D, 5)
        prof = gcb_estimate(pr.oracle, metric, grid, pr.set, n_pairs=16,
                            seed=ctx.seed)
        worst = min(worst, float(np.min(fn_kappa(grid) - prof.kappa_values)))
    return worst >= -1e-9, f"min analytic minus empirical = {worst:.3e}"


@register_check("bench-holder-derivative-bound", ["bench"])
def check_holder_da(ctx):
    rng = np.random.default_rng(ctx.seed + 20)
    worst = -np.inf
    for inst in (ctx.power(), ctx.power_half()):
        pr = inst.problem
        sp = pr.space
        p, nu, H = inst.known["holder"][0]
        X = pr.set.sample(rng, 2500, sp)
        Y = pr.set.sample(rng, 2500, sp)
        Hs = rng.standard_normal((2500, pr.n))
        for x, y, h in zip(X, Y, Hs):
            lhs = sp.dual_norm(pr.oracle.jvp(x, h) - pr.oracle.jvp(y, h))
            rhs = H * sp.norm(x - y) ** nu * sp.norm(h)
            worst = max(worst, lhs - rhs)
    return worst <= 1e-9, f"max Holder-derivative excess {worst:.3e}"


# ---------------------------------------------------------------------------
# runner


class CheckOutcome:
    def __init__(self, name, passed, detail):
        self.name = name
        self.passed = passed
        self.detail = detail


def run_checks(filter=None, seed=0, inject=(), verbose=False, printer=None):
    """Run (a filtered subset of) the registry; returns CheckOutcome list.

    filter matches against the check name and its module tags as a
    substring.  Failures never raise; exceptions become failed outcomes.
    """
    ctx = CheckContext(seed=seed, inject=inject)
    outcomes = []
    for name, tags, fn in CHECKS:
        if filter and filter not in name and all(filter != t for t in tags):
            continue
        try:
            passed, detail = fn(ctx)
        except Exception as exc:
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        outcomes.append(CheckOutcome(name, bool(passed), detail))
        if printer is not None:
            mark = "PASS" if passed else "FAIL"
            msg = f"[{mark}] {name}"
            if verbose or not passed:
                msg += f": {detail}"
            printer(msg)
    return outcomes
