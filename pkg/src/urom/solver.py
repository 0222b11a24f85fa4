"""Outer solver: adaptive regularization line search, dual averaging of
reduced operators, and accuracy certificates.

Each outer iteration solves one doubly regularized step from the dual
iterate v_k, doubling M until either the dual-gap progress inequality or
the residual test ||v_psi||_* <= delta accepts.  Accepted reduced operators
feed a weighted dual-averaging sequence whose linear accumulators give a
computable upper bound Delta_k on the weighted merit of the averaged point;
the run stops on ||v_psi||_* <= delta or Delta_k <= epsilon.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._util import fmt_float
from .curvature import CurvatureProfile, EnvelopeSum, HolderEnvelope, sigma_hat_inverse
from .errors import InnerSolveError, LineSearchStalledError, UromError
from .step import alpha_from, c_p_constant, solve_step, verify_progress

TRACE_COLUMNS = ["k", "i_k", "M_plus", "alpha", "r", "norm_v_psi", "a_k", "A_k",
                 "Delta_k", "progress_lhs", "progress_rhs", "time_ms"]


@dataclass
class SolverConfig:
    """Run parameters.

    delta targets the exact stationarity residual ||v_psi||_*, epsilon the
    merit certificate of the averaged point; setting one of them to 0
    disables that stopping test (not both).  M0 = "auto" applies
    M0 = (2 eps / 5) (1/c_p)^(p+1) D^p, with eps replaced by delta * D when
    only delta is active.
    """

    p: int = 1
    delta: float = 1e-6
    epsilon: float = 0.0
    M0: object = "auto"
    max_outer: int = 1000
    max_doublings: int = 60
    M_min: float = 1e-300
    tol_inner: float = None
    max_inner_iters: int = 200000
    seed: int = 0
    x0: object = None
    record_vectors: bool = True

    def __post_init__(self):
        if self.p not in (1, 2):
            raise UromError("p must be 1 or 2")
        if self.delta < 0 or self.epsilon < 0:
            raise UromError("delta and epsilon must be nonnegative")
        if self.delta == 0 and self.epsilon == 0:
            raise UromError("at least one stopping target must be positive")
        if self.M0 != "auto" and float(self.M0) <= 0:
            raise UromError("M0 must be positive or 'auto'")

    def resolved_tol_inner(self):
        if self.tol_inner is not None:
            return self.tol_inner
        if self.delta > 0:
            return min(self.delta / 100.0, 1e-8)
        # certificate-only runs: an inner residual rho shifts Delta_k by up
        # to ||rho||_* D, so keep it well below the 1e-9 honesty budget
        return 1e-10


def default_M0(problem, config):
    """M0 = (2 eps / 5) (1/c_p)^(p+1) D^p; delta-only runs use eps = delta D."""
    D = problem.diameter()
    if D is None:
        raise UromError("auto M0 needs a bounded set or a radius bound")
    eps = config.epsilon if config.epsilon > 0 else config.delta * D
    c = c_p_constant(config.p)
    return (2.0 * eps / 5.0) * (1.0 / c) ** (config.p + 1) * D ** config.p


@dataclass
class IterationRecord:
    k: int
    i_k: int
    M_before: float
    M_plus: float
    alpha: float
    r: float
    norm_v_psi: float
    a_k: float = None
    A_k: float = None
    Delta_k: float = None
    progress_lhs: float = None
    progress_rhs: float = None
    time_ms: float = None


class Certificate:
    """Linear accumulators of the dual-averaging certificate.

    Maintains s = sum a_i v_psi_i, c = sum a_i <v_psi_i, x_i>, A = sum a_i;
    the gap Delta = (c - <s, lmo(s)>) / A equals
    max_{x in Q} (1/A) sum a_i <v_psi_i, x_i - x>.
    """

    def __init__(self, n):
        self.A = 0.0
        self.s = np.zeros(n)
        self.c = 0.0

    def update(self, a, v_psi, x):
        self.A += a
        self.s += a * v_psi
        self.c += a * float(np.dot(v_psi, x))

    def gap(self, problem):
        if self.A <= 0.0:
            raise UromError("certificate has no mass yet")
        x_worst = problem.lmo(self.s)
        return (self.c - float(np.dot(self.s, x_worst))) / self.A


def update_certificate(cert, a, x, v_psi, problem=None):
    """Push one (a, x, v_psi) triple; returns the new gap when computable."""
    cert.update(a, v_psi, x)
    if problem is not None and problem.diameter() is not None:
        return cert.gap(problem)
    return None


def dual_step(problem, v, a, v_psi):
    """v+ = proj_Q(v - a B^-1 v_psi)."""
    return problem.project(v - a * problem.space.apply_Binv(v_psi))


def line_search_M(problem, v_k, M_k, config, collect=None):
    """Double M from M_k until the step at v_k is accepted.

    Acceptance: progress inequality with c_p, or residual <= delta.  Inner
    solver failures count as rejections (doubling also fixes subproblem
    conditioning); the budget exhausting raises with diagnostics.
    """
    delta = config.delta
    p = config.p
    tol_inner = config.resolved_tol_inner()
    last_error = None
    for i in range(config.max_doublings + 1):
        M_plus = M_k * 2.0 ** i
        alpha = alpha_from(M_plus, delta, p)
        try:
            step = solve_step(problem, v_k, alpha, M_plus, p, tol_inner=tol_inner,
                              max_inner_iters=config.max_inner_iters)
        except InnerSolveError as exc:
            last_error = exc
            if collect is not None:
                collect.append((M_plus, "inner-failure"))
            continue
        report = verify_progress(step, M_plus, delta, problem.space)
        if report.accepted:
            return M_plus, step, i, report
        if collect is not None:
            collect.append((M_plus, "rejected"))
    raise LineSearchStalledError(
        f"no acceptable M within {config.max_doublings} doublings from {M_k}",
        M_last=M_k * 2.0 ** config.max_doublings,
        diagnostics={"last_inner_error": last_error})


@dataclass
class RunResult:
    status: str
    iterations: int
    x_last: np.ndarray
    x_bar: np.ndarray
    Delta_final: float
    norm_v_psi_final: float
    records: list
    config: SolverConfig
    M_final: float
    wall_time_s: float
    x0: np.ndarray
    xs: list = field(default_factory=list)
    v_psis: list = field(default_factory=list)
    vs: list = field(default_factory=list)
    certificate: Certificate = None
    error: str = None


def run(problem, config):
    """Run the solver to a stopping test, the iteration cap, or failure.

    Status: "stopped-on-delta" | "stopped-on-epsilon" | "max-iters" |
    "inner-failure".
    """
    space = problem.space
    t_start = time.perf_counter()
    if config.x0 is not None:
        x0 = np.asarray(config.x0, dtype=float)
        if not problem.set.contains(x0, space=space):
            raise UromError("x0 lies outside the feasible set")
    else:
        x0 = problem.project(np.zeros(problem.n))
    M0 = default_M0(problem, config) if config.M0 == "auto" else float(config.M0)

    bounded = problem.diameter() is not None
    if config.epsilon > 0 and not bounded:
        raise UromError("epsilon stopping needs a bounded feasible set")
    cert = Certificate(problem.n)
    v = x0.copy()
    M_k = M0
    A = 0.0
    xbar_acc = np.zeros(problem.n)
    records = []
    xs, v_psis, vs = [], [], [v.copy()]
    status = "max-iters"
    Delta = None
    norm_v_final = None

    k = 0
    while k < config.max_outer:
        k += 1
        t0 = time.perf_counter()
        try:
            M_plus, step, i_k, rep = line_search_M(problem, v, M_k, config)
        except LineSearchStalledError as exc:
            status = "inner-failure"
            res = _finish(problem, status, k - 1, records, config, M_k, t_start,
                          x0, xs, v_psis, vs, cert, A, xbar_acc, Delta, norm_v_final)
            res.error = str(exc)
            return res
        x_next = step.x_plus
        M_k = max(M_plus / 2.0, config.M_min)
        norm_v_final = rep.norm_v_psi
        rec = IterationRecord(k=k, i_k=i_k, M_before=M_plus / 2.0 ** i_k,
                              M_plus=M_plus, alpha=step.alpha, r=step.r,
                              norm_v_psi=rep.norm_v_psi,
                              progress_lhs=rep.lhs, progress_rhs=rep.rhs)
        if config.record_vectors:
            xs.append(x_next.copy())
            v_psis.append(step.v_psi.copy())

        if rep.norm_v_psi <= config.delta:
            rec.time_ms = (time.perf_counter() - t0) * 1e3
            records.append(rec)
            status = "stopped-on-delta"
            break

        a = rep.lhs / rep.norm_v_psi ** 2
        A += a
        xbar_acc += a * x_next
        cert.update(a, step.v_psi, x_next)
        rec.a_k = a
        rec.A_k = A
        if bounded:
            Delta = cert.gap(problem)
            rec.Delta_k = Delta
            if config.epsilon > 0 and Delta <= config.epsilon:
                rec.time_ms = (time.perf_counter() - t0) * 1e3
                records.append(rec)
                status = "stopped-on-epsilon"
                break
        v = dual_step(problem, v, a, step.v_psi)
        vs.append(v.copy())
        rec.time_ms = (time.perf_counter() - t0) * 1e3
        records.append(rec)

    return _finish(problem, status, k, records, config, M_k, t_start, x0,
                   xs, v_psis, vs, cert, A, xbar_acc, Delta, norm_v_final)


def _finish(problem, status, k, records, config, M_k, t_start, x0, xs, v_psis,
            vs, cert, A, xbar_acc, Delta, norm_v_final):
    x_last = xs[-1].copy() if xs else x0.copy()
    x_bar = xbar_acc / A if A > 0 else x0.copy()
    return RunResult(status=status, iterations=k, x_last=x_last, x_bar=x_bar,
                     Delta_final=Delta, norm_v_psi_final=norm_v_final,
                     records=records, config=config, M_final=M_k,
                     wall_time_s=time.perf_counter() - t_start, x0=x0,
                     xs=xs, v_psis=v_psis, vs=vs, certificate=cert)


def _sigma_inverse_fn(profile_or_envelope, p):
    """Uniform access to sigma_{p-1}^-1 across profile/envelope inputs."""
    obj = profile_or_envelope
    if isinstance(obj, CurvatureProfile):
        return lambda y: float(sigma_hat_inverse(p - 1, obj, y))
    if isinstance(obj, (HolderEnvelope, EnvelopeSum)):
        if isinstance(obj, HolderEnvelope) and obj.p != p:
            raise UromError(f"envelope order {obj.p} != requested p={p}")
        return obj.sigma_inverse
    if callable(obj):
        return obj
    raise UromError("need a CurvatureProfile, HolderEnvelope, or callable inverse")


def predicted_iterations(profile_or_envelope, config, R0_or_D, mode):
    """Worst-case outer-iteration bound.

    mode="delta" (R0_or_D is the start distance R0):
        (4/5)^(2/(p+1)) [ R0/c_p max(1/sigma^-1(delta/5),
                                     (5 M0/(2 delta))^(1/(p+1))) ]^2
    mode="epsilon" (R0_or_D is the diameter D):
        (4/5)^(2/(p+2)) [ D/c_p max(1/sigma^-1(eps/(5 D)),
                                    (5 M0 D/(2 eps))^(1/(p+1))) ]^(2(p+1)/(p+2))
    """
    p = config.p
    if config.M0 == "auto":
        raise UromError("resolve M0 before predicting (default_M0)")
    M0 = float(config.M0)
    c = c_p_constant(p)
    sinv = _sigma_inverse_fn(profile_or_envelope, p)
    if mode == "delta":
        delta = config.delta
        if delta <= 0:
            raise UromError("delta mode needs delta > 0")
        R0 = R0_or_D
        inner = max(1.0 / sinv(delta / 5.0), (5.0 * M0 / (2.0 * delta)) ** (1.0 / (p + 1)))
        return (0.8) ** (2.0 / (p + 1)) * (R0 / c * inner) ** 2
    if mode == "epsilon":
        eps = config.epsilon
        if eps <= 0:
            raise UromError("epsilon mode needs epsilon > 0")
        D = R0_or_D
        inner = max(1.0 / sinv(eps / (5.0 * D)),
                    (5.0 * M0 * D / (2.0 * eps)) ** (1.0 / (p + 1)))
        return (0.8) ** (2.0 / (p + 2)) * (D / c * inner) ** (2.0 * (p + 1) / (p + 2))
    raise UromError("mode must be 'delta' or 'epsilon'")


@dataclass
class TelescopeReport:
    ok: bool
    lhs: float
    rhs: float
    slack: float
    per_term_min: float
    quad_sum: float
    n_terms: int


def check_telescoped_guarantee(result, x_ref, problem, tol_scale=1e-8):
    """Replay the dual-step recursion from the trace and verify

        1/2 ||x0 - x||^2 >= 1/2 ||v_K - x||^2 + 1/2 sum a_i^2 ||v_psi_i||_*^2
                            + sum a_i <v_psi_i, x_i - x>

    at x = x_ref.  The v sequence is recomputed (not trusted from the run),
    so this doubles as an independent audit of the dual updates.
    """
    space = problem.space
    x_ref = np.asarray(x_ref, dtype=float)
    a_list = [r.a_k for r in result.records if r.a_k is not None]
    n_terms = len(a_list)
    v = result.x0.copy()
    quad = 0.0
    cross = 0.0
    per_term_min = np.inf
    for a, g, xi in zip(a_list, result.v_psis, result.xs):
        quad += a * a * space.dual_norm(g) ** 2
        term = float(np.dot(g, xi - x_ref))
        per_term_min = min(per_term_min, term)
        cross += a * term
        v = problem.project(v - a * space.apply_Binv(g))
    lhs = 0.5 * space.norm(result.x0 - x_ref) ** 2
    rhs = 0.5 * space.norm(v - x_ref) ** 2 + 0.5 * quad + cross
    tol = tol_scale * max(space.norm(result.x0 - x_ref) ** 2, 1e-300)
    return TelescopeReport(ok=lhs - rhs >= -tol, lhs=lhs, rhs=rhs,
                           slack=lhs - rhs,
                           per_term_min=float(per_term_min) if n_terms else 0.0,
                           quad_sum=quad, n_terms=n_terms)


def trace_rows(result):
    """Trace CSV rows (exact column order).  time_ms stays empty: the trace
    must be byte-identical across reruns; wall times go to the summary."""
    rows = [TRACE_COLUMNS]
    for r in result.records:
        rows.append([r.k, r.i_k, fmt_float(r.M_plus), fmt_float(r.alpha),
                     fmt_float(r.r), fmt_float(r.norm_v_psi), fmt_float(r.a_k),
                     fmt_float(r.A_k), fmt_float(r.Delta_k),
                     fmt_float(r.progress_lhs), fmt_float(r.progress_rhs), ""])
    return rows


def write_trace_csv(result, path):
    with open(path, "w", newline="") as f:
        for row in trace_rows(result):
            f.write(",".join(str(c) for c in row))
            f.write("\n")


def _predicted_or_none(sigma_obj, cfg, scale, mode):
    if sigma_obj is None or scale is None:
        return None
    try:
        return predicted_iterations(sigma_obj, cfg, scale, mode)
    except (UromError, ValueError, ZeroDivisionError):
        return None


def summary_dict(result, problem=None, known=None, extra=None):
    """JSON-ready run summary.

    Worst-case iteration predictions are filled in when the caller supplies
    the instance's known analytic smoothing (sigma_envelope) and, for the
    delta mode, a start-distance bound (x_star if known, else the diameter).
    """
    cfg = result.config
    known = known or {}
    M0_res = None
    if cfg.M0 != "auto":
        M0_res = float(cfg.M0)
    elif problem is not None and problem.diameter() is not None:
        M0_res = default_M0(problem, cfg)
    pred_d = pred_e = None
    sigma_obj = known.get("sigma_envelope")
    if sigma_obj is not None and M0_res is not None:
        cfg_num = replace(cfg, M0=M0_res)
        D = problem.diameter() if problem is not None else None
        if cfg.delta > 0:
            R0 = D
            if known.get("x_star") is not None:
                R0 = problem.space.norm(result.x0 - known["x_star"])
            pred_d = _predicted_or_none(sigma_obj, cfg_num, R0, "delta")
        if cfg.epsilon > 0:
            pred_e = _predicted_or_none(sigma_obj, cfg_num, D, "epsilon")
    out = {
        "status": result.status,
        "iterations": result.iterations,
        "final_delta_cert": result.Delta_final,
        "final_norm_v_psi": result.norm_v_psi_final,
        "predicted_K_delta": pred_d,
        "predicted_K_epsilon": pred_e,
        "M_final": result.M_final,
        "wall_time_s": result.wall_time_s,
        "seed": cfg.seed,
        "config": {
            "p": cfg.p, "delta": cfg.delta, "epsilon": cfg.epsilon,
            "M0": cfg.M0 if cfg.M0 == "auto" else float(cfg.M0),
            "M0_resolved": M0_res,
            "max_outer": cfg.max_outer, "max_doublings": cfg.max_doublings,
            "seed": cfg.seed,
        },
    }
    if extra:
        out.update(extra)
    return out
