"""Benchmark instances with stored ground truth.

Every instance couples a CompositeVI with whatever is known about it
analytically: solutions, smoothness constants, curvature closed forms.
Ground truths are produced by routines independent of the solver under
test (linear algebra, support enumeration), never by running the solver.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .curvature import EnvelopeSum, HolderEnvelope, LogOrthantMetric, NormedMetric
from .errors import (DimensionMismatchError, MalformedSpecError,
                     UnboundedLMOError, UromError)
from .space import (Ball, Box, CompositeVI, EuclideanSpace, OperatorOracle,
                    ProductSet, Simplex, WholeSpace, register_oracle)


class BenchmarkInstance:
    """Problem plus its known analytic facts.

    known keys in use: x_star, holder [(p, nu, H), ...], sigma_envelope,
    term_envelopes, kappa_v_fn, kappa_dv_fn, sigma1_fn, L.
    """

    def __init__(self, name, problem, known=None):
        self.name = name
        self.problem = problem
        self.known = dict(known or {})

    def __repr__(self):
        return f"BenchmarkInstance({self.name!r}, n={self.problem.n})"


# ---------------------------------------------------------------------------
# power potential: V(x) = scale ||x||^nu B x, gradient of scale ||x||^(2+nu)/(2+nu)


def _power_holder_H(scale, nu):
    # Hoelder constant of DV; collinear pairs attain (1+nu), the dense
    # numeric sup audit stays below (1+nu) 2^(1-nu).  A provable but looser
    # fallback is (5-nu) 2^(1-nu) via the D2V route.
    return scale * (1.0 + nu) * 2.0 ** (1.0 - nu)


def power_potential_oracle(space, nu, scale=1.0):
    if not 0.0 < nu <= 1.0:
        raise UromError("nu must lie in (0, 1]")

    def fn(x):
        nx = space.norm(x)
        return scale * nx ** nu * space.apply_B(x)

    def jacobian(x):
        nx = space.norm(x)
        B = space.B_dense()
        if nx == 0.0:
            return np.zeros((space.n, space.n))
        Bx = space.apply_B(x)
        return scale * (nx ** nu * B + nu * nx ** (nu - 2.0) * np.outer(Bx, Bx))

    def jvp(x, h):
        nx = space.norm(x)
        if nx == 0.0:
            return np.zeros(space.n)
        Bx = space.apply_B(x)
        return scale * (nx ** nu * space.apply_B(h)
                        + nu * nx ** (nu - 2.0) * float(np.dot(Bx, h)) * Bx)

    H = _power_holder_H(scale, nu)
    return OperatorOracle(fn, jvp=jvp, jacobian=jacobian, max_order=1, monotone=True,
                          name=f"power_potential(nu={nu})",
                          meta={"holder": [(1, nu, H)]},
                          builtin=("power_potential", {"nu": nu, "scale": scale}))


def _resolve_set(set_kind, n, default_radius=1.0):
    """set_kind: None -> origin-centered ball, str -> parsed spec, else a
    FeasibleSet instance used as-is."""
    if set_kind is None:
        return Ball(np.zeros(n), default_radius)
    if isinstance(set_kind, str):
        return _parse_set_spec(set_kind, n)
    return set_kind


def make_power_potential(n=10, nu=1.0, scale=1.0, set_kind=None, B="identity"):
    space = EuclideanSpace(n, B)
    fset = _resolve_set(set_kind, n)
    oracle = power_potential_oracle(space, nu, scale)
    H = _power_holder_H(scale, nu)
    env = HolderEnvelope(1, nu, H)
    known = {
        "x_star": np.zeros(n) if fset.contains(np.zeros(n), space=space) else None,
        "holder": [(1, nu, H)],
        "sigma_envelope": env,
        "kappa_v_fn": env.kappa,
    }
    return BenchmarkInstance(f"power_potential(n={n},nu={nu})",
                             CompositeVI(space, fset, oracle), known)


# ---------------------------------------------------------------------------
# Hoelder mixture: sum of two power potentials with different exponents


def holder_mixture_oracle(space, nu1=0.3, nu2=1.0, s1=1.0, s2=1.0):
    o1 = power_potential_oracle(space, nu1, s1)
    o2 = power_potential_oracle(space, nu2, s2)
    return OperatorOracle(
        lambda x: o1(x) + o2(x),
        jvp=lambda x, h: o1.jvp(x, h) + o2.jvp(x, h),
        jacobian=lambda x: o1.jacobian(x) + o2.jacobian(x),
        max_order=1, monotone=True, name=f"mixture(nu={nu1}+{nu2})",
        builtin=("holder_mixture", {"nu1": nu1, "nu2": nu2, "s1": s1, "s2": s2}))


def make_holder_mixture(n=10, nu1=0.3, nu2=1.0, s1=1.0, s2=1.0, set_kind=None):
    space = EuclideanSpace(n)
    fset = _resolve_set(set_kind, n)
    oracle = holder_mixture_oracle(space, nu1, nu2, s1, s2)
    e1 = HolderEnvelope(1, nu1, _power_holder_H(s1, nu1))
    e2 = HolderEnvelope(1, nu2, _power_holder_H(s2, nu2))
    known = {
        "x_star": np.zeros(n) if fset.contains(np.zeros(n), space=space) else None,
        "term_envelopes": [e1, e2],
        "sigma_envelope": EnvelopeSum([e1, e2]),
    }
    return BenchmarkInstance(f"mixture(n={n},nu={nu1}+{nu2})",
                             CompositeVI(space, fset, oracle), known)


# ---------------------------------------------------------------------------
# cubic vector field: V(x) = ||x||^2 B x + S x, S skew


def cubic_field_oracle(space, skew_seed=None, skew_scale=1.0):
    n = space.n
    if skew_seed is None:
        S = np.zeros((n, n))
    else:
        rng = np.random.default_rng(skew_seed)
        T = rng.standard_normal((n, n))
        S = skew_scale * (T - T.T) / 2.0

    def fn(x):
        return space.norm(x) ** 2 * space.apply_B(x) + S @ x

    def jacobian(x):
        Bx = space.apply_B(x)
        return space.norm(x) ** 2 * space.B_dense() + 2.0 * np.outer(Bx, Bx) + S

    def jvp(x, h):
        Bx = space.apply_B(x)
        return space.norm(x) ** 2 * space.apply_B(h) \
            + 2.0 * float(np.dot(Bx, h)) * Bx + S @ h

    def d2vp(x, h1, h2):
        Bx = space.apply_B(x)
        Bh1 = space.apply_B(h1)
        Bh2 = space.apply_B(h2)
        return 2.0 * (float(np.dot(Bh1, h2)) * Bx + float(np.dot(Bx, h2)) * Bh1
                      + float(np.dot(Bx, h1)) * Bh2)

    return OperatorOracle(fn, jvp=jvp, jacobian=jacobian, d2vp=d2vp, max_order=2,
                          monotone=True, name="cubic_field",
                          builtin=("cubic_field", {"skew_seed": skew_seed,
                                                   "skew_scale": skew_scale}))


def make_cubic_field(n=5, set_kind=None, skew_seed=None, skew_scale=1.0, B="identity"):
    space = EuclideanSpace(n, B)
    fset = _resolve_set(set_kind, n, default_radius=0.5)
    oracle = cubic_field_oracle(space, skew_seed, skew_scale)
    known = {
        "x_star": np.zeros(n) if fset.contains(np.zeros(n), space=space) else None,
        # deviation of the quadratic matrix map x -> DV(x) is exactly
        # t(1-t)(|d|^2 B + 2 Bd Bd^T): operator norm 3|d|^2 for any n, S
        "kappa_dv_fn": lambda r: 3.0 * np.asarray(r, dtype=float) ** 2,
        "sigma1_fn": lambda r: np.asarray(r, dtype=float) ** 3,
    }
    if fset.kind == "ball":
        R = fset.radius
        # valid upper envelope of kappa_V on the ball (triangle inequality
        # on the cubic deviation terms)
        known["kappa_v_fn"] = lambda r, R=R: 3.0 * R * np.asarray(r, dtype=float) ** 2 \
            + 2.0 * np.asarray(r, dtype=float) ** 3
    return BenchmarkInstance(f"cubic_field(n={n})",
                             CompositeVI(space, fset, oracle), known)


# ---------------------------------------------------------------------------
# bilinear saddle: V(u, w) = (A w + b, -A^T u + c) on Q_u x Q_w


def matrix_game_equilibrium(A, tol=1e-9):
    """One equilibrium (u, w, value) of min_u max_w u^T A w on simplices.

    Support enumeration: for each equal-size support pair solve the
    equal-payoff linear systems and test feasibility/optimality.  First hit
    in deterministic enumeration order wins; zero-sum games always have one.
    """
    n, m = A.shape
    if n > 12 or m > 12:
        raise UromError("support enumeration is desk-scale (n, m <= 12)")
    for k in range(1, min(n, m) + 1):
        for I in combinations(range(n), k):
            for J in combinations(range(m), k):
                Asub = A[np.ix_(I, J)]
                # unknowns (w_J, v): A_IJ w = v 1, sum w = 1
                M = np.zeros((k + 1, k + 1))
                M[:k, :k] = Asub
                M[:k, k] = -1.0
                M[k, :k] = 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                try:
                    sol = np.linalg.solve(M, rhs)
                except np.linalg.LinAlgError:
                    continue
                w_J, v = sol[:k], sol[k]
                Mt = np.zeros((k + 1, k + 1))
                Mt[:k, :k] = Asub.T
                Mt[:k, k] = -1.0
                Mt[k, :k] = 1.0
                try:
                    solu = np.linalg.solve(Mt, rhs)
                except np.linalg.LinAlgError:
                    continue
                u_I, v2 = solu[:k], solu[k]
                if abs(v - v2) > 1e-7 or np.any(w_J < -tol) or np.any(u_I < -tol):
                    continue
                u = np.zeros(n)
                u[list(I)] = np.maximum(u_I, 0.0)
                w = np.zeros(m)
                w[list(J)] = np.maximum(w_J, 0.0)
                u /= u.sum()
                w /= w.sum()
                # row player minimizes: off-support rows must not pay less
                if np.any(A @ w < v - 1e-8) or np.any(A.T @ u > v + 1e-8):
                    continue
                return u, w, float(v)
    raise UromError("support enumeration found no equilibrium")


def bilinear_saddle_oracle(space, A, b=None, c=None):
    A = np.asarray(A, dtype=float)
    n, m = A.shape
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
    c = np.zeros(m) if c is None else np.asarray(c, dtype=float)
    J = np.zeros((n + m, n + m))
    J[:n, n:] = A
    J[n:, :n] = -A.T
    g = np.concatenate([b, c])

    return OperatorOracle(
        lambda z: J @ z + g,
        jvp=lambda z, h: J @ h,
        jacobian=lambda z: J.copy(),
        d2vp=lambda z, h1, h2: np.zeros(n + m),
        max_order=2, monotone=True, name="bilinear_saddle",
        meta={"skew": True},
        builtin=("bilinear_saddle", {"A": A.tolist(), "b": b.tolist(), "c": c.tolist()}))


def make_bilinear_saddle(n, m, A, b=None, c=None, set_kind="simplex", radius=1.0):
    A = np.asarray(A, dtype=float)
    if A.shape != (n, m):
        raise DimensionMismatchError(f"payoff matrix shape {A.shape} != ({n}, {m})")
    space = EuclideanSpace(n + m)
    if set_kind == "simplex":
        fset = ProductSet([Simplex(n), Simplex(m)])
    elif set_kind == "box":
        fset = ProductSet([Box(-radius * np.ones(n), radius * np.ones(n)),
                           Box(-radius * np.ones(m), radius * np.ones(m))])
    elif set_kind == "ball":
        fset = ProductSet([Ball(np.zeros(n), radius), Ball(np.zeros(m), radius)])
    else:
        raise UromError(f"unsupported saddle set kind {set_kind!r}")
    oracle = bilinear_saddle_oracle(space, A, b, c)
    known = {"L": float(np.linalg.norm(A, 2)),
             "kappa_v_fn": lambda r: np.zeros_like(np.asarray(r, dtype=float))}
    if set_kind == "simplex":
        bb = np.zeros(n) if b is None else np.asarray(b, dtype=float)
        cc = np.zeros(m) if c is None else np.asarray(c, dtype=float)
        # linear terms fold into the payoff matrix on the simplex
        Abar = A + np.outer(bb, np.ones(m)) - np.outer(np.ones(n), cc)
        u, w, v = matrix_game_equilibrium(Abar)
        known["x_star"] = np.concatenate([u, w])
        known["game_value"] = v
    else:
        Jmat = oracle.jacobian(np.zeros(n + m))
        g = oracle(np.zeros(n + m))
        try:
            z = np.linalg.solve(Jmat, -g)
            if fset.contains(z, tol=-1e-9):
                known["x_star"] = z
        except np.linalg.LinAlgError:
            pass
    return BenchmarkInstance(f"bilinear_saddle({n}x{m},{set_kind})",
                             CompositeVI(space, fset, oracle), known)


# ---------------------------------------------------------------------------
# affine monotone field and the zero field


def affine_oracle(space, G, g):
    G = np.asarray(G, dtype=float)
    g = np.asarray(g, dtype=float)
    return OperatorOracle(
        lambda x: G @ x + g,
        jvp=lambda x, h: G @ h,
        jacobian=lambda x: G.copy(),
        d2vp=lambda x, h1, h2: np.zeros(space.n),
        max_order=2, monotone=True, name="affine",
        builtin=("affine", {"G": G.tolist(), "g": g.tolist()}))


def make_affine(n=5, seed=0, set_kind=None, psd_weight=1.0, skew_weight=1.0):
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((n, n))
    P = psd_weight * (Q @ Q.T) / n
    T = rng.standard_normal((n, n))
    S = skew_weight * (T - T.T) / 2.0
    G = P + S
    g = rng.standard_normal(n)
    space = EuclideanSpace(n)
    fset = _resolve_set(set_kind, n, default_radius=2.0)
    oracle = affine_oracle(space, G, g)
    known = {"kappa_v_fn": lambda r: np.zeros_like(np.asarray(r, dtype=float)),
             "L": float(np.linalg.norm(G, 2))}
    try:
        z = np.linalg.solve(G, -g)
        if fset.contains(z, tol=-1e-9, space=space):
            known["x_star"] = z
    except np.linalg.LinAlgError:
        pass
    return BenchmarkInstance(f"affine(n={n},seed={seed})",
                             CompositeVI(space, fset, oracle), known)


def zero_oracle(space):
    return OperatorOracle(
        lambda x: np.zeros(space.n),
        jvp=lambda x, h: np.zeros(space.n),
        jacobian=lambda x: np.zeros((space.n, space.n)),
        d2vp=lambda x, h1, h2: np.zeros(space.n),
        max_order=2, monotone=True, name="zero", builtin=("zero", {}))


def make_zero(n=4, set_kind=None):
    space = EuclideanSpace(n)
    fset = _resolve_set(set_kind, n)
    return BenchmarkInstance(f"zero(n={n})", CompositeVI(space, fset, zero_oracle(space)),
                             {"x_star": fset.project(np.zeros(n), space)})


# ---------------------------------------------------------------------------
# log-orthant demo maps (curvature experiments only, not VI instances)


def log_orthant_demo(kind="power", n=3, a=0.5, shift=1.0):
    """(map, metric, domain) triple for curvature runs under the log metric.

    "power": x -> x^a, geodesically affine in the log metric (zero
    curvature); "shift": x -> x + shift, curved.
    """
    metric = LogOrthantMetric()
    domain = Box(0.5 * np.ones(n), 2.0 * np.ones(n))
    if kind == "power":
        fn = lambda x: np.asarray(x, dtype=float) ** a
    elif kind == "shift":
        fn = lambda x: np.asarray(x, dtype=float) + shift
    else:
        raise UromError(f"unknown demo map {kind!r}")
    return fn, metric, domain


# ---------------------------------------------------------------------------
# merit lower bound


def merit_lower_bound(problem, x_bar, n_samples=512, seed=0):
    """Sampled lower bound on the weak-solution merit
    mu(x_bar) = sup_{x in Q} <V(x), x_bar - x>.

    Max over random points of Q plus LMO-guided extreme candidates; always a
    valid lower bound of the true merit.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    if problem.diameter() is None:
        raise UnboundedLMOError("merit lower bound needs a bounded search region")
    rng = np.random.default_rng(seed)
    cands = [problem.set.sample(rng, n_samples, problem.space)]
    vbar = problem.oracle(x_bar)
    for s in (vbar, -vbar):
        try:
            cands.append(problem.lmo(s)[None, :])
        except UromError:
            break
    best = -np.inf
    for batch in cands:
        for x in batch:
            best = max(best, float(np.dot(problem.oracle(x), x_bar - x)))
    return best


# ---------------------------------------------------------------------------
# instance-spec strings: "power_potential:n=10,nu=0.5,set=ball:D=2"


def _parse_value(v):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def _parse_set_spec(spec, n):
    parts = spec.split(":")
    kind = parts[0]
    kv = {}
    for p in parts[1:]:
        if "=" not in p:
            raise MalformedSpecError(f"bad set parameter {p!r}")
        key, val = p.split("=", 1)
        kv[key] = _parse_value(val)
    if kind == "ball":
        R = kv.get("R", kv.get("D", 2.0) / 2.0)
        return Ball(np.zeros(n), float(R))
    if kind == "box":
        lo = float(kv.get("lo", -1.0))
        hi = float(kv.get("hi", 1.0))
        return Box(lo * np.ones(n), hi * np.ones(n))
    if kind == "simplex":
        return Simplex(n)
    if kind == "whole":
        R = kv.get("R", kv.get("D", None))
        if "D" in kv:
            R = kv["D"] / 2.0
        return WholeSpace(n, None if R is None else float(R))
    raise MalformedSpecError(f"unknown set kind {kind!r}")


def parse_instance(spec):
    """Build a BenchmarkInstance from a spec string.

    Grammar: name[:key=value,...]; the set parameter nests with colons,
    e.g. "power_potential:n=10,nu=0.5,set=ball:D=2".
    """
    name, _, rest = spec.partition(":")
    kv = {}
    if rest:
        for item in rest.split(","):
            if "=" not in item:
                raise MalformedSpecError(f"bad parameter {item!r} in {spec!r}")
            key, val = item.split("=", 1)
            kv[key] = val
    set_spec = kv.pop("set", None)
    params = {k: _parse_value(v) for k, v in kv.items()}
    try:
        if name == "power_potential":
            n = int(params.pop("n", 10))
            fset = set_spec
            return make_power_potential(n=n, set_kind=fset, **params)
        if name == "holder_mixture":
            n = int(params.pop("n", 10))
            fset = set_spec
            return make_holder_mixture(n=n, set_kind=fset, **params)
        if name == "cubic_field":
            n = int(params.pop("n", 5))
            fset = set_spec
            return make_cubic_field(n=n, set_kind=fset, **params)
        if name == "affine":
            n = int(params.pop("n", 5))
            fset = set_spec
            return make_affine(n=n, set_kind=fset, **params)
        if name == "zero":
            n = int(params.pop("n", 4))
            fset = set_spec
            return make_zero(n=n, set_kind=fset)
        if name == "matrix_game":
            preset = params.pop("preset", None)
            if preset == "cycle":
                A = np.array([[1.0, -1.0], [-1.0, 1.0]])
            else:
                nn = int(params.pop("n", 2))
                mm = int(params.pop("m", 2))
                rng = np.random.default_rng(int(params.pop("seed", 0)))
                A = rng.uniform(-1.0, 1.0, (nn, mm))
            return make_bilinear_saddle(A.shape[0], A.shape[1], A,
                                        set_kind=str(params.pop("set_kind", "simplex")))
    except (TypeError, ValueError, UromError) as exc:
        raise MalformedSpecError(f"cannot build instance {spec!r}: {exc}") from exc
    raise MalformedSpecError(f"unknown instance name {name!r}")


register_oracle("power_potential", power_potential_oracle)
register_oracle("holder_mixture", holder_mixture_oracle)
register_oracle("cubic_field", cubic_field_oracle)
register_oracle("bilinear_saddle", lambda space, **kw: bilinear_saddle_oracle(space, **kw))
register_oracle("affine", lambda space, **kw: affine_oracle(space, **kw))
register_oracle("zero", lambda space, **kw: zero_oracle(space))
