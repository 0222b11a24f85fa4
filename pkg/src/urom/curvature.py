"""Global curvature bounds and their smoothed transforms.

For a map A between geodesic metric spaces, the point-wise curvature of a
pair (x, y) is

    Delta_A(x, y) = sup_{0 < t < 1} d(A(gamma(t)), xi(t)) / (t (1 - t)),

where gamma is the geodesic from x to y and xi the geodesic from A(x) to
A(y).  The global curvature bound kappa_A(r) is the supremum of Delta_A over
pairs at distance <= r.  kappa_A vanishes identically iff A maps geodesics
to geodesics (affine maps in the normed case).

The smoothed profiles

    sigma_0(r) = kappa_V(r),
    sigma_q(r) = 1/(q-1)! * int_0^r (r - t)^(q-1) kappa_{D^q V}(t) dt   (q >= 1)

upper-bound the order-q Taylor remainder of V and drive every step-size and
complexity formula downstream.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import simpson

from ._util import factorial
from .errors import AssumptionViolatedError, SamplingError, UromError


def default_t_grid(m=33, lo=0.01, hi=0.99):
    """Chebyshev points in (lo, hi): clustered near the ends where the
    t(1-t) weight is most sensitive."""
    j = np.arange(m)
    nodes = np.cos(np.pi * (2 * j + 1) / (2 * m))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[::-1]


class NormedMetric:
    """Flat metric of a normed space: straight-segment geodesics.

    The norm is taken from `space` (primal B-norm) or given directly as a
    callable (dual norm, operator norm, plain absolute value...).  With
    neither, the Euclidean/Frobenius norm applies.
    """

    kind = "normed"

    def __init__(self, space=None, norm=None):
        if norm is not None:
            self._norm = norm
        elif space is not None:
            self._norm = space.norm
        else:
            self._norm = lambda v: float(np.linalg.norm(v))
        self.space = space

    def geodesic(self, x, y, t):
        return (1.0 - t) * np.asarray(x, dtype=float) + t * np.asarray(y, dtype=float)

    def dist(self, x, y):
        return float(self._norm(np.asarray(y, dtype=float) - np.asarray(x, dtype=float)))

    def shoot(self, x, g, r):
        """Point at distance r from x in direction g."""
        n = self.dist(np.zeros_like(np.asarray(g, dtype=float)), g)
        if n == 0.0:
            raise UromError("zero direction")
        return np.asarray(x, dtype=float) + (r / n) * np.asarray(g, dtype=float)


class LogOrthantMetric:
    """Positive orthant with d(x, y) = ||ln y - ln x||_2.

    Geodesics are coordinate-wise power interpolations
    gamma(t)_i = x_i^(1-t) y_i^t.  The space is isometric to flat R^n via
    ln, hence Busemann (distances between geodesics are convex in t).
    """

    kind = "log-orthant"

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise UromError("log-orthant metric needs strictly positive coordinates")
        return x

    def geodesic(self, x, y, t):
        x = self._check(x)
        y = self._check(y)
        return x ** (1.0 - t) * y ** t

    def dist(self, x, y):
        x = self._check(x)
        y = self._check(y)
        return float(np.linalg.norm(np.log(y) - np.log(x)))

    def shoot(self, x, g, r):
        x = self._check(x)
        g = np.asarray(g, dtype=float)
        n = float(np.linalg.norm(g))
        if n == 0.0:
            raise UromError("zero direction")
        return np.exp(np.log(x) + (r / n) * g)


def _split_metric(metric):
    if isinstance(metric, tuple):
        dom, img = metric
    else:
        dom = img = metric
    return dom, img


def pointwise_delta(fn, x, y, metric, t_grid=None):
    """Point-wise curvature Delta_A(x, y) maximized over t_grid.

    Parameters
    ----------
    fn : callable, point -> image value (vector, matrix or scalar)
    metric : Metric or (domain_metric, image_metric) pair
    t_grid : interior points of (0, 1); Chebyshev 33-point default
    """
    dom, img = _split_metric(metric)
    if t_grid is None:
        t_grid = default_t_grid()
    if dom.dist(x, y) == 0.0:
        return 0.0
    Ax = fn(x)
    Ay = fn(y)
    best = 0.0
    for t in t_grid:
        if not 0.0 < t < 1.0:
            raise UromError("t_grid must lie strictly inside (0, 1)")
        dev = img.dist(fn(dom.geodesic(x, y, t)), img.geodesic(Ax, Ay, t))
        val = dev / (t * (1.0 - t))
        if val > best:
            best = val
    return best


class CurvatureProfile:
    """Nondecreasing curvature bound on a grid, anchored at kappa(0) = 0.

    Carries either empirical running-max values or an exact callable
    (closed forms, Hoelder envelopes).  Evaluation between grid points is
    piecewise linear; past the last grid point it raises.
    """

    def __init__(self, r_grid, kappa_values, provenance, sample_meta=None, kappa_fn=None):
        r = np.asarray(r_grid, dtype=float)
        k = np.asarray(kappa_values, dtype=float)
        if r.ndim != 1 or r.shape != k.shape:
            raise UromError("r_grid/kappa_values shape mismatch")
        if r.size == 0 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise UromError("r_grid must be strictly increasing and positive")
        if np.any(k < 0):
            raise UromError("kappa values must be nonnegative")
        if np.any(np.diff(k) < 0):
            raise UromError("kappa values must be nondecreasing (monotonize first)")
        self.r_grid = r
        self.kappa_values = k
        self.provenance = provenance
        self.sample_meta = dict(sample_meta or {})
        self.kappa_fn = kappa_fn

    @classmethod
    def from_samples(cls, r_grid, raw_values, provenance="empirical", sample_meta=None):
        vals = np.maximum.accumulate(np.asarray(raw_values, dtype=float))
        return cls(r_grid, vals, provenance, sample_meta)

    @classmethod
    def from_function(cls, fn, r_grid, provenance="closed-form"):
        r = np.asarray(r_grid, dtype=float)
        return cls(r, np.maximum.accumulate(fn(r)), provenance, kappa_fn=fn)

    @property
    def r_max(self):
        return float(self.r_grid[-1])

    def kappa(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_max * (1 + 1e-12)):
            raise UromError(f"r outside profile range [0, {self.r_max}]")
        if self.kappa_fn is not None:
            out = self.kappa_fn(r)
        else:
            out = np.interp(r, np.concatenate(([0.0], self.r_grid)),
                            np.concatenate(([0.0], self.kappa_values)))
        return float(out) if np.ndim(r) == 0 else np.asarray(out, dtype=float)


def gcb_estimate(fn, metric, r_grid, domain, n_pairs=64, t_grid=None, seed=0):
    """Empirical curvature profile by pair sampling.

    For each r in r_grid: draw base points x from `domain` (a feasible set
    with sample/contains), shoot geodesics of length exactly r in random
    directions, reject shots leaving the domain, and take the max of
    pointwise_delta over the accepted pairs.  The per-r maxima are then
    monotonized by a running max.  Everything is driven by a single seeded
    generator, so a (seed, grids, n_pairs) tuple pins the profile exactly.
    """
    dom, _ = _split_metric(metric)
    if t_grid is None:
        t_grid = default_t_grid()
    r_grid = np.asarray(r_grid, dtype=float)
    rng = np.random.default_rng(seed)
    raw = np.empty(r_grid.size)
    attempts_total = 0
    for j, r in enumerate(r_grid):
        got = 0
        attempts = 0
        best = 0.0
        while got < n_pairs:
            attempts += 1
            if attempts > 200 * n_pairs:
                raise SamplingError(
                    f"could not place pairs at distance {r} inside the domain")
            x = domain.sample(rng, 1)[0]
            g = rng.standard_normal(x.size)
            y = dom.shoot(x, g, r)
            if not domain.contains(y):
                continue
            best = max(best, pointwise_delta(fn, x, y, metric, t_grid))
            got += 1
        raw[j] = best
        attempts_total += attempts
    meta = {"seed": seed, "n_pairs": int(n_pairs), "t_grid_size": int(len(t_grid)),
            "attempts": int(attempts_total), "metric": dom.kind}
    return CurvatureProfile.from_samples(r_grid, raw, provenance="empirical", sample_meta=meta)


class GrowthReport:
    def __init__(self, passed, worst_margin, worst_r, worst_beta, n_checked):
        self.passed = passed
        self.worst_margin = worst_margin
        self.worst_r = worst_r
        self.worst_beta = worst_beta
        self.n_checked = n_checked

    def __repr__(self):
        state = "ok" if self.passed else "FAIL"
        return (f"GrowthReport({state}, worst_margin={self.worst_margin:.3e} "
                f"at r={self.worst_r}, beta={self.worst_beta}, n={self.n_checked})")


def check_quadratic_growth(profile, betas=(0.25, 0.5, 0.75), tol=1e-9):
    """Verify kappa(beta r) >= beta^2 kappa(r) - tol on the profile grid.

    This is the quadratic-growth property curvature bounds inherit when the
    image space is Busemann; margins should be >= -tol for valid profiles.
    """
    worst = np.inf
    worst_r = worst_beta = None
    n = 0
    for r in profile.r_grid:
        kr = profile.kappa(r)
        for b in betas:
            if not 0.0 <= b <= 1.0:
                raise UromError("betas must lie in [0, 1]")
            margin = profile.kappa(b * r) - b * b * kr
            n += 1
            if margin < worst:
                worst, worst_r, worst_beta = margin, float(r), float(b)
    return GrowthReport(worst >= -tol, worst, worst_r, worst_beta, n)


def holder_kappa_envelope(nu, H, r):
    """Curvature envelope of a nu-Hoelder-derivative map:
    kappa(r) <= 2^(1-nu) H / (1+nu) * r^(1+nu)."""
    if not 0.0 <= nu <= 1.0:
        raise UromError("nu must lie in [0, 1]")
    if H < 0:
        raise UromError("H must be nonnegative")
    r = np.asarray(r, dtype=float)
    out = 2.0 ** (1.0 - nu) * H / (1.0 + nu) * r ** (1.0 + nu)
    return float(out) if np.ndim(r) == 0 else out


def holder_sigma_constant(p, nu):
    """c_{p,nu} = 2^(1-nu) / ((1+nu)(2+nu)...(p+nu))."""
    if p < 1:
        raise UromError("p must be >= 1")
    denom = 1.0
    for k in range(1, p + 1):
        denom *= k + nu
    return 2.0 ** (1.0 - nu) / denom


def holder_sigma_envelope(p, nu, H, r):
    """sigma_{p-1}(r) <= c_{p,nu} H r^(p+nu) for D^p V nu-Hoelder with constant H."""
    if not 0.0 <= nu <= 1.0:
        raise UromError("nu must lie in [0, 1]")
    r = np.asarray(r, dtype=float)
    out = holder_sigma_constant(p, nu) * H * r ** (p + nu)
    return float(out) if np.ndim(r) == 0 else out


def _simpson_doubling(g, r, n0=129, rel_tol=1e-10, max_nodes=2 ** 15):
    """Composite Simpson on [0, r] with node doubling until two successive
    estimates agree to rel_tol (relative).  Returns (value, nodes_used)."""
    n = n0
    prev = None
    while True:
        t = np.linspace(0.0, r, n)
        val = float(simpson(g(t), x=t))
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-30):
            return val, n
        if 2 * n - 1 > max_nodes:
            return val, n
        prev = val
        n = 2 * n - 1


def sigma_hat(q, profile, r, rel_tol=1e-10):
    """Smoothed curvature sigma_q(r) from a kappa_{D^q V} profile.

    q = 0 returns the profile itself; q >= 1 integrates
    (r-t)^(q-1) kappa(t) / (q-1)! over [0, r].
    """
    if q < 0:
        raise UromError("q must be nonnegative")
    r = float(r)
    if r < 0:
        raise UromError("r must be nonnegative")
    if q == 0:
        return profile.kappa(r) if r > 0 else 0.0
    if r == 0.0:
        return 0.0
    m = q - 1
    fac = factorial(m)

    def g(t):
        return (r - t) ** m * np.asarray(profile.kappa(t), dtype=float) / fac

    val, _ = _simpson_doubling(g, r, rel_tol=rel_tol)
    return max(0.0, val)


def sigma_hat_prime(q, profile, r, rel_tol=1e-10):
    """Derivative sigma_q'(r): kappa(r) for q = 1, else the order-(q-1)
    weighted integral.  Defined for q >= 1."""
    if q < 1:
        raise UromError("sigma_hat_prime needs q >= 1")
    r = float(r)
    if r == 0.0:
        return 0.0
    if q == 1:
        return profile.kappa(r)
    m = q - 2
    fac = factorial(m)

    def g(t):
        return (r - t) ** m * np.asarray(profile.kappa(t), dtype=float) / fac

    val, _ = _simpson_doubling(g, r, rel_tol=rel_tol)
    return max(0.0, val)


class InverseResult(float):
    """Float with a .saturated flag (y beyond sigma(r_max) clips to r_max)."""

    def __new__(cls, value, saturated):
        obj = super().__new__(cls, value)
        obj.saturated = saturated
        return obj


def sigma_hat_inverse(q, profile, y, tol_scale=1e-12):
    """Monotone inverse of r -> sigma_q(r) by bisection on [0, r_max].

    Requires a strictly increasing sigma (fails on kappa == 0 profiles);
    values beyond sigma(r_max) return r_max with the saturated flag set.
    """
    if y < 0:
        raise UromError("y must be nonnegative")
    if y == 0.0:
        return InverseResult(0.0, False)
    r_hi = profile.r_max
    s_hi = sigma_hat(q, profile, r_hi)
    if s_hi <= 0.0:
        raise AssumptionViolatedError(
            "sigma profile is not strictly increasing (kappa vanishes identically)")
    # strict grid increase: the inversion contract needs sigma injective
    svals = [sigma_hat(q, profile, r) for r in profile.r_grid]
    if any(b <= a for a, b in zip(svals, svals[1:])):
        raise AssumptionViolatedError("sigma profile is not strictly increasing on the grid")
    if y >= s_hi:
        return InverseResult(r_hi, y > s_hi)
    lo, hi = 0.0, r_hi
    tol = tol_scale * max(1.0, r_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sigma_hat(q, profile, mid) < y:
            lo = mid
        else:
            hi = mid
    return InverseResult(0.5 * (lo + hi), False)


class SmoothedCurvature:
    """sigma_q attached to a fixed profile, with cached evaluations."""

    def __init__(self, profile, q, rel_tol=1e-10):
        self.profile = profile
        self.q = int(q)
        self.rel_tol = rel_tol
        self._cache = {}

    def value(self, r):
        key = ("v", float(r))
        if key not in self._cache:
            self._cache[key] = sigma_hat(self.q, self.profile, r, self.rel_tol)
        return self._cache[key]

    def prime(self, r):
        key = ("p", float(r))
        if key not in self._cache:
            self._cache[key] = sigma_hat_prime(self.q, self.profile, r, self.rel_tol)
        return self._cache[key]

    def inverse(self, y):
        return sigma_hat_inverse(self.q, self.profile, y)


class HolderEnvelope:
    """Closed-form sigma_{p-1} envelope c_{p,nu} H r^(p+nu) with exact inverse.

    Stands in for a profile wherever only sigma_{p-1} and its inverse are
    needed (step-size predictions, complexity estimates).
    """

    def __init__(self, p, nu, H):
        if not 0.0 <= nu <= 1.0:
            raise UromError("nu must lie in [0, 1]")
        self.p = int(p)
        self.nu = float(nu)
        self.H = float(H)
        self.c = holder_sigma_constant(self.p, self.nu)

    def kappa(self, r):
        return holder_kappa_envelope(self.nu, self.H, r)

    def sigma(self, r):
        r = np.asarray(r, dtype=float)
        out = self.c * self.H * r ** (self.p + self.nu)
        return float(out) if np.ndim(r) == 0 else out

    def sigma_prime(self, r):
        return self.c * self.H * (self.p + self.nu) * float(r) ** (self.p + self.nu - 1.0)

    def sigma_inverse(self, y):
        if y < 0:
            raise UromError("y must be nonnegative")
        if self.H == 0.0:
            raise AssumptionViolatedError("flat envelope (H = 0) has no inverse")
        return (float(y) / (self.c * self.H)) ** (1.0 / (self.p + self.nu))


class EnvelopeSum:
    """Pointwise sum of sigma envelopes (mixtures of smoothness classes).

    The sum of valid sigma_{p-1} bounds for V_1, V_2 is a valid bound for
    V_1 + V_2; the inverse is computed by bisection with an expanding
    bracket.
    """

    def __init__(self, envelopes):
        self.envelopes = list(envelopes)

    def sigma(self, r):
        return sum(e.sigma(r) for e in self.envelopes)

    def sigma_inverse(self, y):
        if y <= 0:
            return 0.0
        hi = 1.0
        while self.sigma(hi) < y:
            hi *= 2.0
            if hi > 1e150:
                raise AssumptionViolatedError("envelope sum never reaches y")
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.sigma(mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def profile_csv_rows(profile, orders=()):
    """Rows for the profile CSV: r, kappa, sigma_q columns, provenance, seed."""
    header = ["r", "kappa"] + [f"sigma_{q}" for q in orders] + ["provenance", "seed"]
    rows = [header]
    seed = profile.sample_meta.get("seed", "")
    for r in profile.r_grid:
        row = [r, profile.kappa(r)]
        row += [sigma_hat(q, profile, r) for q in orders]
        row += [profile.provenance, seed]
        rows.append(row)
    return rows
