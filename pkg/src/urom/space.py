"""Euclidean setting, feasible sets, operator oracles and problem container.

The ambient space is R^n equipped with a self-adjoint positive definite
operator B defining the primal norm ||x|| = <Bx, x>^(1/2) and the dual norm
||s||_* = <s, B^-1 s>^(1/2).  Feasible sets come in five kinds: the whole
space (optionally with a radius bound used by certificates), boxes, balls of
the B-norm, the standard simplex, and finite products of these.  Projections
are exact: boxes and simplices require a diagonal B (coordinate-separable
closed forms), balls and the whole space accept any B.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import (
    DimensionMismatchError,
    MetricCompatibilityError,
    UnboundedLMOError,
    UromError,
)

TOL_PROJ = 1e-12
TOL_LMO = 1e-12

_SYM_TOL = 1e-12


def _as_vec(x, n, what="vector"):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatchError(f"{what}: expected shape ({n},), got {x.shape}")
    return x


class EuclideanSpace:
    """R^n with inner product <Bx, y>.

    Parameters
    ----------
    n : int
        Dimension.
    B : "identity", 1-D array (diagonal), or 2-D array (dense spd matrix)
        Metric operator.  Symmetry is checked to 1e-12, positive
        definiteness via Cholesky.
    """

    def __init__(self, n, B="identity"):
        if n < 1:
            raise UromError(f"dimension must be positive, got {n}")
        self.n = int(n)
        if isinstance(B, str):
            if B != "identity":
                raise UromError(f"unknown B spec {B!r}")
            self.kind = "identity"
            self._diag = None
            self._dense = None
        else:
            B = np.asarray(B, dtype=float)
            if B.ndim == 1:
                if B.shape != (n,):
                    raise DimensionMismatchError("diagonal B has wrong length")
                if not np.all(B > 0):
                    raise UromError("diagonal B must be strictly positive")
                self.kind = "diag"
                self._diag = B.copy()
                self._dense = None
            elif B.ndim == 2:
                if B.shape != (n, n):
                    raise DimensionMismatchError("dense B has wrong shape")
                if np.max(np.abs(B - B.T)) > _SYM_TOL * max(1.0, np.max(np.abs(B))):
                    raise UromError("B must be symmetric")
                try:
                    np.linalg.cholesky(B)
                except np.linalg.LinAlgError:
                    raise UromError("B must be positive definite") from None
                self.kind = "dense"
                self._diag = None
                self._dense = 0.5 * (B + B.T)
            else:
                raise DimensionMismatchError("B must be 1-D or 2-D")
        self._factors = None  # (B^1/2, B^-1/2), built lazily

    @property
    def is_diagonal(self):
        return self.kind in ("identity", "diag")

    @property
    def diag(self):
        """Diagonal of B as a vector (valid for identity/diag kinds)."""
        if self.kind == "identity":
            return np.ones(self.n)
        if self.kind == "diag":
            return self._diag
        raise MetricCompatibilityError("B is dense, no diagonal representation")

    def B_dense(self):
        if self.kind == "identity":
            return np.eye(self.n)
        if self.kind == "diag":
            return np.diag(self._diag)
        return self._dense

    def Binv_dense(self):
        if self.kind == "identity":
            return np.eye(self.n)
        if self.kind == "diag":
            return np.diag(1.0 / self._diag)
        return np.linalg.inv(self._dense)

    def apply_B(self, x):
        if self.kind == "identity":
            return np.array(x, dtype=float, copy=True)
        if self.kind == "diag":
            return self._diag * x
        return self._dense @ x

    def apply_Binv(self, s):
        if self.kind == "identity":
            return np.array(s, dtype=float, copy=True)
        if self.kind == "diag":
            return s / self._diag
        return np.linalg.solve(self._dense, s)

    def norm(self, x):
        """Primal norm <Bx, x>^(1/2)."""
        x = np.asarray(x, dtype=float)
        return float(np.sqrt(max(0.0, float(np.dot(self.apply_B(x), x)))))

    def dual_norm(self, s):
        """Dual norm <s, B^-1 s>^(1/2)."""
        s = np.asarray(s, dtype=float)
        return float(np.sqrt(max(0.0, float(np.dot(s, self.apply_Binv(s))))))

    def factors(self):
        """(B^1/2, B^-1/2) as dense matrices, cached.

        Used for isometric reduction to the Euclidean case (operator norms,
        uniform ball sampling).
        """
        if self._factors is None:
            if self.kind == "identity":
                eye = np.eye(self.n)
                self._factors = (eye, eye)
            elif self.kind == "diag":
                r = np.sqrt(self._diag)
                self._factors = (np.diag(r), np.diag(1.0 / r))
            else:
                w, V = np.linalg.eigh(self._dense)
                r = np.sqrt(w)
                self._factors = ((V * r) @ V.T, (V / r) @ V.T)
        return self._factors

    def op_norm(self, J):
        """Induced operator norm of J : E -> E*, max_{||h||<=1} ||J h||_*."""
        _, S = self.factors()
        return float(np.linalg.norm(S @ J @ S, 2))

    def to_json(self):
        if self.kind == "identity":
            return {"n": self.n, "B": "identity"}
        if self.kind == "diag":
            return {"n": self.n, "B": {"diag": self._diag.tolist()}}
        return {"n": self.n, "B": {"dense": self._dense.tolist()}}

    @staticmethod
    def from_json(doc):
        B = doc["B"]
        if isinstance(B, dict):
            B = np.asarray(B.get("diag", B.get("dense")), dtype=float)
        return EuclideanSpace(int(doc["n"]), B)


def _identity_space(n):
    return EuclideanSpace(n)


class FeasibleSet:
    """Base class: closed convex Q with exact projection and LMO."""

    kind = None
    n = None
    bounded = False

    def _space(self, space):
        if space is None:
            return _identity_space(self.n)
        if space.n != self.n:
            raise DimensionMismatchError("set/space dimension mismatch")
        return space

    def project(self, y, space=None):
        raise NotImplementedError

    def lmo(self, s, space=None):
        raise NotImplementedError

    def contains(self, x, tol=TOL_PROJ, space=None):
        raise NotImplementedError

    def diameter(self, space=None):
        """Diameter of Q under the primal norm (None if unbounded and no bound given)."""
        raise NotImplementedError

    def sample(self, rng, size=1, space=None):
        """Deterministic-under-seed batch of points of Q, shape (size, n)."""
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError

    @staticmethod
    def from_json(doc):
        kind = doc.get("kind")
        cls = _SET_KINDS.get(kind)
        if cls is None:
            raise UromError(f"unknown feasible-set kind {kind!r}")
        return cls._from_json(doc)


class WholeSpace(FeasibleSet):
    """Q = R^n, optionally with a radius bound.

    The radius bound does not constrain iterates (projection is the
    identity); it only gives certificates a bounded search region: the LMO
    minimizes over the B-ball of that radius around the origin.
    """

    kind = "whole"

    def __init__(self, n, radius=None):
        self.n = int(n)
        if radius is not None and radius <= 0:
            raise UromError("radius bound must be positive")
        self.radius = None if radius is None else float(radius)

    def project(self, y, space=None):
        return _as_vec(y, self.n).copy()

    def lmo(self, s, space=None):
        if self.radius is None:
            raise UnboundedLMOError("unbounded LMO: whole-space set has no radius bound")
        space = self._space(space)
        s = _as_vec(s, self.n, "s")
        ns = space.dual_norm(s)
        if ns <= TOL_LMO:
            return np.zeros(self.n)
        return -(self.radius / ns) * space.apply_Binv(s)

    def contains(self, x, tol=TOL_PROJ, space=None):
        _as_vec(x, self.n)
        return True

    def diameter(self, space=None):
        return None if self.radius is None else 2.0 * self.radius

    def sample(self, rng, size=1, space=None):
        if self.radius is None:
            raise UnboundedLMOError("cannot sample the whole space without a radius bound")
        return Ball(np.zeros(self.n), self.radius).sample(rng, size, space)

    def to_json(self):
        return {"kind": "whole", "n": self.n, "radius": self.radius}

    @staticmethod
    def _from_json(doc):
        return WholeSpace(int(doc["n"]), doc.get("radius"))


class Box(FeasibleSet):
    """Axis-aligned box [lo, hi].  Projection needs a diagonal B."""

    kind = "box"
    bounded = True

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatchError("box bounds must be 1-D of equal length")
        if not np.all(lo <= hi):
            raise UromError("box requires lo <= hi")
        self.lo = lo
        self.hi = hi
        self.n = lo.size

    def _need_diag(self, space):
        if not space.is_diagonal:
            raise MetricCompatibilityError("box projection requires diagonal B")

    def project(self, y, space=None):
        space = self._space(space)
        self._need_diag(space)
        # Clamping is B-independent for diagonal B: the objective is separable.
        return np.clip(_as_vec(y, self.n), self.lo, self.hi)

    def lmo(self, s, space=None):
        s = _as_vec(s, self.n, "s")
        # s_i = 0 ties resolve to lo_i: the lexicographically smallest vertex.
        return np.where(s > 0, self.lo, np.where(s < 0, self.hi, self.lo))

    def contains(self, x, tol=TOL_PROJ, space=None):
        x = _as_vec(x, self.n)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def diameter(self, space=None):
        return self._space(space).norm(self.hi - self.lo)

    def sample(self, rng, size=1, space=None):
        return self.lo + rng.random((size, self.n)) * (self.hi - self.lo)

    def to_json(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @staticmethod
    def _from_json(doc):
        return Box(doc["lo"], doc["hi"])


class Ball(FeasibleSet):
    """B-norm ball {x : ||x - center|| <= radius}.  Works with any B."""

    kind = "ball"
    bounded = True

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        if self.center.ndim != 1:
            raise DimensionMismatchError("ball center must be 1-D")
        if radius <= 0:
            raise UromError("ball radius must be positive")
        self.radius = float(radius)
        self.n = self.center.size

    def project(self, y, space=None):
        space = self._space(space)
        d = _as_vec(y, self.n) - self.center
        nd = space.norm(d)
        if nd <= self.radius:
            return self.center + d
        return self.center + (self.radius / nd) * d

    def lmo(self, s, space=None):
        space = self._space(space)
        s = _as_vec(s, self.n, "s")
        ns = space.dual_norm(s)
        if ns <= TOL_LMO:
            return self.center.copy()
        return self.center - (self.radius / ns) * space.apply_Binv(s)

    def contains(self, x, tol=TOL_PROJ, space=None):
        space = self._space(space)
        return space.norm(_as_vec(x, self.n) - self.center) <= self.radius + tol

    def diameter(self, space=None):
        return 2.0 * self.radius

    def sample(self, rng, size=1, space=None):
        space = self._space(space)
        _, S = space.factors()
        g = rng.standard_normal((size, self.n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        u = rng.random(size) ** (1.0 / self.n)
        pts = (self.radius * u)[:, None] * g
        return self.center + pts @ S.T

    def to_json(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}

    @staticmethod
    def _from_json(doc):
        return Ball(doc["center"], doc["radius"])


def project_simplex_weighted(y, w):
    """Projection of y onto the standard simplex in the diag(w) metric.

    Minimizes sum_i w_i (x_i - y_i)^2 over {x >= 0, sum x = 1}.  The KKT
    system gives x_i = max(0, y_i - lam / w_i); lam is located by walking the
    sorted breakpoints lam_i = w_i y_i.  For w = 1 this is the classical
    sort-based Euclidean simplex projection.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n = y.size
    b = w * y
    order = np.argsort(-b, kind="stable")
    bs = b[order]
    cy = np.cumsum(y[order])
    ci = np.cumsum(1.0 / w[order])
    lam_cand = (cy - 1.0) / ci
    # active set of size k is valid when lam sits below the k-th breakpoint
    # and at/above the next one
    k = n
    for j in range(n):
        if lam_cand[j] < bs[j] and (j + 1 == n or lam_cand[j] >= bs[j + 1]):
            k = j + 1
            break
    lam = lam_cand[k - 1]
    return np.maximum(0.0, y - lam / w)


class Simplex(FeasibleSet):
    """Standard simplex {x >= 0, sum x = 1}.  Projection needs a diagonal B."""

    kind = "simplex"
    bounded = True

    def __init__(self, n):
        if n < 1:
            raise UromError("simplex dimension must be positive")
        self.n = int(n)

    def project(self, y, space=None):
        space = self._space(space)
        if not space.is_diagonal:
            raise MetricCompatibilityError("simplex projection requires diagonal B")
        return project_simplex_weighted(_as_vec(y, self.n), space.diag)

    def lmo(self, s, space=None):
        s = _as_vec(s, self.n, "s")
        m = s.min()
        # among tied minima the lexicographically smallest vertex is the one
        # whose leading zeros run longest, i.e. the largest index
        j = np.flatnonzero(s == m)[-1]
        out = np.zeros(self.n)
        out[j] = 1.0
        return out

    def contains(self, x, tol=TOL_PROJ, space=None):
        x = _as_vec(x, self.n)
        return bool(np.all(x >= -tol) and abs(float(x.sum()) - 1.0) <= tol * self.n)

    def diameter(self, space=None):
        space = self._space(space)
        if not space.is_diagonal:
            raise MetricCompatibilityError("simplex diameter needs diagonal B")
        d = space.diag
        if self.n == 1:
            return 0.0
        s = np.sort(d)[::-1]
        return float(np.sqrt(s[0] + s[1]))

    def sample(self, rng, size=1, space=None):
        return rng.dirichlet(np.ones(self.n), size=size)

    def to_json(self):
        return {"kind": "simplex", "n": self.n}

    @staticmethod
    def _from_json(doc):
        return Simplex(int(doc["n"]))


class ProductSet(FeasibleSet):
    """Finite product Q_1 x ... x Q_m with blockwise operations.

    The metric must not couple blocks; identity/diagonal B always qualifies
    and is the only case the block sets support anyway.
    """

    kind = "product"

    def __init__(self, parts):
        if not parts:
            raise UromError("product of zero sets")
        self.parts = list(parts)
        self.n = sum(p.n for p in parts)
        self.bounded = all(p.bounded for p in parts)
        self._starts = np.cumsum([0] + [p.n for p in parts])

    def _blocks(self, x):
        return [x[self._starts[i]:self._starts[i + 1]] for i in range(len(self.parts))]

    def _sub_space(self, space, i):
        if space is None or space.kind == "identity":
            return None
        if not space.is_diagonal:
            raise MetricCompatibilityError("product sets require identity/diagonal B")
        return EuclideanSpace(self.parts[i].n, space.diag[self._starts[i]:self._starts[i + 1]])

    def project(self, y, space=None):
        space = self._space(space)
        y = _as_vec(y, self.n)
        return np.concatenate(
            [p.project(blk, self._sub_space(space, i))
             for i, (p, blk) in enumerate(zip(self.parts, self._blocks(y)))]
        )

    def lmo(self, s, space=None):
        space = self._space(space)
        s = _as_vec(s, self.n, "s")
        return np.concatenate(
            [p.lmo(blk, self._sub_space(space, i))
             for i, (p, blk) in enumerate(zip(self.parts, self._blocks(s)))]
        )

    def contains(self, x, tol=TOL_PROJ, space=None):
        space = self._space(space)
        x = _as_vec(x, self.n)
        return all(
            p.contains(blk, tol, self._sub_space(space, i))
            for i, (p, blk) in enumerate(zip(self.parts, self._blocks(x)))
        )

    def diameter(self, space=None):
        space = self._space(space)
        ds = [p.diameter(self._sub_space(space, i)) for i, p in enumerate(self.parts)]
        if any(d is None for d in ds):
            return None
        return float(np.sqrt(sum(d * d for d in ds)))

    def sample(self, rng, size=1, space=None):
        space = self._space(space)
        return np.concatenate(
            [p.sample(rng, size, self._sub_space(space, i)) for i, p in enumerate(self.parts)],
            axis=1,
        )

    def to_json(self):
        return {"kind": "product", "parts": [p.to_json() for p in self.parts]}

    @staticmethod
    def _from_json(doc):
        return ProductSet([FeasibleSet.from_json(d) for d in doc["parts"]])


_SET_KINDS = {
    "whole": WholeSpace,
    "box": Box,
    "ball": Ball,
    "simplex": Simplex,
    "product": ProductSet,
}


class OperatorOracle:
    """Operator V : Q -> E* with derivatives up to max_order.

    Parameters
    ----------
    fn : callable x -> V(x)
    jvp : callable (x, h) -> DV(x)[h], optional
    jacobian : callable x -> dense DV(x), optional (assembled from jvp if absent)
    d2vp : callable (x, h1, h2) -> D2V(x)[h1, h2], required for max_order = 2
    max_order : 1 or 2, the highest derivative available
    monotone : declared monotonicity flag (trusted, checkable by sampling)
    meta : free-form dict (known solution, smoothness constants, closed forms)
    """

    def __init__(self, fn, jvp=None, jacobian=None, d2vp=None, max_order=1,
                 monotone=True, meta=None, name="operator", builtin=None):
        if max_order not in (1, 2):
            raise UromError("max_order must be 1 or 2")
        if max_order == 2 and d2vp is None:
            raise UromError("max_order=2 requires d2vp")
        self.fn = fn
        self._jvp = jvp
        self._jacobian = jacobian
        self._d2vp = d2vp
        self.max_order = max_order
        self.monotone = bool(monotone)
        self.meta = dict(meta or {})
        self.name = name
        self.builtin = builtin  # (registry name, params) when reconstructible

    def __call__(self, x):
        return np.asarray(self.fn(x), dtype=float)

    def jvp(self, x, h):
        if self._jvp is not None:
            return np.asarray(self._jvp(x, h), dtype=float)
        if self._jacobian is not None:
            return np.asarray(self._jacobian(x), dtype=float) @ h
        raise UromError(f"oracle {self.name!r} has no first derivative")

    def jacobian(self, x):
        if self._jacobian is not None:
            return np.asarray(self._jacobian(x), dtype=float)
        n = np.asarray(x).size
        J = np.empty((n, n))
        eye = np.eye(n)
        for i in range(n):
            J[:, i] = self.jvp(x, eye[i])
        return J

    def d2vp(self, x, h1, h2):
        if self._d2vp is None:
            raise UromError(f"oracle {self.name!r} has no second derivative")
        return np.asarray(self._d2vp(x, h1, h2), dtype=float)

    def d2v_dot(self, x, d):
        """Matrix of h -> D2V(x)[d, h]."""
        n = np.asarray(x).size
        M = np.empty((n, n))
        eye = np.eye(n)
        for i in range(n):
            M[:, i] = self.d2vp(x, d, eye[i])
        return M


def taylor_model(oracle, x, y, p):
    """Order-p Taylor model of V at x, evaluated at y.

    T(y) = V(x) + DV(x)[y-x] (+ 1/2 D2V(x)[y-x, y-x] for p = 2).
    """
    if p not in (1, 2):
        raise UromError("taylor order must be 1 or 2")
    if p > oracle.max_order:
        raise UromError(f"oracle supports order {oracle.max_order}, asked for {p}")
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    out = oracle(x) + oracle.jvp(x, d)
    if p == 2:
        out = out + 0.5 * oracle.d2vp(x, d, d)
    return out


def taylor_jacobian(oracle, x, y, p):
    """Jacobian of the order-p Taylor model at y: DV(x) (+ D2V(x)[y-x, .])."""
    J = oracle.jacobian(x)
    if p == 2:
        J = J + oracle.d2v_dot(x, np.asarray(y, dtype=float) - np.asarray(x, dtype=float))
    return J


class CompositeVI:
    """Problem container: find x* in Q with <V(x*), x - x*> >= 0 for all x in Q.

    The composite term is the indicator of Q, so the feasible set carries all
    of psi; the oracle carries V.
    """

    def __init__(self, space, feasible_set, oracle):
        if feasible_set.n != space.n:
            raise DimensionMismatchError("set dimension != space dimension")
        self.space = space
        self.set = feasible_set
        self.oracle = oracle
        # fail fast on incompatible metric/set pairs instead of mid-solve
        if feasible_set.kind in ("box", "simplex") and not space.is_diagonal:
            raise MetricCompatibilityError(f"{feasible_set.kind} set requires diagonal B")

    @property
    def n(self):
        return self.space.n

    def project(self, y):
        return self.set.project(y, self.space)

    def lmo(self, s):
        return self.set.lmo(s, self.space)

    def diameter(self):
        return self.set.diameter(self.space)

    def taylor(self, x, y, p):
        return taylor_model(self.oracle, x, y, p)

    def to_json(self):
        if self.oracle.builtin is None:
            raise UromError("oracle is not a registered builtin, cannot serialize")
        name, params = self.oracle.builtin
        return {
            "space": self.space.to_json(),
            "set": self.set.to_json(),
            "oracle": {"name": name, "params": params},
        }

    @staticmethod
    def from_json(doc):
        space = EuclideanSpace.from_json(doc["space"])
        fset = FeasibleSet.from_json(doc["set"])
        od = doc["oracle"]
        builder = ORACLE_BUILDERS.get(od["name"])
        if builder is None:
            raise UromError(f"unknown oracle builtin {od['name']!r}")
        oracle = builder(space=space, **od.get("params", {}))
        return CompositeVI(space, fset, oracle)

    def dump(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True)
            f.write("\n")

    @staticmethod
    def load(path):
        with open(path) as f:
            return CompositeVI.from_json(json.load(f))


# registry of reconstructible oracles; populated by urom.bench on import
ORACLE_BUILDERS = {}


def register_oracle(name, builder):
    ORACLE_BUILDERS[name] = builder
