"""Pure numpy implementation of the hot inner-solve kernel.

Semantics twin of the compiled extension ``urom._kernels._ext``.  The
compiled module is preferred at import when present; this module is the
fallback and the reference for cross-backend tests.
"""

import numpy as np

PROJ_WHOLE = 0
PROJ_BOX = 1
PROJ_BALL = 2
PROJ_SIMPLEX = 3


def _project(y, kind, lo, hi, center, radius, w, B):
    if kind == PROJ_WHOLE:
        return y
    if kind == PROJ_BOX:
        return np.clip(y, lo, hi)
    if kind == PROJ_BALL:
        d = y - center
        nd = np.sqrt(max(0.0, float(d @ (B @ d))))
        if nd <= radius:
            return y
        return center + (radius / nd) * d
    # simplex, diag(w) metric: breakpoint walk on lam with x = max(0, y - lam/w)
    b = w * y
    order = np.argsort(-b, kind="stable")
    bs = b[order]
    cy = np.cumsum(y[order])
    ci = np.cumsum(1.0 / w[order])
    lam_cand = (cy - 1.0) / ci
    n = y.size
    k = n
    for j in range(n):
        if lam_cand[j] < bs[j] and (j + 1 == n or lam_cand[j] >= bs[j + 1]):
            k = j + 1
            break
    return np.maximum(0.0, y - lam_cand[k - 1] / w)


def extragradient_affine(G, c, xc, B, Binv, proj_kind, lo, hi, center, radius, w,
                         y0, gamma, tol, max_iters):
    """Projected extragradient for the affine operator Phi(y) = c + G (y - xc).

    Steps run in the B-metric: y <- proj(y - gamma * Binv Phi(.)), projection
    exact for the supported set kinds.  Stops when the unit-step natural
    residual ||y - proj(y - Binv Phi(y))||_B drops to tol.

    Returns (y, residual, iterations, converged).
    """
    y = np.array(y0, dtype=float)
    best_y = y.copy()
    best_res = np.inf
    it = 0
    while True:
        F = Binv @ (c + G @ (y - xc))
        res_vec = y - _project(y - F, proj_kind, lo, hi, center, radius, w, B)
        res = np.sqrt(max(0.0, float(res_vec @ (B @ res_vec))))
        if res < best_res:
            best_res = res
            best_y = y.copy()
        if res <= tol:
            return y, res, it, True
        if it >= max_iters:
            return best_y, best_res, it, False
        h = _project(y - gamma * F, proj_kind, lo, hi, center, radius, w, B)
        Fh = Binv @ (c + G @ (h - xc))
        y = _project(y - gamma * Fh, proj_kind, lo, hi, center, radius, w, B)
        it += 1
