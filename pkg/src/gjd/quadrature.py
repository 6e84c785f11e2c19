"""Globally adaptive Gauss-Kronrod (7/15) quadrature with vector-valued integrands.

The integrand is called with a flat array of abscissae ``x`` of shape ``(n,)``
and must return an array of shape ``(n, ...)``. All panels of a refinement
round are evaluated in a single call, so integrands written with numpy
broadcasting stay fast.
"""

import numpy as np

from .errors import ConvergenceError

_XGK_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

XGK = np.concatenate([-_XGK_HALF[:-1], _XGK_HALF[::-1]])
WGK = np.concatenate([_WGK_HALF[:-1], _WGK_HALF[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes 1, 3, 5, 7 (counting from the edge).
WG = np.zeros(15)
WG[[1, 3, 5]] = _WG_HALF[:3]
WG[[13, 11, 9]] = _WG_HALF[:3]
WG[7] = _WG_HALF[3]

_EPS = np.finfo(float).eps


def _eval_panels(f, lo, hi):
    half = 0.5 * (hi - lo)
    center = 0.5 * (hi + lo)
    x = center[:, None] + half[:, None] * XGK[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float)
    fx = fx.reshape((lo.size, 15) + fx.shape[1:])
    extra = (None,) * (fx.ndim - 2)
    h = half[(slice(None),) + extra]
    wk = WGK[(None, slice(None)) + extra]
    wg = WG[(None, slice(None)) + extra]
    kron = np.sum(wk * fx, axis=1)
    gauss = np.sum(wg * fx, axis=1)
    mean = kron / 2.0
    resasc = h * np.sum(wk * np.abs(fx - mean[:, None]), axis=1)
    resabs = h * np.sum(wk * np.abs(fx), axis=1)
    val = h * kron
    err = np.abs(h * (kron - gauss))
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.maximum(err, 50 * _EPS * resabs)
    if not np.all(np.isfinite(val)):
        raise ConvergenceError("integrand returned non-finite values")
    return val, err


def integrate(f, a, b, *, abs_tol=1e-10, rel_tol=1e-10, points=None,
              max_panels=4000):
    """Integrate ``f`` over the finite interval ``[a, b]``.

    Returns ``(value, error)`` with the shape of one integrand sample. The
    optional ``points`` are interior breakpoints (peaks, kinks) used as the
    initial panel edges.
    """
    a, b = float(a), float(b)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integrate() needs finite limits; use integrate_to_inf")
    if a == b:
        probe = np.asarray(f(np.array([a])), dtype=float)
        zero = np.zeros(probe.shape[1:])
        return zero, zero.copy()
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = [a, b]
    if points is not None:
        edges += [float(p) for p in np.ravel(points) if a < p < b]
    edges = np.unique(edges)
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _eval_panels(f, lo, hi)

    while True:
        total = vals.sum(axis=0)
        err = errs.sum(axis=0)
        tol = np.maximum(abs_tol, rel_tol * np.abs(total))
        if np.all(err <= tol):
            return sign * total, err
        n = lo.size
        share = (errs / tol).reshape(n, -1).max(axis=1)
        splittable = (hi - lo) > 8 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        pick = (share > 1.0 / n) & splittable
        if not pick.any() or n + pick.sum() > max_panels:
            raise ConvergenceError(
                f"quadrature did not converge on [{a:g}, {b:g}] with {n} panels "
                f"(error bound {np.max(err):.3g})",
                estimate=sign * total, bound=err)
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nv, ne = _eval_panels(f, new_lo, new_hi)
        keep = ~pick
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])


def integrate_to_inf(f, a=0.0, *, scale=1.0, points=None, **kwargs):
    """Integrate ``f`` over ``[a, inf)`` via ``x = a + scale * t / (1 - t)``.

    ``scale`` should be the natural width of the integrand so that its bulk
    sits near ``t = 1/2``.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")

    def g(t):
        one_minus = 1.0 - t
        x = a + scale * t / one_minus
        jac = scale / one_minus ** 2
        fx = np.asarray(f(x), dtype=float)
        return fx * jac.reshape((-1,) + (1,) * (fx.ndim - 1))

    tpoints = None
    if points is not None:
        p = np.asarray(points, dtype=float)
        p = p[np.isfinite(p) & (p > a)]
        tpoints = (p - a) / (scale + p - a)
    return integrate(g, 0.0, 1.0, points=tpoints, **kwargs)
