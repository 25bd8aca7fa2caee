"""Cubic spline kernel: interpolation, evaluation, and nearest-point projection.

Splines are natural cubic interpolants (zero second derivative at both ends)
over a uniform knot grid on the parameter interval [0, 1].  The projection of
a query point onto a 3D spline minimizes f(t) = |s(t) - q|^2 with a clamped,
multi-started Gauss-Newton iteration; it is the distance test every tube
rasterization voxel decision rests on.

All spline data is immutable after construction, so every function here is
safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

GN_TOL = 1e-6
GN_MAX_ITER = 50
DEFAULT_MULTISTART = 8

# coarse parameter grid used to pick Gauss-Newton seeds
_N_COARSE = 64


@dataclass(frozen=True)
class Spline3:
    """Interpolating cubic curve through 3D control points, t in [0, 1].

    ``coefficients[i]`` holds the cubic of segment i in the local variable
    u = t * (n - 1) - i, u in [0, 1]: value = c0 + c1*u + c2*u^2 + c3*u^3.
    """

    control_points: np.ndarray  # (n, 3)
    coefficients: np.ndarray    # (n - 1, 4, 3)

    @property
    def n_segments(self) -> int:
        return self.coefficients.shape[0]

    def evaluate(self, t):
        return _eval_segments(self.control_points, self.coefficients, t)

    def derivative(self, t):
        return _eval_segments_deriv(self.coefficients, t)


@dataclass(frozen=True)
class Spline1:
    """Interpolating cubic through scalar control values (vessel radii)."""

    control_values: np.ndarray  # (n,)
    coefficients: np.ndarray    # (n - 1, 4)

    def evaluate(self, t):
        cv = self.control_values[:, None]
        out = _eval_segments(cv, self.coefficients[:, :, None], t)
        return out[..., 0]


@dataclass(frozen=True)
class Projection:
    """Result of projecting one query point onto a Spline3."""

    t_star: float
    distance: float
    converged: bool
    iterations: int


def _natural_cubic_coefficients(values: np.ndarray) -> np.ndarray:
    """Per-segment cubic coefficients of the natural interpolating spline.

    ``values`` is (n, d) at uniform knots t_i = i / (n - 1).  Returns
    (n - 1, 4, d) in the normalized local variable u in [0, 1] per segment.
    Natural boundary: second derivative vanishes at both endpoints.
    """
    values = np.asarray(values, dtype=np.float64)
    n, d = values.shape
    if n == 2:
        coef = np.zeros((1, 4, d))
        coef[0, 0] = values[0]
        coef[0, 1] = values[1] - values[0]
        return coef

    # second derivatives m at interior knots: tridiagonal system
    # m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h^2, h = 1/(n-1)
    h = 1.0 / (n - 1)
    rhs = 6.0 * (values[:-2] - 2.0 * values[1:-1] + values[2:]) / h**2
    n_int = n - 2
    ab = np.zeros((3, n_int))
    ab[0, 1:] = 1.0
    ab[1, :] = 4.0
    ab[2, :-1] = 1.0
    m = np.zeros((n, d))
    m[1:-1] = solve_banded((1, 1), ab, rhs)

    # cubic in (t - t_i): y_i + b (t-t_i) + (m_i/2)(t-t_i)^2 + ((m_{i+1}-m_i)/6h)(t-t_i)^3
    # rescaled to u = (t - t_i)/h
    y0, y1 = values[:-1], values[1:]
    m0, m1 = m[:-1], m[1:]
    b = (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0
    coef = np.empty((n - 1, 4, d))
    coef[:, 0] = y0
    coef[:, 1] = b * h
    coef[:, 2] = m0 / 2.0 * h**2
    coef[:, 3] = (m1 - m0) / 6.0 * h**2
    return coef


def _segment_lookup(n_segments: int, t):
    t = np.clip(np.atleast_1d(np.asarray(t, dtype=np.float64)), 0.0, 1.0)
    x = t * n_segments
    idx = np.minimum(x.astype(np.int64), n_segments - 1)
    u = x - idx
    return t, idx, u


def _eval_segments(endpoints: np.ndarray, coef: np.ndarray, t):
    scalar = np.ndim(t) == 0
    t, idx, u = _segment_lookup(coef.shape[0], t)
    c = coef[idx]
    uu = u[..., None]
    out = ((c[..., 3, :] * uu + c[..., 2, :]) * uu + c[..., 1, :]) * uu + c[..., 0, :]
    # clamped parameters return the boundary control points bit-exactly
    out[t <= 0.0] = endpoints[0]
    out[t >= 1.0] = endpoints[-1]
    return out[0] if scalar else out


def _eval_segments_deriv(coef: np.ndarray, t):
    scalar = np.ndim(t) == 0
    _, idx, u = _segment_lookup(coef.shape[0], t)
    c = coef[idx]
    uu = u[..., None]
    out = (3.0 * c[..., 3, :] * uu + 2.0 * c[..., 2, :]) * uu + c[..., 1, :]
    out *= coef.shape[0]  # chain rule, du/dt = n_segments
    return out[0] if scalar else out


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def build_spline3(control_points) -> Spline3:
    """Natural cubic interpolating spline through ordered 3D control points."""
    pts = np.asarray(control_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"control points must be (n, 3), got {pts.shape}")
    if pts.shape[0] < 2:
        raise ValueError("a spline needs at least 2 control points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("control points must be finite")
    coef = _natural_cubic_coefficients(pts)
    return Spline3(_freeze(pts.copy()), _freeze(coef))


def build_spline1(control_values) -> Spline1:
    """Natural cubic through positive scalars (a radius profile)."""
    vals = np.asarray(control_values, dtype=np.float64)
    if vals.ndim != 1 or vals.shape[0] < 2:
        raise ValueError("radius spline needs a 1D list of >= 2 values")
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
        raise ValueError("radius control values must be finite and > 0")
    coef = _natural_cubic_coefficients(vals[:, None])[:, :, 0]
    return Spline1(_freeze(vals.copy()), _freeze(coef))


def evaluate(spline, t):
    """Value of a Spline3 (point) or Spline1 (scalar) at t, clamped to [0, 1]."""
    return spline.evaluate(t)


def coarse_squared_distances(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """(n_queries, n_points) squared distances via one BLAS product.

    Accurate to ~1e-10 relative, which is plenty for seed ranking and for
    conservative culling with explicit margins.
    """
    q2 = np.einsum("ij,ij->i", queries, queries)
    p2 = np.einsum("ij,ij->i", points, points)
    d2 = q2[:, None] - 2.0 * (queries @ points.T) + p2[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def project_points(
    spline: Spline3,
    queries: np.ndarray,
    multistart: int = DEFAULT_MULTISTART,
    chunk: int = 65536,
):
    """Project many query points onto a spline at once.

    Returns (t_star, distance, converged, iterations) arrays over queries.
    Each query runs Gauss-Newton from its ``multistart`` best coarse-sample
    seeds; the seed ranking comes from one fixed coarse grid, so a larger
    ``multistart`` only ever adds seeds (returned distances never increase).
    """
    if multistart < 1:
        raise ValueError("multistart must be >= 1")
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    m = min(multistart, _N_COARSE)
    t_coarse = np.linspace(0.0, 1.0, _N_COARSE)
    p_coarse = spline.evaluate(t_coarse)

    n = queries.shape[0]
    t_out = np.empty(n)
    d_out = np.empty(n)
    conv_out = np.empty(n, dtype=bool)
    iter_out = np.empty(n, dtype=np.int64)
    for lo in range(0, n, chunk):
        q = queries[lo:lo + chunk]
        d2 = coarse_squared_distances(q, p_coarse)
        seeds = np.argsort(d2, axis=1, kind="stable")[:, :m]
        t0 = t_coarse[seeds]
        t_star, dist, conv, iters = _gauss_newton(spline, q, t0)
        sl = slice(lo, lo + q.shape[0])
        t_out[sl], d_out[sl], conv_out[sl], iter_out[sl] = t_star, dist, conv, iters
    return t_out, d_out, conv_out, iter_out


def gauss_newton_seeds(spline: Spline3, queries: np.ndarray, t0: np.ndarray,
                       polish: bool = True):
    """Run the clamped Gauss-Newton refinement from explicit per-query seeds.

    ``t0`` is (n_queries, n_seeds); the returned distance never exceeds the
    distance at any seed (the best visited parameter is kept).  ``polish``
    trades a little extra work for a run-independent fixed-point t_star.
    """
    return _gauss_newton(spline, np.asarray(queries, dtype=np.float64), t0, polish)


def _value_and_deriv(spline: Spline3, t: np.ndarray):
    """Spline value and dt-derivative sharing one segment lookup."""
    coef = spline.coefficients
    n_seg = coef.shape[0]
    tc, idx, u = _segment_lookup(n_seg, t)
    c = coef[idx]
    uu = u[:, None]
    c1, c2, c3 = c[:, 1, :], c[:, 2, :], c[:, 3, :]
    val = ((c3 * uu + c2) * uu + c1) * uu + c[:, 0, :]
    val[tc <= 0.0] = spline.control_points[0]
    val[tc >= 1.0] = spline.control_points[-1]
    dval = ((3.0 * c3 * uu + 2.0 * c2) * uu + c1) * n_seg
    return val, dval


def _gauss_newton(spline: Spline3, q: np.ndarray, t0: np.ndarray,
                  polish: bool = True):
    """Clamped Gauss-Newton from seed matrix t0 (n_queries, n_seeds).

    Flattens (query, seed) pairs and retires each one as soon as its step
    drops below GN_TOL; the best parameter visited per pair is kept, and the
    per-query answer is the best seed's optimum.
    """
    n_q, m = t0.shape
    t_flat = t0.reshape(-1).copy()
    q_flat = np.repeat(q, m, axis=0)

    best_t = t_flat.copy()
    p0 = spline.evaluate(t_flat)
    r0 = p0 - q_flat
    best_d2 = np.einsum("ij,ij->i", r0, r0)
    conv_iter = np.full(t_flat.shape, GN_MAX_ITER + 1, dtype=np.int64)

    active = np.arange(t_flat.size)
    t_act = t_flat.copy()
    for it in range(1, GN_MAX_ITER + 1):
        val, dval = _value_and_deriv(spline, t_act)
        r = val - q_flat[active]
        d2 = np.einsum("ij,ij->i", r, r)
        better = d2 < best_d2[active]
        if better.any():
            sel = active[better]
            best_d2[sel] = d2[better]
            best_t[sel] = t_act[better]

        num = np.einsum("ij,ij->i", dval, r)
        den = np.einsum("ij,ij->i", dval, dval)
        degenerate = den < 1e-30
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(degenerate, 0.0, -num / np.where(degenerate, 1.0, den))
        t_new = np.clip(t_act + step, 0.0, 1.0)

        # the step direction is descent (-f'/(s'.s')), so halving a step that
        # overshot into a larger residual always recovers improvement
        for _ in range(12):
            rv = spline.evaluate(t_new) - q_flat[active]
            worse = np.einsum("ij,ij->i", rv, rv) > d2
            worse &= np.abs(t_new - t_act) > 1e-12
            worse &= ~degenerate
            if not worse.any():
                break
            t_new[worse] = t_act[worse] + 0.5 * (t_new[worse] - t_act[worse])

        if degenerate.any():
            # tangent vanished: bisection-style probe around the iterate
            delta = 0.5 ** min(it + 1, 40)
            di = np.nonzero(degenerate)[0]
            cand_up = np.clip(t_act[di] + delta, 0.0, 1.0)
            cand_dn = np.clip(t_act[di] - delta, 0.0, 1.0)
            qd = q_flat[active[di]]
            du = spline.evaluate(cand_up) - qd
            dn = spline.evaluate(cand_dn) - qd
            pick_up = np.einsum("ij,ij->i", du, du) <= np.einsum("ij,ij->i", dn, dn)
            t_new[di] = np.where(pick_up, cand_up, cand_dn)

        dt = np.abs(t_new - t_act)
        t_flat[active] = t_new
        done = (dt < GN_TOL) & ~degenerate
        if done.any():
            # record the final micro-step's distance before retiring the seed
            sel = active[done]
            pv = spline.evaluate(t_new[done])
            rv = pv - q_flat[sel]
            d2v = np.einsum("ij,ij->i", rv, rv)
            better = d2v < best_d2[sel]
            best_d2[sel[better]] = d2v[better]
            best_t[sel[better]] = t_new[done][better]
            conv_iter[sel] = it
            keep = ~done
            active = active[keep]
            t_act = t_new[keep]
            if active.size == 0:
                break
        else:
            t_act = t_new

    best_d2 = best_d2.reshape(n_q, m)
    best_t = best_t.reshape(n_q, m)
    conv_iter = conv_iter.reshape(n_q, m)
    win = np.argmin(best_d2, axis=1)
    rows = np.arange(n_q)
    t_star = best_t[rows, win]
    if polish:
        t_star = _polish(spline, q, t_star)
    dist = np.linalg.norm(spline.evaluate(t_star) - q, axis=1)
    iters = conv_iter[rows, win]
    converged = iters <= GN_MAX_ITER
    iters = np.minimum(iters, GN_MAX_ITER)
    return t_star, dist, converged, iters


def _polish(spline: Spline3, q: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Drive the winning parameters to their fixed point (|dt| < 1e-12).

    The 1e-6 stopping tolerance leaves t_star slightly run-dependent; a few
    extra damped steps pin it down so equal problems give equal answers to
    well below 1e-9.
    """
    t = t.copy()
    active = np.arange(t.size)
    for _ in range(10):
        val, dval = _value_and_deriv(spline, t[active])
        r = val - q[active]
        d2 = np.einsum("ij,ij->i", r, r)
        num = np.einsum("ij,ij->i", dval, r)
        den = np.einsum("ij,ij->i", dval, dval)
        ok = den > 1e-30
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(ok, -num / np.where(ok, den, 1.0), 0.0)
        t_new = np.clip(t[active] + step, 0.0, 1.0)
        for _ in range(8):
            rv = spline.evaluate(t_new) - q[active]
            worse = np.einsum("ij,ij->i", rv, rv) > d2
            if not worse.any():
                break
            t_new[worse] = t[active][worse] + 0.5 * (t_new[worse] - t[active][worse])
        moved = np.abs(t_new - t[active]) >= 1e-12
        t[active] = t_new
        active = active[moved]
        if active.size == 0:
            break
    return t


def project(spline: Spline3, query, multistart: int = DEFAULT_MULTISTART) -> Projection:
    """Nearest point on the spline to ``query``.

    Minimizes |s(t) - q| by Gauss-Newton from ``multistart`` coarse seeds;
    t is clamped to [0, 1] each step, so endpoints act as spherical caps.
    """
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (3,):
        raise ValueError("query must be a single 3D point")
    t, d, conv, iters = project_points(spline, q[None, :], multistart)
    return Projection(float(t[0]), float(d[0]), bool(conv[0]), int(iters[0]))
