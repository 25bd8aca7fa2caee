"""Independent reference implementations used as test oracles.

These deliberately avoid the library's solver paths: dense parameter sweeps
instead of Gauss-Newton, a dense linear solve of the natural-spline
conditions instead of the banded system, per-voxel tallies instead of
bincount.  Keep them simple; they define what "correct" means in the tests.
"""

from __future__ import annotations

import numpy as np


def natural_spline_dense(control_points: np.ndarray, t_eval: np.ndarray) -> np.ndarray:
    """Natural cubic interpolant via a dense solve of the defining conditions.

    Unknowns are the 4 global-monomial coefficients of each segment
    (a + b t + c t^2 + d t^3); rows impose interpolation, C1/C2 continuity at
    interior knots, and zero second derivative at both ends.
    """
    pts = np.asarray(control_points, dtype=np.float64)
    n = pts.shape[0]
    n_seg = n - 1
    knots = np.linspace(0.0, 1.0, n)

    def row(seg, t, order):
        r = np.zeros(4 * n_seg)
        if order == 0:
            r[4 * seg:4 * seg + 4] = [1.0, t, t**2, t**3]
        elif order == 1:
            r[4 * seg:4 * seg + 4] = [0.0, 1.0, 2 * t, 3 * t**2]
        else:
            r[4 * seg:4 * seg + 4] = [0.0, 0.0, 2.0, 6 * t]
        return r

    rows, rhs = [], []
    for s in range(n_seg):
        rows.append(row(s, knots[s], 0)); rhs.append(pts[s])
        rows.append(row(s, knots[s + 1], 0)); rhs.append(pts[s + 1])
    for s in range(n_seg - 1):
        t = knots[s + 1]
        rows.append(row(s, t, 1) - row(s + 1, t, 1)); rhs.append(np.zeros_like(pts[0]))
        rows.append(row(s, t, 2) - row(s + 1, t, 2)); rhs.append(np.zeros_like(pts[0]))
    rows.append(row(0, 0.0, 2)); rhs.append(np.zeros_like(pts[0]))
    rows.append(row(n_seg - 1, 1.0, 2)); rhs.append(np.zeros_like(pts[0]))

    coef = np.linalg.solve(np.array(rows), np.array(rhs))

    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=np.float64))
    t_cl = np.clip(t_eval, 0.0, 1.0)
    seg = np.minimum((t_cl * n_seg).astype(int), n_seg - 1)
    out = np.zeros(t_eval.shape + pts.shape[1:])
    for i, (s, t) in enumerate(zip(seg, t_cl)):
        c = coef[4 * s:4 * s + 4]
        out[i] = c[0] + c[1] * t + c[2] * t**2 + c[3] * t**3
    return out


def squared_distances(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    q2 = np.einsum("ij,ij->i", queries, queries)
    p2 = np.einsum("ij,ij->i", points, points)
    return np.maximum(q2[:, None] - 2.0 * (queries @ points.T) + p2[None, :], 0.0)


def dense_sweep_project(spline, query: np.ndarray, n: int = 100001,
                        refine_iters: int = 80, cache=None):
    """Near-exact nearest-point via dense sweep + golden-section refinement.

    Pass ``cache = (ts, spline.evaluate(ts))`` to amortize the sweep table
    over many queries against one spline.
    """
    if cache is None:
        ts = np.linspace(0.0, 1.0, n)
        pts = spline.evaluate(ts)
    else:
        ts, pts = cache
        n = len(ts)
    d2 = ((pts - np.asarray(query)) ** 2).sum(axis=1)
    k = int(np.argmin(d2))
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, n - 1)]

    gr = (np.sqrt(5.0) - 1.0) / 2.0
    def f(t):
        return float(((spline.evaluate(t) - query) ** 2).sum())
    a, b = lo, hi
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(refine_iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    t_best = (a + b) / 2.0
    return t_best, float(np.linalg.norm(spline.evaluate(t_best) - query))


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact distance from points p (n,3) to segment [a, b]."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(p - a, axis=1)
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * ab), axis=1)


def rasterize_brute_force(tree, shape, r_min: float = 0.875, n_sweep: int = 10000,
                          chunk: int = 512) -> np.ndarray:
    """Label by the true tube criterion: min_t (|p - s(t)| - r(t)) <= 0.

    Sweeps ``n_sweep`` uniformly spaced parameters per branch per candidate
    voxel.  Voxels provably farther from the whole curve than the largest
    radius are skipped (the sweep would leave them 0 anyway): the curve lies
    within max-arc-gap/2 of a coarse subsample of the sweep polyline.
    """
    shape = tuple(shape)
    out = np.zeros(shape, dtype=np.uint8)
    for branch in tree.branches:
        ts = np.linspace(0.0, 1.0, n_sweep)
        pts = branch.centerline.evaluate(ts)
        rad = np.maximum(branch.radius.evaluate(ts), r_min)
        r_max = float(rad.max())

        lo = np.maximum(np.ceil(pts.min(axis=0) - r_max - 1.0), 0).astype(int)
        hi = np.minimum(np.floor(pts.max(axis=0) + r_max + 1.0),
                        np.asarray(shape) - 1).astype(int)
        if np.any(hi < lo):
            continue
        axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        vox = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1).astype(np.float64)

        sub_step = max(n_sweep // 128, 1)
        sub = pts[::sub_step]
        chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        n_groups = len(sub) - 1
        group_arc = np.add.reduceat(chords, np.arange(0, n_groups * sub_step, sub_step))
        gap_half = 0.5 * float(group_arc.max()) * 1.05 + 1e-6
        d_sub = np.sqrt(squared_distances(vox, sub).min(axis=1))
        keep = d_sub - gap_half <= r_max + 1e-3
        vox = vox[keep]
        if len(vox) == 0:
            continue

        labeled = np.zeros(len(vox), dtype=bool)
        for s in range(0, n_sweep, chunk):
            todo = ~labeled
            if not todo.any():
                break
            d = np.sqrt(squared_distances(vox[todo], pts[s:s + chunk]))
            hit = (d - rad[None, s:s + chunk] <= 0.0).any(axis=1)
            idx = np.nonzero(todo)[0][hit]
            labeled[idx] = True
        flat = np.ravel_multi_index(tuple(vox[labeled].astype(int).T), shape)
        out.reshape(-1)[flat] = 1
    return out


def confusion_tally(pred: np.ndarray, truth: np.ndarray):
    """Straightforward boolean tallies: (tp, fp, fn, tn)."""
    p = np.asarray(pred).astype(bool)
    t = np.asarray(truth).astype(bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(np.count_nonzero(~p & ~t))
    return tp, fp, fn, tn
