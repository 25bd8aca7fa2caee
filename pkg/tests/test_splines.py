"""Spline construction, evaluation, and Gauss-Newton projection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vascsynth import build_spline1, build_spline3, evaluate, project, project_points

from reference import dense_sweep_project, natural_spline_dense


def random_spline(rng, n_points=5, scale=20.0):
    return build_spline3(rng.uniform(0.0, scale, (n_points, 3)))


class TestBuild:
    def test_straight_segment_midpoint(self):
        s = build_spline3([(0, 0, 0), (10, 0, 0)])
        assert np.allclose(s.evaluate(0.5), (5, 0, 0))

    def test_endpoint_interpolation_exact(self):
        s = build_spline3([(0, 0, 0), (1, 1, 0), (2, 0, 0)])
        assert np.array_equal(s.evaluate(0.0), [0, 0, 0])
        assert np.array_equal(s.evaluate(1.0), [2, 0, 0])

    def test_matches_dense_natural_spline_solve(self):
        pts = [(0, 0, 0), (1, 1, 0), (2, 0, 0)]
        s = build_spline3(pts)
        t = np.linspace(0, 1, 101)
        expected = natural_spline_dense(np.asarray(pts, float), t)
        assert np.max(np.abs(s.evaluate(t) - expected)) < 1e-9

    def test_matches_dense_solve_random(self):
        rng = np.random.default_rng(3)
        for n in (2, 3, 4, 7, 12):
            pts = rng.uniform(-5, 5, (n, 3))
            s = build_spline3(pts)
            t = rng.uniform(0, 1, 200)
            expected = natural_spline_dense(pts, t)
            assert np.max(np.abs(s.evaluate(t) - expected)) < 1e-9

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            build_spline3([(0, 0, 0)])
        with pytest.raises(ValueError):
            build_spline3([(0, 0, 0), (np.nan, 0, 0)])
        with pytest.raises(ValueError):
            build_spline1([1.0, -2.0, 1.0])
        with pytest.raises(ValueError):
            build_spline1([1.0])

    def test_c2_continuity_at_interior_knots(self):
        rng = np.random.default_rng(11)
        s = random_spline(rng, n_points=6)
        n_seg = s.n_segments
        eps = 1e-7
        for k in range(1, n_seg):
            t = k / n_seg
            left = (s.evaluate(t - eps) - 2 * s.evaluate(t) + s.evaluate(t + eps)) / eps**2
            # second derivative finite-difference stays bounded across the knot
            d_lo = s.derivative(t - eps)
            d_hi = s.derivative(t + eps)
            assert np.max(np.abs(d_hi - d_lo)) < 1e-4 * max(np.max(np.abs(left)), 1.0)


class TestEvaluate:
    def test_straight_quarter(self):
        s = build_spline3([(0, 0, 0), (10, 0, 0)])
        assert np.allclose(evaluate(s, 0.25), (2.5, 0, 0))

    def test_clamps_parameter(self):
        s = build_spline3([(0, 0, 0), (10, 0, 0)])
        assert np.array_equal(evaluate(s, -0.5), evaluate(s, 0.0))
        assert np.array_equal(evaluate(s, 1.5), evaluate(s, 1.0))

    def test_horner_oracle(self):
        rng = np.random.default_rng(5)
        s = random_spline(rng, n_points=7)
        ts = rng.uniform(0, 1, 1000)
        n_seg = s.n_segments
        got = s.evaluate(ts)
        for t, val in zip(ts, got):
            x = t * n_seg
            i = min(int(x), n_seg - 1)
            u = x - i
            for axis in range(3):
                ref = np.polyval(s.coefficients[i, ::-1, axis], u)
                assert abs(val[axis] - ref) < 1e-12

    def test_spline1_evaluation(self):
        r = build_spline1([2.0, 3.0, 2.5])
        assert r.evaluate(0.0) == 2.0
        assert r.evaluate(1.0) == 2.5
        mid = r.evaluate(np.array([0.5]))
        assert mid.shape == (1,)


class TestProject:
    def test_perpendicular_foot(self):
        s = build_spline3([(0, 0, 0), (10, 0, 0)])
        p = project(s, (5, 3, 0))
        assert abs(p.t_star - 0.5) < 1e-9
        assert abs(p.distance - 3.0) < 1e-12
        assert p.converged

    def test_clamped_endpoint(self):
        s = build_spline3([(0, 0, 0), (10, 0, 0)])
        p = project(s, (15, 0, 0))
        assert p.t_star == 1.0
        assert abs(p.distance - 5.0) < 1e-12

    def test_distance_consistent_with_evaluate(self):
        rng = np.random.default_rng(17)
        s = random_spline(rng)
        for q in rng.uniform(-5, 25, (20, 3)):
            p = project(s, q)
            d = np.linalg.norm(s.evaluate(p.t_star) - q)
            assert abs(p.distance - d) <= 1e-9 * max(d, 1.0)

    def test_s_shape_against_dense_sweep(self):
        # S-shaped spline, 100 random queries vs 1e5-sample sweep + refinement
        s = build_spline3([(0, 0, 0), (5, 8, 1), (10, 0, 2), (15, -8, 3), (20, 0, 4)])
        rng = np.random.default_rng(23)
        queries = rng.uniform(-2, 22, (100, 3))
        for q in queries:
            p = project(s, q)
            _, d_ref = dense_sweep_project(s, q)
            assert p.distance <= d_ref + 1e-4

    def test_translation_equivariance(self):
        rng = np.random.default_rng(29)
        s = random_spline(rng)
        offsets = rng.uniform(-100, 100, (5, 3))
        queries = rng.uniform(0, 20, (10, 3))
        for v in offsets:
            s_shift = build_spline3(s.control_points + v)
            for q in queries:
                a = project(s, q)
                b = project(s_shift, q + v)
                assert abs(a.t_star - b.t_star) < 1e-9
                assert abs(a.distance - b.distance) < 1e-7

    def test_monotone_multistart(self):
        rng = np.random.default_rng(31)
        s = build_spline3(rng.uniform(0, 30, (8, 3)))
        queries = rng.uniform(-5, 35, (50, 3))
        for q in queries:
            prev = np.inf
            for m in (1, 2, 4, 8, 16):
                d = project(s, q, multistart=m).distance
                assert d <= prev + 1e-12
                prev = d

    def test_degenerate_point_spline_flags_nonconverged(self):
        s = build_spline3([(3, 3, 3), (3, 3, 3)])
        p = project(s, (7, 3, 3))
        assert abs(p.distance - 4.0) < 1e-12
        assert not p.converged

    def test_multistart_validation(self):
        s = build_spline3([(0, 0, 0), (1, 0, 0)])
        with pytest.raises(ValueError):
            project(s, (0, 0, 0), multistart=0)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(37)
        s = random_spline(rng)
        qs = rng.uniform(-3, 23, (32, 3))
        t_b, d_b, conv_b, it_b = project_points(s, qs)
        for i, q in enumerate(qs):
            p = project(s, q)
            assert p.t_star == t_b[i]
            assert p.distance == d_b[i]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_projection_optimality_property(seed, vx, vy, vz):
    rng = np.random.default_rng(seed)
    s = build_spline3(rng.uniform(0, 15, (5, 3)))
    q = np.array([vx, vy, vz])
    p = project(s, q)
    ts = np.linspace(0, 1, 100000)
    dense = np.min(np.linalg.norm(s.evaluate(ts) - q, axis=1))
    assert p.distance <= dense + 1e-4
