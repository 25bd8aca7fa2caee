"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are fixed here, not calibrated elsewhere.
"""

import time

import numpy as np
import pytest

import vascsynth as vs
from vascsynth.cli import main
from vascsynth.trees import Distribution, SynthesisConfig

from reference import (
    confusion_tally,
    dense_sweep_project,
    rasterize_brute_force,
)


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def tree_config_48():
    return SynthesisConfig(
        n_trees=Distribution("integer-uniform", 1, 3),
        max_depth=Distribution("integer-uniform", 1, 2),
        n_control_points=Distribution("integer-uniform", 0, 5),
        jitter_magnitude=Distribution("uniform", 0.0, 4.0),
        root_radius=Distribution("log-uniform", 0.5, 4.0),
        radius_ratio=Distribution("uniform", 0.4, 1.0),
        radius_variation=Distribution("uniform", 0.0, 0.3),
        n_children=Distribution("integer-uniform", 0, 2),
        volume_shape=(48, 48, 48),
        seed=0,
    )


def test_rasterizer_oracle_equivalence():
    """>= 20 seeded trees in 48^3: agreement >= 99.9%, runtime < 60 s."""
    cfg = tree_config_48()
    n_trees = 20
    total_agree = total_vox = 0
    worst = 1.0
    impl_seconds = 0.0
    for seed in range(n_trees):
        tree = vs.sample_tree(cfg, vs.sample_rng(1234, seed))
        t0 = time.perf_counter()
        got = vs.rasterize(tree, (48, 48, 48)).data
        impl_seconds += time.perf_counter() - t0
        want = rasterize_brute_force(tree, (48, 48, 48))
        agree = int((got == want).sum())
        total_agree += agree
        total_vox += got.size
        worst = min(worst, agree / got.size)
    overall = total_agree / total_vox
    report(
        "rasterizer-oracle-equivalence",
        overall >= 0.999 and worst >= 0.999 and impl_seconds < 60.0,
        f"{n_trees} trees, agreement {overall * 100:.4f}% (worst {worst * 100:.4f}%), "
        f"rasterizer time {impl_seconds:.1f}s < 60s",
    )


def test_projection_optimality():
    """100 queries x 10 splines: distance <= oracle + 1e-4; median iters <= 10."""
    rng = np.random.default_rng(42)
    excess_max = -np.inf
    iters = []
    for _ in range(10):
        n_pts = int(rng.integers(4, 9))
        spline = vs.build_spline3(rng.uniform(0.0, 40.0, (n_pts, 3)))
        ts = np.linspace(0.0, 1.0, 100001)
        cache = (ts, spline.evaluate(ts))
        for q in rng.uniform(-10.0, 50.0, (100, 3)):
            p = vs.project(spline, q)
            _, d_ref = dense_sweep_project(spline, q, cache=cache)
            excess_max = max(excess_max, p.distance - d_ref)
            iters.append(p.iterations)
    med = float(np.median(iters))
    report(
        "projection-optimality",
        excess_max <= 1e-4 and med <= 10,
        f"1000 projections, worst excess {excess_max:.2e} <= 1e-4, "
        f"median iterations {med:.0f} <= 10",
    )


def test_dark_vessel_invariant():
    """100 seeded samples: every vessel voxel's fused intensity <= parenchyma."""
    cfg = vs.preset("complex")
    syn = tree_config_48()
    violations = 0
    vessel_voxels = 0
    for seed in range(100):
        rng = vs.sample_rng(777, seed)
        tree = vs.sample_tree(syn, rng)
        label = vs.rasterize(tree, (48, 48, 48))
        _, _, stages = vs.synthesize_sample(label, cfg.texture, cfg.artifacts,
                                            rng, return_stages=True)
        inside = label.data > 0
        vessel_voxels += int(inside.sum())
        violations += int((stages.fused[inside] > stages.parenchyma[inside]).sum())
    report(
        "dark-vessel-invariant",
        violations == 0 and vessel_voxels > 0,
        f"100 samples, {vessel_voxels} vessel voxels, {violations} violations",
    )


def test_stitch_round_trip():
    """160^3 smooth volume, 128^3 patches at 50% overlap: max error < 1e-10."""
    x, y, z = np.meshgrid(*[np.linspace(0.0, 1.0, 160)] * 3, indexing="ij")
    vol = (np.sin(6.0 * x) * np.cos(5.0 * y) + np.sin(4.0 * z) + 2.0) / 4.0
    grid = vs.plan_grid((160, 160, 160), (128, 128, 128), 0.5)
    out = vs.stitch(vs.cut_patches(vol, grid), grid, (160, 160, 160))
    err = float(np.max(np.abs(out - vol)))
    report(
        "stitch-round-trip",
        err < 1e-10,
        f"{len(grid.origins)} patches of {grid.patch_shape}, max error {err:.2e} < 1e-10",
    )


def test_metrics_exactness():
    """10 randomized 32^3 pairs: counts exact, derived ratios to 1e-12."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        pred = (rng.random((32, 32, 32)) < rng.uniform(0.05, 0.5)).astype(np.uint8)
        truth = (rng.random((32, 32, 32)) < rng.uniform(0.05, 0.5)).astype(np.uint8)
        rep = vs.confusion(pred, truth)
        tp, fp, fn, tn = confusion_tally(pred, truth)
        assert (rep.tp, rep.fp, rep.fn, rep.tn) == (tp, fp, fn, tn)
        assert rep.total() == 32 ** 3
        dice = 1.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
        fpr = 0.0 if fp + tn == 0 else fp / (fp + tn)
        fnr = 0.0 if fn + tp == 0 else fn / (fn + tp)
        worst = max(worst, abs(rep.dice - dice), abs(rep.fpr - fpr), abs(rep.fnr - fnr))
    report(
        "metrics-exactness",
        worst < 1e-12,
        f"10 pairs, counts exact, worst ratio deviation {worst:.2e} < 1e-12",
    )


def _generate_digests(out_dir, jobs):
    rc = main([
        "generate", "--preset", "complex", "--n", "4", "--seed", "31",
        "--jobs", str(jobs), "--shape", "32,32,32", "--out", str(out_dir),
        "--set", "synthesis.n_trees.high=3",
    ])
    assert rc == 0
    manifest = vs.RunManifest.load(out_dir)
    manifest.verify(out_dir)
    return [(s["image_sha256"], s["label_sha256"]) for s in manifest.samples]


def test_generation_determinism(tmp_path):
    """cmd_generate: byte-identical datasets across reruns and --jobs in {1, 8}."""
    d_run1 = _generate_digests(tmp_path / "run1", jobs=1)
    d_run2 = _generate_digests(tmp_path / "run2", jobs=1)
    d_jobs8 = _generate_digests(tmp_path / "jobs8", jobs=8)
    ok = d_run1 == d_run2 == d_jobs8
    report(
        "generation-determinism",
        ok,
        f"4 samples x 3 runs (rerun + jobs 1 vs 8), digests identical: {ok}",
    )


def test_preset_containment():
    """Every 'simple' hyper-parameter interval inside its 'complex' interval."""
    simple = vs.preset("simple").distributions()
    cx = vs.preset("complex").distributions()
    same_keys = set(simple) == set(cx)
    contained = [k for k in simple if same_keys and cx[k].contains(simple[k])]
    ok = same_keys and len(contained) == len(simple)
    report(
        "preset-containment",
        ok,
        f"{len(contained)}/{len(simple) if same_keys else '?'} intervals contained "
        f"(simple within complex)",
    )


@pytest.mark.slow
def test_throughput(tmp_path):
    """One 128^3 pair < 30 s; 100 pairs with --jobs 8 < 10 min."""
    cfg = vs.preset("complex")
    t0 = time.perf_counter()
    image, label, _ = vs.generate_sample(cfg, seed=5, index=0)
    single = time.perf_counter() - t0
    assert image.shape == label.shape == (128, 128, 128)

    t0 = time.perf_counter()
    manifest = vs.run_generate(cfg, 100, tmp_path / "batch", seed=6, jobs=8)
    batch = time.perf_counter() - t0
    ok = single < 30.0 and batch < 600.0 and manifest.n_samples == 100
    report(
        "throughput",
        ok,
        f"one 128^3 pair {single:.1f}s < 30s; 100 pairs (--jobs 8) {batch:.0f}s < 600s",
    )
