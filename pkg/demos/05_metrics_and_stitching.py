"""Dice/FPR/FNR evaluation and sine-weighted sliding-window stitching.

Scores a corrupted copy of a label volume against the original, then cuts a
smooth volume into overlapping patches and stitches it back, which is how
full-volume predictions are assembled at inference time.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import vascsynth as vs

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# --- metrics -------------------------------------------------------------
cfg = vs.preset("simple")
tree = vs.sample_tree(cfg.synthesis, vs.sample_rng(13, 0))
truth = vs.rasterize(tree, (96, 96, 96))

rng = np.random.default_rng(1)
pred = truth.data.copy()
flips = rng.random(pred.shape) < 0.002      # salt-and-pepper corruption
pred[flips] = 1 - pred[flips]
report = vs.confusion(pred, truth.data)
print(report.to_table())

# --- stitching -----------------------------------------------------------
x, y, z = np.meshgrid(*[np.linspace(0, 1, 96)] * 3, indexing="ij")
smooth = (np.sin(6 * x) * np.cos(5 * y) + np.sin(4 * z) + 2) / 4
grid = vs.plan_grid(smooth.shape, (48, 48, 48), 0.5)
print(f"\ngrid: {len(grid.origins)} patches of {grid.patch_shape}, "
      f"stride {grid.stride}")
stitched = vs.stitch(vs.cut_patches(smooth, grid), grid, smooth.shape)
print(f"round-trip max error: {np.max(np.abs(stitched - smooth)):.2e}")

w = vs.sine_window((48, 48, 48))
fig, axes = plt.subplots(1, 3, figsize=(12, 4))
axes[0].plot(w[:, 24, 24]); axes[0].set_title("sine window profile")
axes[1].imshow(w[:, :, 24], cmap="magma"); axes[1].set_title("window mid-slice")
axes[2].imshow((stitched - smooth)[:, :, 48].T * 1e15, cmap="coolwarm")
axes[2].set_title("round-trip error x 1e15")
for ax in axes[1:]:
    ax.axis("off")
fig.tight_layout()
fig.savefig(out_dir / "05_window.png", dpi=130)
print(f"wrote {out_dir / '05_window.png'}")
