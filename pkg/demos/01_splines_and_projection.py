"""Cubic splines and nearest-point projection, step by step.

Builds a tortuous 3D spline, projects a cloud of query points onto it, and
plots the curve with projection segments so you can see the Gauss-Newton
solver doing its job.  Figures land in demos/output/.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import vascsynth as vs

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# an S-shaped centerline through five control points
control = np.array([
    [0.0, 0.0, 0.0],
    [5.0, 8.0, 1.0],
    [10.0, 0.0, 2.0],
    [15.0, -8.0, 3.0],
    [20.0, 0.0, 4.0],
])
spline = vs.build_spline3(control)

# the curve interpolates its control points and is smooth in between
t = np.linspace(0.0, 1.0, 400)
curve = spline.evaluate(t)
print("endpoints:", spline.evaluate(0.0), spline.evaluate(1.0))

# project random queries onto the curve
rng = np.random.default_rng(7)
queries = rng.uniform([-2, -12, -1], [22, 12, 6], (40, 3))
projections = [vs.project(spline, q) for q in queries]
print(f"median iterations: {np.median([p.iterations for p in projections]):.0f}")
print(f"all converged: {all(p.converged for p in projections)}")

fig = plt.figure(figsize=(9, 7))
ax = fig.add_subplot(111, projection="3d")
ax.plot(*curve.T, lw=2, color="crimson", label="spline")
ax.scatter(*control.T, color="black", s=30, label="control points")
for q, p in zip(queries, projections):
    foot = spline.evaluate(p.t_star)
    ax.plot(*np.stack([q, foot]).T, color="steelblue", lw=0.7, alpha=0.7)
ax.scatter(*queries.T, s=8, color="steelblue", label="queries")
ax.legend()
ax.set_title("Gauss-Newton nearest-point projection")
fig.savefig(out_dir / "01_projection.png", dpi=130)
print(f"wrote {out_dir / '01_projection.png'}")
