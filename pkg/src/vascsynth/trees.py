"""Randomized vascular forests: root lines, jittered splines, recursive branching.

A tree is grown from straight root segments whose control points are jittered
to set tortuosity, then children are spawned recursively at interior
attachment parameters, pointing into a cone around the parent tangent.  Radii
shrink across recursion levels by a sampled ratio and wiggle along each
branch by a sampled relative variation.

All randomness flows through one ``numpy.random.Generator`` in a fixed draw
order, so a (config, seed) pair pins the tree down exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .splines import Spline1, Spline3, build_spline1, build_spline3

# branching geometry (paper gives none): child direction in a cone around the
# parent tangent, child chord a fraction of the parent chord, attachment away
# from the parent endpoints
CONE_HALF_ANGLE_DEG = (15.0, 75.0)
CHILD_LENGTH_FRACTION = (0.3, 0.9)
ATTACH_T_RANGE = (0.1, 0.9)
ROOT_MIN_LENGTH_FRACTION = 0.25

_KINDS = ("uniform", "log-uniform", "integer-uniform")


@dataclass(frozen=True)
class Distribution:
    """Bounded sampling rule for one hyper-parameter: [low, high]."""

    kind: str
    low: float
    high: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not (np.isfinite(self.low) and np.isfinite(self.high)):
            raise ValueError("distribution bounds must be finite")
        if self.low > self.high:
            raise ValueError(f"low > high in {self}")
        if self.kind == "log-uniform" and self.low <= 0:
            raise ValueError("log-uniform requires low > 0")

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, size)
        if self.kind == "log-uniform":
            return np.exp(rng.uniform(np.log(self.low), np.log(self.high), size))
        # integer-uniform, inclusive bounds
        return rng.integers(int(self.low), int(self.high) + 1, size)

    def contains(self, other: "Distribution") -> bool:
        """True if ``other``'s interval lies inside this one."""
        return self.low <= other.low and other.high <= self.high

    def strictly_contains(self, other: "Distribution") -> bool:
        return self.low < other.low and other.high < self.high

    def to_dict(self) -> dict:
        return {"kind": self.kind, "low": self.low, "high": self.high}

    @classmethod
    def from_dict(cls, d: dict) -> "Distribution":
        try:
            return cls(kind=d["kind"], low=float(d["low"]), high=float(d["high"]))
        except KeyError as e:
            raise ValueError(f"distribution needs key {e.args[0]!r}: {d}") from e


_CONFIG_DISTRIBUTIONS = (
    "n_trees",
    "max_depth",
    "n_control_points",
    "jitter_magnitude",
    "root_radius",
    "radius_ratio",
    "radius_variation",
    "n_children",
)


@dataclass(frozen=True)
class SynthesisConfig:
    """Hyper-parameter distributions for one vessel-tree dataset.

    Lengths are in voxels.  ``n_control_points`` counts jittered interior
    control points per spline; together with ``jitter_magnitude`` it sets
    tortuosity.  ``radius_ratio`` multiplies the radius across recursion
    levels, ``radius_variation`` modulates it along a branch.
    """

    n_trees: Distribution
    max_depth: Distribution
    n_control_points: Distribution
    jitter_magnitude: Distribution
    root_radius: Distribution
    radius_ratio: Distribution
    radius_variation: Distribution
    n_children: Distribution
    volume_shape: tuple = (128, 128, 128)
    seed: int = 0

    def __post_init__(self):
        shape = tuple(int(s) for s in self.volume_shape)
        if len(shape) != 3 or any(s <= 0 for s in shape):
            raise ValueError(f"volume_shape must be 3 positive ints, got {self.volume_shape}")
        object.__setattr__(self, "volume_shape", shape)

    def to_dict(self) -> dict:
        d = {name: getattr(self, name).to_dict() for name in _CONFIG_DISTRIBUTIONS}
        d["volume_shape"] = list(self.volume_shape)
        d["seed"] = int(self.seed)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisConfig":
        kwargs = {}
        for name in _CONFIG_DISTRIBUTIONS:
            if name not in d:
                raise ValueError(f"synthesis config missing field {name!r}")
            kwargs[name] = Distribution.from_dict(d[name])
        return cls(
            volume_shape=tuple(d.get("volume_shape", (128, 128, 128))),
            seed=int(d.get("seed", 0)),
            **kwargs,
        )


@dataclass(frozen=True)
class Branch:
    """One vessel segment: centerline + radius profile at a recursion level."""

    centerline: Spline3
    radius: Spline1
    level: int
    parent: Optional[int] = None  # index into VesselTree.branches
    attach_t: float = 0.0
    chord_length: float = 0.0

    def to_dict(self) -> dict:
        return {
            "control_points": self.centerline.control_points.tolist(),
            "radius_values": self.radius.control_values.tolist(),
            "level": self.level,
            "parent": self.parent,
            "attach_t": self.attach_t,
        }


@dataclass
class VesselTree:
    """Forest of branches plus the config snapshot that produced it."""

    branches: list = field(default_factory=list)
    config_used: Optional[SynthesisConfig] = None

    def __len__(self) -> int:
        return len(self.branches)

    def to_dict(self) -> dict:
        return {
            "branches": [b.to_dict() for b in self.branches],
            "config": self.config_used.to_dict() if self.config_used else None,
        }

    def to_json(self) -> str:
        """Canonical serialization; equal trees give equal bytes."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def validate_forest(self) -> None:
        """Check parent indices form a forest (no cycles, parents precede children)."""
        for i, b in enumerate(self.branches):
            if b.parent is None:
                continue
            if not (0 <= b.parent < i):
                raise ValueError(f"branch {i} has invalid parent {b.parent}")
            if self.branches[b.parent].level + 1 != b.level:
                raise ValueError(f"branch {i} level does not follow its parent")


def sample_root_line(shape, rng: np.random.Generator):
    """Two endpoints inside the volume, at least 25% of the smallest extent apart."""
    shape = np.asarray(shape, dtype=np.float64)
    if np.any(shape <= 0):
        raise ValueError("extents must be positive")
    hi = shape - 1.0
    min_len = ROOT_MIN_LENGTH_FRACTION * float(shape.min())
    for _ in range(10000):
        p0 = rng.uniform(0.0, 1.0, 3) * hi
        p1 = rng.uniform(0.0, 1.0, 3) * hi
        if np.linalg.norm(p1 - p0) >= min_len:
            return p0, p1
    raise RuntimeError("could not sample a root line (degenerate extents?)")


def jitter_control_points(line, n: int, magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """Endpoints plus n interior points, each displaced by isotropic Gaussian noise.

    Interior points sit at fractions (k + 1) / (n + 1) along the segment before
    displacement; per-axis displacement std equals ``magnitude``.  Output keeps
    the along-line ordering, endpoints untouched.
    """
    p0, p1 = (np.asarray(p, dtype=np.float64) for p in line)
    if n < 0:
        raise ValueError("n must be >= 0")
    if magnitude < 0:
        raise ValueError("magnitude must be >= 0")
    if n == 0:
        return np.stack([p0, p1])
    fracs = np.arange(1, n + 1, dtype=np.float64) / (n + 1)
    interior = p0 + fracs[:, None] * (p1 - p0)
    interior = interior + rng.standard_normal((n, 3)) * magnitude
    return np.vstack([p0, interior, p1])


def _unit(v: np.ndarray):
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        return None
    return v / norm


def _cone_direction(axis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Unit vector at a sampled half-angle around ``axis``."""
    lo, hi = np.deg2rad(CONE_HALF_ANGLE_DEG)
    theta = rng.uniform(lo, hi)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    helper = np.zeros(3)
    helper[np.argmin(np.abs(axis))] = 1.0
    e1 = _unit(np.cross(axis, helper))
    e2 = np.cross(axis, e1)
    return np.cos(theta) * axis + np.sin(theta) * (np.cos(phi) * e1 + np.sin(phi) * e2)


def _build_branch(config, start, end, base_radius, level, parent, attach_t, rng):
    n_interior = int(config.n_control_points.sample(rng))
    magnitude = float(config.jitter_magnitude.sample(rng))
    points = jitter_control_points((start, end), n_interior, magnitude, rng)
    centerline = build_spline3(points)

    n_cv = points.shape[0]
    variation = config.radius_variation.sample(rng, size=n_cv)
    signs = np.where(rng.random(n_cv) < 0.5, -1.0, 1.0)
    values = np.maximum(base_radius * (1.0 + signs * variation), 1e-3)
    radius = build_spline1(values)

    chord = float(np.linalg.norm(np.asarray(end) - np.asarray(start)))
    return Branch(centerline, radius, level, parent, float(attach_t), chord)


def sample_tree(config: SynthesisConfig, rng: np.random.Generator) -> VesselTree:
    """Draw one randomized vascular forest under ``config``.

    Roots are straight lines with jittered control points; every branch at
    level < depth limit spawns a sampled number of children whose start lies
    on the parent centerline and whose radius is the parent radius at the
    attachment times a sampled ratio.
    """
    shape = np.asarray(config.volume_shape, dtype=np.float64)
    box_hi = shape - 1.0
    tree = VesselTree(branches=[], config_used=config)

    def grow(branch_idx: int, depth_limit: int):
        branch = tree.branches[branch_idx]
        if branch.level >= depth_limit:
            return
        n_kids = int(config.n_children.sample(rng))
        for _ in range(n_kids):
            at = rng.uniform(*ATTACH_T_RANGE)
            start = branch.centerline.evaluate(at)
            tangent = _unit(branch.centerline.derivative(at))
            if tangent is None:
                vec = rng.standard_normal(3)
                tangent = vec / np.linalg.norm(vec)
            direction = _cone_direction(tangent, rng)
            length = rng.uniform(*CHILD_LENGTH_FRACTION) * branch.chord_length
            end = np.clip(start + length * direction, 0.0, box_hi)
            base_r = max(float(branch.radius.evaluate(at)), 1e-3)
            base_r *= float(config.radius_ratio.sample(rng))
            child = _build_branch(
                config, start, end, base_r, branch.level + 1, branch_idx, at, rng
            )
            child_idx = len(tree.branches)
            tree.branches.append(child)
            grow(child_idx, depth_limit)

    n_trees = int(config.n_trees.sample(rng))
    for _ in range(n_trees):
        depth_limit = int(config.max_depth.sample(rng))
        p0, p1 = sample_root_line(config.volume_shape, rng)
        root_r = float(config.root_radius.sample(rng))
        root = _build_branch(config, p0, p1, root_r, 0, None, 0.0, rng)
        root_idx = len(tree.branches)
        tree.branches.append(root)
        grow(root_idx, depth_limit)

    return tree
