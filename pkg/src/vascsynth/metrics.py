"""Segmentation evaluation and sine-weighted patch stitching.

``confusion`` gives exact voxel counts and the derived Dice / FPR / FNR.
``sine_window`` builds the separable sin^2 (Hann) patch weights used to blend
overlapping sliding-window predictions back into a full volume; with the
half-sample offset no weight is zero, so singly-covered border voxels stay
well defined, and at 50% overlap the shifted windows sum to a constant.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class CoverageError(ValueError):
    """A voxel of the output volume is covered by no patch."""


@dataclass(frozen=True)
class MetricsReport:
    """Voxel confusion counts and derived segmentation scores."""

    tp: int
    fp: int
    fn: int
    tn: int
    dice: float
    fpr: float
    fnr: float

    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "dice": self.dice, "fpr": self.fpr, "fnr": self.fnr,
        }

    def to_table(self) -> str:
        lines = [
            f"{'metric':<8}{'value':>14}",
            f"{'tp':<8}{self.tp:>14d}",
            f"{'fp':<8}{self.fp:>14d}",
            f"{'fn':<8}{self.fn:>14d}",
            f"{'tn':<8}{self.tn:>14d}",
            f"{'dice':<8}{self.dice:>14.6f}",
            f"{'fpr':<8}{self.fpr:>14.6f}",
            f"{'fnr':<8}{self.fnr:>14.6f}",
        ]
        return "\n".join(lines)

    def save(self, path) -> None:
        payload = {"schema_version": 1, "metrics": self.to_dict()}
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _as_binary(vol, name: str) -> np.ndarray:
    if isinstance(vol, np.ndarray):
        data = vol
    elif hasattr(vol, "data"):
        data = np.asarray(vol.data)
    else:
        data = np.asarray(vol)
    if data.dtype == bool:
        return data.astype(np.uint8)
    uniq = np.unique(data)
    if not np.all(np.isin(uniq, (0, 1))):
        raise ValueError(f"{name} volume is not binary (values {uniq[:8]}...)")
    return data.astype(np.uint8)


def confusion(pred, truth) -> MetricsReport:
    """Exact voxel confusion of two binary volumes.

    Dice is defined as 1.0 when both volumes are empty; FPR / FNR fall back
    to 0.0 when their denominators vanish.
    """
    p = _as_binary(pred, "pred")
    t = _as_binary(truth, "truth")
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    counts = np.bincount((2 * t + p).ravel(), minlength=4)
    tn, fp, fn, tp = (int(c) for c in counts)
    dice = 1.0 if (2 * tp + fp + fn) == 0 else 2.0 * tp / (2 * tp + fp + fn)
    fpr = 0.0 if (fp + tn) == 0 else fp / (fp + tn)
    fnr = 0.0 if (fn + tp) == 0 else fn / (fn + tp)
    return MetricsReport(tp=tp, fp=fp, fn=fn, tn=tn, dice=dice, fpr=fpr, fnr=fnr)


def sine_window(patch_shape) -> np.ndarray:
    """Separable sin^2 weights, w_i = sin^2(pi (i + 0.5) / N) per axis.

    Strictly positive everywhere and symmetric about the patch center; at
    stride N/2 the shifted windows form a partition of unity per axis.
    """
    patch_shape = tuple(int(s) for s in patch_shape)
    if any(s < 2 for s in patch_shape):
        raise ValueError(f"each patch extent must be >= 2, got {patch_shape}")
    axes = []
    for n in patch_shape:
        i = np.arange(n, dtype=np.float64)
        w = np.sin(np.pi * (i + 0.5) / n) ** 2
        w[(n + 1) // 2:] = w[:n // 2][::-1]  # mirror for bit-exact symmetry
        axes.append(w)
    wx, wy, wz = axes
    return wx[:, None, None] * wy[None, :, None] * wz[None, None, :]


@dataclass(frozen=True)
class PatchGrid:
    """Sliding-window layout: per-axis origins covering a target volume."""

    patch_shape: tuple
    stride: tuple
    origins: tuple  # of (ox, oy, oz)

    def __len__(self) -> int:
        return len(self.origins)

    def to_dict(self) -> dict:
        return {
            "patch_shape": list(self.patch_shape),
            "stride": list(self.stride),
            "origins": [list(o) for o in self.origins],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatchGrid":
        return cls(
            patch_shape=tuple(int(v) for v in d["patch_shape"]),
            stride=tuple(int(v) for v in d["stride"]),
            origins=tuple(tuple(int(v) for v in o) for o in d["origins"]),
        )


def _axis_origins(volume: int, patch: int, stride: int) -> list:
    last = volume - patch
    origins = []
    o = 0
    while True:
        origins.append(min(o, last))
        if o >= last:
            break
        o += stride
    return origins


def plan_grid(volume_shape, patch_shape, overlap: float) -> PatchGrid:
    """Origins at stride patch*(1 - overlap), final origin clamped to the boundary.

    Patches larger than the volume are clipped to it.  Every voxel ends up
    covered by at least one patch.
    """
    if not (0.0 <= overlap <= 0.9):
        raise ValueError(f"overlap must be in [0, 0.9], got {overlap}")
    volume_shape = tuple(int(s) for s in volume_shape)
    patch_shape = tuple(min(int(p), v) for p, v in zip(patch_shape, volume_shape))
    if any(p < 1 for p in patch_shape):
        raise ValueError("patch extents must be >= 1")
    stride = tuple(max(1, int(round(p * (1.0 - overlap)))) for p in patch_shape)
    per_axis = [_axis_origins(v, p, s)
                for v, p, s in zip(volume_shape, patch_shape, stride)]
    origins = tuple(itertools.product(*per_axis))
    return PatchGrid(patch_shape=patch_shape, stride=stride, origins=origins)


def cut_patches(volume: np.ndarray, grid: PatchGrid):
    """Extract (origin, patch-copy) pairs laid out by ``grid``."""
    px, py, pz = grid.patch_shape
    return [
        ((ox, oy, oz), np.array(volume[ox:ox + px, oy:oy + py, oz:oz + pz]))
        for ox, oy, oz in grid.origins
    ]


def stitch(patches, grid: PatchGrid, out_shape) -> np.ndarray:
    """Blend overlapping scalar patches into one volume.

    Every output voxel is the sine-window-weighted average of all patches
    covering it.  A voxel no patch covers raises ``CoverageError``.
    """
    out_shape = tuple(int(s) for s in out_shape)
    weight = sine_window(grid.patch_shape)
    num = np.zeros(out_shape, dtype=np.float64)
    den = np.zeros(out_shape, dtype=np.float64)
    px, py, pz = grid.patch_shape
    for origin, patch in patches:
        ox, oy, oz = (int(v) for v in origin)
        patch = np.asarray(patch, dtype=np.float64)
        if patch.shape != grid.patch_shape:
            raise ValueError(f"patch at {origin} has shape {patch.shape}, "
                             f"expected {grid.patch_shape}")
        if ox < 0 or oy < 0 or oz < 0 or ox + px > out_shape[0] \
                or oy + py > out_shape[1] or oz + pz > out_shape[2]:
            raise ValueError(f"patch at {origin} falls outside {out_shape}")
        num[ox:ox + px, oy:oy + py, oz:oz + pz] += weight * patch
        den[ox:ox + px, oy:oy + py, oz:oz + pz] += weight
    if np.any(den == 0.0):
        gap = np.argwhere(den == 0.0)[0]
        raise CoverageError(f"voxel {tuple(gap)} is covered by no patch")
    return num / den
