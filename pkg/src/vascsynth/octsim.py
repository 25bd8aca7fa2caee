"""Domain-randomized sOCT-like intensity rendering of vessel label volumes.

The render chain: two independent random label maps give parenchyma and
vessel textures (one uniform [0,1] intensity per label), the two are fused by
voxel-wise multiplication inside the vessel mask (so vessels are always
darker than their surroundings), then slab-wise gain non-uniformity and
multiplicative speckle noise are applied and the result is min-max rescaled
to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .raster import LabelVolume
from .trees import Distribution


@dataclass
class IntensityVolume:
    """Scalar intensity grid matching a label volume's geometry."""

    shape: tuple
    data: np.ndarray = None  # float32
    voxel_size: float = 1.0

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        if len(self.shape) != 3 or any(s <= 0 for s in self.shape):
            raise ValueError(f"shape must be 3 positive ints, got {self.shape}")
        if self.data is None:
            self.data = np.zeros(self.shape, dtype=np.float32)
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.shape != self.shape:
            raise ValueError("data shape does not match declared shape")


@dataclass(frozen=True)
class TextureConfig:
    """Random label-map texture: label count and blob scale (low-res grid side)."""

    n_labels: Distribution
    smoothness: Distribution

    def to_dict(self) -> dict:
        return {"n_labels": self.n_labels.to_dict(), "smoothness": self.smoothness.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TextureConfig":
        return cls(
            n_labels=Distribution.from_dict(d["n_labels"]),
            smoothness=Distribution.from_dict(d["smoothness"]),
        )


@dataclass(frozen=True)
class ArtifactConfig:
    """Slab-wise gain non-uniformity and speckle noise parameters.

    Slabs of sampled thickness along ``slab_axis`` each get a sampled gain and
    a smooth quadratic depth profile dipping by ``slab_profile_dip`` toward
    the slab faces (absorption / depth-of-focus); the abrupt gain steps at
    slab boundaries stand in for stitching artifacts.  Speckle is mean-1
    gamma multiplicative noise with shape ``speckle_shape``, blended in with
    weight ``noise_blend``.
    """

    slab_thickness: Distribution
    slab_gain: Distribution
    slab_profile_dip: Distribution
    speckle_shape: Distribution
    noise_blend: Distribution
    slab_axis: int = 2

    def __post_init__(self):
        if self.slab_axis not in (0, 1, 2):
            raise ValueError("slab_axis must be 0, 1 or 2")
        if self.slab_gain.low <= 0:
            raise ValueError("slab gains must stay > 0")
        if self.speckle_shape.low <= 0:
            raise ValueError("speckle shape must stay > 0")

    def to_dict(self) -> dict:
        return {
            "slab_axis": self.slab_axis,
            "slab_thickness": self.slab_thickness.to_dict(),
            "slab_gain": self.slab_gain.to_dict(),
            "slab_profile_dip": self.slab_profile_dip.to_dict(),
            "speckle_shape": self.speckle_shape.to_dict(),
            "noise_blend": self.noise_blend.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArtifactConfig":
        return cls(
            slab_thickness=Distribution.from_dict(d["slab_thickness"]),
            slab_gain=Distribution.from_dict(d["slab_gain"]),
            slab_profile_dip=Distribution.from_dict(d["slab_profile_dip"]),
            speckle_shape=Distribution.from_dict(d["speckle_shape"]),
            noise_blend=Distribution.from_dict(d["noise_blend"]),
            slab_axis=int(d.get("slab_axis", 2)),
        )


@dataclass
class SampleStages:
    """Intermediates of one rendered sample, for inspection and invariants."""

    parenchyma: np.ndarray
    vessel_texture: np.ndarray
    fused: np.ndarray
    biased: np.ndarray
    image: np.ndarray


def _axis_weights(g: int, s: int) -> np.ndarray:
    """(s, g) linear interpolation weights from a g-point grid, corners aligned."""
    if g == 1:
        return np.ones((s, 1))
    x = np.linspace(0.0, g - 1.0, s)
    i0 = np.minimum(x.astype(np.int64), g - 2)
    frac = x - i0
    w = np.zeros((s, g))
    rows = np.arange(s)
    w[rows, i0] = 1.0 - frac
    w[rows, i0 + 1] = frac
    return w


def synth_label_map(shape, n_labels: int, smoothness: int, rng: np.random.Generator) -> np.ndarray:
    """Piecewise-smooth random partition of the grid into ``n_labels`` regions.

    Draws one low-resolution Gaussian noise grid per label (side length
    ``smoothness``), trilinearly upsamples each to ``shape`` and assigns every
    voxel the argmax label.
    """
    if n_labels < 1:
        raise ValueError("n_labels must be >= 1")
    shape = tuple(int(s) for s in shape)
    g = max(int(smoothness), 1)
    wx, wy, wz = (_axis_weights(g, s) for s in shape)

    best_val = np.full(shape, -np.inf)
    labels = np.zeros(shape, dtype=np.int32)
    for lab in range(n_labels):
        grid = rng.standard_normal((g, g, g))
        up = np.einsum("ia,abc->ibc", wx, grid)
        up = np.einsum("jb,ibc->ijc", wy, up)
        up = np.einsum("kc,ijc->ijk", wz, up)
        better = up > best_val
        best_val[better] = up[better]
        labels[better] = lab
    return labels


def assign_intensities(labels: np.ndarray, rng: np.random.Generator) -> IntensityVolume:
    """One uniform [0,1] intensity per label id, broadcast over the map."""
    labels = np.asarray(labels)
    n = int(labels.max()) + 1
    lut = rng.uniform(0.0, 1.0, n).astype(np.float32)
    return IntensityVolume(shape=labels.shape, data=lut[labels])


def fuse(parenchyma: IntensityVolume, vessel_texture: IntensityVolume,
         mask: LabelVolume) -> IntensityVolume:
    """Multiply vessel texture into the parenchyma inside the mask.

    Vessel texture values lie in [0, 1], so fused vessel voxels never exceed
    the surrounding parenchyma intensity (dark vessels).
    """
    if not (parenchyma.shape == vessel_texture.shape == mask.shape):
        raise ValueError("fuse: volume shapes differ")
    inside = mask.data > 0
    out = parenchyma.data.copy()
    out[inside] *= vessel_texture.data[inside]
    return IntensityVolume(shape=parenchyma.shape, data=out, voxel_size=parenchyma.voxel_size)


def slab_gain_field(length: int, slabs) -> np.ndarray:
    """Axial multiplicative profile from explicit (thickness, gain, dip) slabs.

    Within a slab of thickness T the gain is modulated by 1 - dip*(2u-1)^2
    with u = (d + 0.5) / T over slab depths d, peaking mid-slab.
    """
    field = np.empty(length, dtype=np.float64)
    pos = 0
    for thickness, gain, dip in slabs:
        t = min(int(thickness), length - pos)
        if t <= 0:
            break
        u = (np.arange(t) + 0.5) / t
        field[pos:pos + t] = gain * (1.0 - dip * (2.0 * u - 1.0) ** 2)
        pos += t
    if pos < length:
        raise ValueError("slabs do not cover the axis")
    return field


def sample_slabs(length: int, cfg: ArtifactConfig, rng: np.random.Generator):
    """Consecutive (thickness, gain, dip) draws covering an axis of ``length``."""
    slabs = []
    covered = 0
    while covered < length:
        t = max(int(cfg.slab_thickness.sample(rng)), 1)
        gain = float(cfg.slab_gain.sample(rng))
        dip = float(cfg.slab_profile_dip.sample(rng))
        slabs.append((min(t, length - covered), gain, dip))
        covered += t
    return slabs


def apply_slab_bias(vol: IntensityVolume, cfg: ArtifactConfig,
                    rng: np.random.Generator) -> IntensityVolume:
    """Multiply sampled slab-wise axial gains into the volume."""
    length = vol.shape[cfg.slab_axis]
    field = slab_gain_field(length, sample_slabs(length, cfg, rng))
    shape = [1, 1, 1]
    shape[cfg.slab_axis] = length
    data = (vol.data * field.astype(np.float32).reshape(shape)).astype(np.float32)
    return IntensityVolume(shape=vol.shape, data=data, voxel_size=vol.voxel_size)


def speckle_field(shape, speckle_shape: float, blend: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Mean-1 multiplicative noise: (1 - w) + w * Gamma(k, 1/k)."""
    if speckle_shape <= 0:
        raise ValueError("speckle_shape must be > 0")
    g = rng.gamma(speckle_shape, 1.0 / speckle_shape, size=tuple(shape))
    return (1.0 - blend) + blend * g


def rescale_unit(data: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; constant input maps to zeros."""
    lo = float(data.min())
    hi = float(data.max())
    if hi <= lo:
        return np.zeros_like(data, dtype=np.float32)
    return ((data - lo) / (hi - lo)).astype(np.float32)


def apply_speckle(vol: IntensityVolume, cfg: ArtifactConfig,
                  rng: np.random.Generator) -> IntensityVolume:
    """Multiply sampled speckle into the volume, then min-max rescale."""
    k = float(cfg.speckle_shape.sample(rng))
    w = float(cfg.noise_blend.sample(rng))
    field = speckle_field(vol.shape, k, w, rng)
    data = rescale_unit(vol.data.astype(np.float64) * field)
    return IntensityVolume(shape=vol.shape, data=data, voxel_size=vol.voxel_size)


def synthesize_sample(label: LabelVolume, texture_cfg: TextureConfig,
                      artifact_cfg: ArtifactConfig, rng: np.random.Generator,
                      return_stages: bool = False):
    """Render one (image, label) pair from a vessel label volume.

    Stage order is fixed: parenchyma texture, vessel texture, multiplicative
    fusion, slab bias, speckle + rescale.  The label volume is returned
    untouched.
    """
    shape = label.shape

    n_par = int(texture_cfg.n_labels.sample(rng))
    g_par = int(texture_cfg.smoothness.sample(rng))
    parenchyma = assign_intensities(synth_label_map(shape, n_par, g_par, rng), rng)

    n_ves = int(texture_cfg.n_labels.sample(rng))
    g_ves = int(texture_cfg.smoothness.sample(rng))
    vessel_tex = assign_intensities(synth_label_map(shape, n_ves, g_ves, rng), rng)

    fused = fuse(parenchyma, vessel_tex, label)
    biased = apply_slab_bias(fused, artifact_cfg, rng)
    image = apply_speckle(biased, artifact_cfg, rng)

    if return_stages:
        stages = SampleStages(
            parenchyma=parenchyma.data,
            vessel_texture=vessel_tex.data,
            fused=fused.data,
            biased=biased.data,
            image=image.data,
        )
        return image, label, stages
    return image, label
