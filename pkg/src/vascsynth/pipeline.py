"""Batch dataset generation with manifest-tracked, seed-split reproducibility.

Every sample gets its own RNG stream derived from (run seed, sample index)
through ``numpy.random.SeedSequence`` spawn keys, so content never depends on
worker count or completion order.  The manifest records config, seed, and a
SHA-256 digest per emitted file; a rerun with the same inputs must reproduce
every digest.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig
from .octsim import IntensityVolume, synthesize_sample
from .raster import LabelVolume, rasterize
from .trees import VesselTree, sample_tree
from .volio import read_volume, sha256_file, write_volume

MANIFEST_NAME = "manifest.json"


class IntegrityError(ValueError):
    """Manifest digests do not match the files on disk."""


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-sample stream: split(seed, index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def generate_sample(cfg: PipelineConfig, seed: int, index: int, shape=None):
    """Deterministically synthesize one (image, label, tree) triple."""
    rng = sample_rng(seed, index)
    syn = cfg.synthesis
    if shape is not None and tuple(shape) != syn.volume_shape:
        syn = dataclasses.replace(syn, volume_shape=tuple(shape))
    tree = sample_tree(syn, rng)
    label = rasterize(tree, syn.volume_shape)
    image, label = synthesize_sample(label, cfg.texture, cfg.artifacts, rng)
    return image, label, tree


def synthesize_from_label(label: LabelVolume, cfg: PipelineConfig,
                          seed: int, index: int = 0) -> IntensityVolume:
    """Render an image for an existing label volume (same stream layout)."""
    rng = sample_rng(seed, index)
    image, _ = synthesize_sample(label, cfg.texture, cfg.artifacts, rng)
    return image


@dataclass
class RunManifest:
    """Record of one generation run: inputs, outputs, digests."""

    seed: int
    n_samples: int
    config: dict
    fmt: str = "nii.gz"
    tool: str = "vascsynth"
    version: str = __version__
    schema_version: int = 1
    samples: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "tool": self.tool,
            "version": self.version,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "format": self.fmt,
            "config": self.config,
            "samples": self.samples,
        }

    def save(self, out_dir) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, out_dir) -> "RunManifest":
        path = Path(out_dir) / MANIFEST_NAME
        d = json.loads(path.read_text())
        return cls(
            seed=d["seed"], n_samples=d["n_samples"], config=d["config"],
            fmt=d["format"], tool=d["tool"], version=d["version"],
            schema_version=d["schema_version"], samples=d["samples"],
        )

    def verify(self, out_dir) -> None:
        """Raise IntegrityError unless every listed file matches its digest."""
        out_dir = Path(out_dir)
        for entry in self.samples:
            for kind in ("image", "label"):
                path = out_dir / entry[kind]
                if not path.exists():
                    raise IntegrityError(f"missing file {entry[kind]}")
                digest = sha256_file(path)
                if digest != entry[f"{kind}_sha256"]:
                    raise IntegrityError(
                        f"digest mismatch for {entry[kind]}: "
                        f"manifest {entry[f'{kind}_sha256'][:12]}..., file {digest[:12]}...")


def _generate_one(args):
    cfg_dict, seed, index, out_dir, fmt, shape = args
    cfg = PipelineConfig.from_dict(cfg_dict)
    image, label, _ = generate_sample(cfg, seed, index, shape)
    image_name = f"image_{index:04d}.{fmt}"
    label_name = f"label_{index:04d}.{fmt}"
    out = Path(out_dir)
    write_volume(out / image_name, image)
    write_volume(out / label_name, label)
    return {
        "index": index,
        "image": image_name,
        "label": label_name,
        "image_sha256": sha256_file(out / image_name),
        "label_sha256": sha256_file(out / label_name),
    }


def run_generate(cfg: PipelineConfig, n_samples: int, out_dir, seed: int,
                 jobs: int = 1, fmt: str = "nii.gz", shape=None) -> RunManifest:
    """Write ``n_samples`` (image, label) pairs plus a manifest to ``out_dir``."""
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    if fmt not in ("nii.gz", "nii", "raw"):
        raise ValueError(f"unknown format {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cfg_dict = cfg.to_dict()
    tasks = [(cfg_dict, seed, i, str(out_dir), fmt, shape) for i in range(n_samples)]
    if jobs <= 1 or n_samples <= 1:
        entries = [_generate_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_generate_one, tasks))
    entries.sort(key=lambda e: e["index"])

    manifest_cfg = dict(cfg_dict)
    if shape is not None:
        manifest_cfg = json.loads(json.dumps(cfg_dict))
        manifest_cfg["synthesis"]["volume_shape"] = list(shape)
    manifest = RunManifest(seed=seed, n_samples=n_samples, config=manifest_cfg,
                           fmt=fmt, samples=entries)
    manifest.save(out_dir)
    return manifest


def open_dataset(out_dir, verify: bool = True) -> RunManifest:
    """Load a run manifest, verifying digests by default."""
    manifest = RunManifest.load(out_dir)
    if verify:
        manifest.verify(out_dir)
    return manifest


def iterate_pairs(out_dir, manifest: RunManifest = None):
    """Yield (image, label) volume pairs listed by a run manifest."""
    out_dir = Path(out_dir)
    manifest = manifest or RunManifest.load(out_dir)
    for entry in manifest.samples:
        yield read_volume(out_dir / entry["image"]), read_volume(out_dir / entry["label"])
