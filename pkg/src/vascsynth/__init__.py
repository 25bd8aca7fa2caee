"""vascsynth: synthetic vascular labels and domain-randomized sOCT-like volumes.

Spline-tree label synthesis, Gauss-Newton tube rasterization, randomized
OCT-style rendering, and the evaluation utilities (Dice/FPR/FNR, sine-window
patch stitching) for validating segmentation models trained on the output.
"""

__version__ = "0.1.0"

from .config import ConfigError, PipelineConfig, load_config, preset, save_config
from .metrics import (
    CoverageError,
    MetricsReport,
    PatchGrid,
    confusion,
    cut_patches,
    plan_grid,
    sine_window,
    stitch,
)
from .octsim import (
    ArtifactConfig,
    IntensityVolume,
    TextureConfig,
    apply_slab_bias,
    apply_speckle,
    assign_intensities,
    fuse,
    synth_label_map,
    synthesize_sample,
)
from .pipeline import (
    IntegrityError,
    RunManifest,
    generate_sample,
    iterate_pairs,
    open_dataset,
    run_generate,
    sample_rng,
    synthesize_from_label,
)
from .raster import R_MIN, LabelVolume, rasterize
from .splines import (
    Projection,
    Spline1,
    Spline3,
    build_spline1,
    build_spline3,
    evaluate,
    project,
    project_points,
)
from .trees import (
    Branch,
    Distribution,
    SynthesisConfig,
    VesselTree,
    jitter_control_points,
    sample_root_line,
    sample_tree,
)
from .volio import VolumeFormatError, read_volume, sha256_file, write_volume

__all__ = [
    "ArtifactConfig", "Branch", "ConfigError", "CoverageError", "Distribution",
    "IntegrityError", "IntensityVolume", "LabelVolume", "MetricsReport",
    "PatchGrid", "PipelineConfig", "Projection", "R_MIN", "RunManifest",
    "Spline1", "Spline3", "SynthesisConfig", "TextureConfig", "VesselTree",
    "VolumeFormatError", "apply_slab_bias", "apply_speckle",
    "assign_intensities", "build_spline1", "build_spline3", "confusion",
    "cut_patches", "evaluate", "fuse", "generate_sample", "iterate_pairs",
    "jitter_control_points", "load_config", "open_dataset", "plan_grid",
    "preset", "project", "project_points", "rasterize", "read_volume",
    "run_generate", "sample_rng", "sample_root_line", "sample_tree",
    "save_config", "sha256_file", "sine_window", "stitch", "synth_label_map",
    "synthesize_from_label", "synthesize_sample", "write_volume",
]
