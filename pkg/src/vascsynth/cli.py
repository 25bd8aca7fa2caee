"""Command-line front end: generate, synthesize, evaluate, stitch, presets, render.

Exit codes are a stable contract: 0 success, 1 usage or configuration error,
2 data error (unreadable volumes, shape mismatches, coverage gaps).  The
``VASCSYNTH_OUT`` environment variable supplies a default output root when
``--out`` is omitted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESET_NAMES, ConfigError, load_config, preset, save_config
from .metrics import CoverageError, PatchGrid, confusion, stitch
from .octsim import IntensityVolume
from .pipeline import run_generate, synthesize_from_label
from .raster import LabelVolume
from .volio import VolumeFormatError, read_volume, write_volume

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

ENV_OUT = "VASCSYNTH_OUT"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_shape(text: str):
    parts = text.replace("x", ",").split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("shape must be three extents, e.g. 64,64,64")
    try:
        shape = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}")
    if any(s <= 0 for s in shape):
        raise argparse.ArgumentTypeError("extents must be positive")
    return shape


def _resolve_out(args, default_name: str) -> Path:
    if args.out is not None:
        return Path(args.out)
    root = os.environ.get(ENV_OUT)
    if root is None:
        raise ConfigError("no --out given and VASCSYNTH_OUT is not set")
    return Path(root) / default_name


def _load_pipeline_config(args):
    if args.config is not None:
        return load_config(args.config, args.set)
    return preset(args.preset or "complex", args.set)


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file (see README for the schema)")
    p.add_argument("--preset", choices=PRESET_NAMES,
                   help="shipped preset to use when no --config is given")
    p.add_argument("--set", action="append", metavar="PATH=VALUE",
                   help="override a config key by dotted path, e.g. "
                        "synthesis.n_trees.high=4 (repeatable)")


def _cmd_generate(args) -> int:
    cfg = _load_pipeline_config(args)
    out = _resolve_out(args, "dataset")
    seed = args.seed if args.seed is not None else cfg.synthesis.seed
    manifest = run_generate(cfg, args.n, out, seed, jobs=args.jobs,
                            fmt=args.format, shape=args.shape)
    print(f"wrote {manifest.n_samples} sample pair(s) and manifest to {out}")
    return EXIT_OK


def _cmd_synthesize(args) -> int:
    cfg = _load_pipeline_config(args)
    label = read_volume(args.label)
    if not isinstance(label, LabelVolume):
        raise VolumeFormatError(f"{args.label} is not a binary label volume")
    seed = args.seed if args.seed is not None else cfg.synthesis.seed
    image = synthesize_from_label(label, cfg, seed)
    out = _resolve_out(args, "image.nii.gz")
    write_volume(out, image)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    pred = read_volume(args.pred)
    truth = read_volume(args.truth)
    pred_data = pred.data
    if pred_data.dtype != np.uint8:
        pred_data = (pred_data >= args.threshold).astype(np.uint8)
    report = confusion(pred_data, truth.data)
    if args.report:
        report.save(args.report)
    print(report.to_table())
    return EXIT_OK


def _cmd_stitch(args) -> int:
    patch_dir = Path(args.patches)
    grid_path = patch_dir / "grid.json"
    if not grid_path.exists():
        raise VolumeFormatError(f"missing grid manifest {grid_path}")
    spec = json.loads(grid_path.read_text())
    grid = PatchGrid.from_dict(spec)
    out_shape = tuple(int(v) for v in spec["out_shape"])
    patches = []
    for entry in spec["patches"]:
        path = patch_dir / entry["file"]
        if not path.exists():
            raise VolumeFormatError(f"missing patch file {entry['file']}")
        patches.append((tuple(int(v) for v in entry["origin"]), read_volume(path).data))
    stitched = stitch(patches, grid, out_shape)
    out = _resolve_out(args, "stitched.nii.gz")
    write_volume(out, IntensityVolume(shape=out_shape, data=stitched.astype(np.float32)))
    print(f"wrote {out}")
    if args.label_out:
        mask = (stitched >= args.threshold).astype(np.uint8)
        write_volume(args.label_out, LabelVolume(shape=out_shape, data=mask))
        print(f"wrote {args.label_out}")
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.name is None:
        for name in PRESET_NAMES:
            print(name)
        return EXIT_OK
    cfg = preset(args.name)
    if args.out:
        save_config(cfg, args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_render(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    vol = read_volume(args.volume)
    overlay = read_volume(args.label).data if args.label else None
    data = vol.data
    mids = [s // 2 for s in data.shape]
    slicers = [
        (data[mids[0], :, :], None if overlay is None else overlay[mids[0], :, :]),
        (data[:, mids[1], :], None if overlay is None else overlay[:, mids[1], :]),
        (data[:, :, mids[2]], None if overlay is None else overlay[:, :, mids[2]]),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(12, 4.2))
    for ax, (sl, ov), axis_name in zip(axes, slicers, "xyz"):
        ax.imshow(sl.T, cmap="gray", origin="lower")
        if ov is not None:
            masked = np.ma.masked_where(ov.T == 0, ov.T)
            ax.imshow(masked, cmap="autumn", alpha=0.45, origin="lower")
        ax.set_title(f"mid-{axis_name} slice")
        ax.axis("off")
    fig.tight_layout()
    out = _resolve_out(args, "render.png")
    fig.savefig(out, dpi=130)
    plt.close(fig)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="vascsynth",
                     description="Synthetic vascular volumes for segmentation training")
    parser.add_argument("--version", action="version", version=f"vascsynth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate (image, label) pairs plus a manifest")
    _add_config_flags(p)
    p.add_argument("--n", type=int, default=1, help="number of sample pairs")
    p.add_argument("--out", help=f"output directory (default ${ENV_OUT}/dataset)")
    p.add_argument("--seed", type=int, help="run seed (default: config seed)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--shape", type=_parse_shape, help="override volume shape, e.g. 64,64,64")
    p.add_argument("--format", choices=("nii.gz", "nii", "raw"), default="nii.gz")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("synthesize", help="render an image for an existing label volume")
    _add_config_flags(p)
    p.add_argument("--label", required=True, help="input binary label volume")
    p.add_argument("--out", help="output image path")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("evaluate", help="Dice/FPR/FNR of a prediction against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", help="write a JSON metrics report here")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="binarization threshold for float predictions")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("stitch", help="sine-weighted stitch of a patch directory")
    p.add_argument("--patches", required=True,
                   help="directory holding grid.json and the patch volumes")
    p.add_argument("--out", help="output stitched volume")
    p.add_argument("--label-out", help="also write a thresholded binary volume")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=_cmd_stitch)

    p = sub.add_parser("presets", help="list shipped presets or dump one")
    p.add_argument("--name", choices=PRESET_NAMES)
    p.add_argument("--out", help="write the preset config to this file")
    p.set_defaults(func=_cmd_presets)

    p = sub.add_parser("render", help="orthogonal mid-slice PNG contact sheet")
    p.add_argument("--volume", required=True)
    p.add_argument("--label", help="optional label volume to overlay")
    p.add_argument("--out", help="output PNG path")
    p.set_defaults(func=_cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (VolumeFormatError, CoverageError, FileNotFoundError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
