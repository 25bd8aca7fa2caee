"""Volume file I/O: gzipped single-file NIfTI-1 and raw binary + JSON sidecar.

Labels travel as uint8, images as float32, both little-endian.  NIfTI data is
written in the format's native Fortran order with dim[0] = 3 and pixdim
carrying the isotropic voxel size; gzip members use a fixed mtime of 0 so a
rerun reproduces files byte for byte.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .octsim import IntensityVolume
from .raster import LabelVolume


class VolumeFormatError(ValueError):
    """Malformed, truncated, or unsupported volume file."""


HEADER_DTYPE = np.dtype([
    ("sizeof_hdr", "<i4"),
    ("data_type", "S10"),
    ("db_name", "S18"),
    ("extents", "<i4"),
    ("session_error", "<i2"),
    ("regular", "S1"),
    ("dim_info", "u1"),
    ("dim", "<i2", (8,)),
    ("intent_p1", "<f4"),
    ("intent_p2", "<f4"),
    ("intent_p3", "<f4"),
    ("intent_code", "<i2"),
    ("datatype", "<i2"),
    ("bitpix", "<i2"),
    ("slice_start", "<i2"),
    ("pixdim", "<f4", (8,)),
    ("vox_offset", "<f4"),
    ("scl_slope", "<f4"),
    ("scl_inter", "<f4"),
    ("slice_end", "<i2"),
    ("slice_code", "u1"),
    ("xyzt_units", "u1"),
    ("cal_max", "<f4"),
    ("cal_min", "<f4"),
    ("slice_duration", "<f4"),
    ("toffset", "<f4"),
    ("glmax", "<i4"),
    ("glmin", "<i4"),
    ("descrip", "S80"),
    ("aux_file", "S24"),
    ("qform_code", "<i2"),
    ("sform_code", "<i2"),
    ("quatern_b", "<f4"),
    ("quatern_c", "<f4"),
    ("quatern_d", "<f4"),
    ("qoffset_x", "<f4"),
    ("qoffset_y", "<f4"),
    ("qoffset_z", "<f4"),
    ("srow_x", "<f4", (4,)),
    ("srow_y", "<f4", (4,)),
    ("srow_z", "<f4", (4,)),
    ("intent_name", "S16"),
    ("magic", "S4"),
])
assert HEADER_DTYPE.itemsize == 348

_DT_UINT8 = 2
_DT_FLOAT32 = 16
_VOX_OFFSET = 352  # 348-byte header + 4-byte extension flag


def _nifti_bytes(data: np.ndarray, voxel_size: float) -> bytes:
    hdr = np.zeros((), dtype=HEADER_DTYPE)
    hdr["sizeof_hdr"] = 348
    hdr["regular"] = b"r"
    hdr["dim"] = [3, *data.shape, 1, 1, 1, 1]
    if data.dtype == np.uint8:
        hdr["datatype"], hdr["bitpix"] = _DT_UINT8, 8
    elif data.dtype == np.float32:
        hdr["datatype"], hdr["bitpix"] = _DT_FLOAT32, 32
    else:
        raise VolumeFormatError(f"unsupported dtype {data.dtype} (use uint8 or float32)")
    hdr["pixdim"] = [1.0, voxel_size, voxel_size, voxel_size, 0, 0, 0, 0]
    hdr["vox_offset"] = _VOX_OFFSET
    hdr["scl_slope"] = 1.0
    hdr["xyzt_units"] = 2  # millimetres
    hdr["descrip"] = b"vascsynth"
    hdr["magic"] = b"n+1"
    return hdr.tobytes() + b"\x00" * 4 + np.asfortranarray(data).tobytes(order="F")


def _parse_nifti(raw: bytes):
    if len(raw) < 352:
        raise VolumeFormatError("file too short for a NIfTI-1 header")
    hdr = np.frombuffer(raw[:348], dtype=HEADER_DTYPE)[0]
    if int(hdr["sizeof_hdr"]) != 348:
        raise VolumeFormatError("bad sizeof_hdr (not little-endian NIfTI-1?)")
    if hdr["magic"] not in (b"n+1", b"n+1\x00"):
        raise VolumeFormatError(f"unsupported magic {hdr['magic']!r}")
    if int(hdr["dim"][0]) != 3:
        raise VolumeFormatError(f"expected 3D volume, dim[0]={int(hdr['dim'][0])}")
    shape = tuple(int(v) for v in hdr["dim"][1:4])
    if any(s <= 0 for s in shape):
        raise VolumeFormatError(f"bad shape {shape}")
    datatype = int(hdr["datatype"])
    if datatype == _DT_UINT8:
        dtype = np.dtype("u1")
    elif datatype == _DT_FLOAT32:
        dtype = np.dtype("<f4")
    else:
        raise VolumeFormatError(f"unsupported datatype code {datatype}")
    slope, inter = float(hdr["scl_slope"]), float(hdr["scl_inter"])
    if slope not in (0.0, 1.0) or inter != 0.0:
        raise VolumeFormatError("scaled intensities are not supported")
    pix = hdr["pixdim"][1:4]
    if not np.allclose(pix, pix[0], atol=1e-6):
        raise VolumeFormatError(f"anisotropic voxels {tuple(pix)} are not supported")
    voxel_size = float(pix[0]) if pix[0] > 0 else 1.0

    offset = int(hdr["vox_offset"])
    nbytes = int(np.prod(shape)) * dtype.itemsize
    if len(raw) < offset + nbytes:
        raise VolumeFormatError("truncated NIfTI file (data shorter than header claims)")
    data = np.frombuffer(raw, dtype=dtype, count=int(np.prod(shape)), offset=offset)
    return data.reshape(shape, order="F").copy(), voxel_size


def _is_nifti_path(path: Path) -> bool:
    name = path.name
    return name.endswith(".nii") or name.endswith(".nii.gz")


def _wrap(data: np.ndarray, voxel_size: float):
    if data.dtype == np.uint8:
        uniq = np.unique(data)
        if not np.all(np.isin(uniq, (0, 1))):
            raise VolumeFormatError(f"uint8 label volume has non-binary values {uniq[:8]}")
        return LabelVolume(shape=data.shape, data=data, voxel_size=voxel_size)
    return IntensityVolume(shape=data.shape, data=data, voxel_size=voxel_size)


def write_volume(path, volume) -> Path:
    """Write a Label/IntensityVolume; format picked from the extension.

    ``.nii`` / ``.nii.gz`` write NIfTI-1; ``.raw`` writes C-order bytes plus
    a ``.json`` sidecar with shape, dtype, and voxel size.
    """
    path = Path(path)
    data = volume.data
    if data.dtype not in (np.dtype("u1"), np.dtype("<f4")):
        raise VolumeFormatError(f"unsupported dtype {data.dtype}")
    path.parent.mkdir(parents=True, exist_ok=True)
    if _is_nifti_path(path):
        payload = _nifti_bytes(data, volume.voxel_size)
        if path.name.endswith(".gz"):
            buf = io.BytesIO()
            # fixed mtime keeps reruns byte-identical
            with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0, compresslevel=1) as zf:
                zf.write(payload)
            path.write_bytes(buf.getvalue())
        else:
            path.write_bytes(payload)
        return path
    if path.suffix == ".raw":
        sidecar = {
            "schema_version": 1,
            "shape": list(data.shape),
            "dtype": "uint8" if data.dtype == np.uint8 else "float32",
            "voxel_size": float(volume.voxel_size),
            "order": "C",
            "byte_order": "little",
        }
        path.write_bytes(np.ascontiguousarray(data).tobytes(order="C"))
        path.with_suffix(".json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        return path
    raise VolumeFormatError(f"unknown volume extension on {path.name} "
                            "(use .nii, .nii.gz, or .raw)")


def read_volume(path):
    """Read a volume file back as LabelVolume (uint8) or IntensityVolume (float32)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if _is_nifti_path(path):
        raw = path.read_bytes()
        if raw[:2] == b"\x1f\x8b":
            try:
                raw = gzip.decompress(raw)
            except (OSError, EOFError) as e:
                raise VolumeFormatError(f"corrupt gzip stream in {path.name}") from e
        data, voxel_size = _parse_nifti(raw)
        return _wrap(data, voxel_size)
    if path.suffix == ".raw":
        sidecar_path = path.with_suffix(".json")
        if not sidecar_path.exists():
            raise VolumeFormatError(f"missing sidecar {sidecar_path.name}")
        meta = json.loads(sidecar_path.read_text())
        shape = tuple(int(s) for s in meta["shape"])
        dtype = {"uint8": np.dtype("u1"), "float32": np.dtype("<f4")}.get(meta["dtype"])
        if dtype is None:
            raise VolumeFormatError(f"unsupported sidecar dtype {meta['dtype']!r}")
        raw = path.read_bytes()
        nbytes = int(np.prod(shape)) * dtype.itemsize
        if len(raw) != nbytes:
            raise VolumeFormatError(
                f"{path.name} holds {len(raw)} bytes, sidecar implies {nbytes}")
        data = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
        return _wrap(data, float(meta.get("voxel_size", 1.0)))
    raise VolumeFormatError(f"unknown volume extension on {path.name}")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
