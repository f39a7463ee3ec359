"""Minimal NIfTI-1 reader/writer plus a raw float32 sidecar format.

Reading supports single-file (``n+1``) and paired (``ni1``, ``.hdr``/``.img``)
headers, either byte order, gzip compression, and the scalar datatypes
uint8/int16/int32/float32/float64. Writing always produces a little-endian
float32 ``n+1`` file with ``vox_offset`` 352.
"""
from __future__ import annotations

import gzip
import json
import logging
import struct
from pathlib import Path

import numpy as np

from .errors import VolumeFormatError
from .volume import Volume

log = logging.getLogger(__name__)

HEADER_SIZE = 348
VOX_OFFSET = 352

DATATYPES = {
    2: np.dtype("u1"),
    4: np.dtype("i2"),
    8: np.dtype("i4"),
    16: np.dtype("f4"),
    64: np.dtype("f8"),
}


def _read_bytes(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise VolumeFormatError(f"{path}: corrupt gzip stream") from exc
    return raw


def _is_raw(path: Path) -> bool:
    return path.suffix == ".f32raw"


def _strip_nifti_suffix(path: Path) -> str:
    name = str(path)
    for ext in (".nii.gz", ".hdr.gz", ".nii", ".hdr"):
        if name.endswith(ext):
            return name[: -len(ext)]
    return name


def load_volume(path) -> Volume:
    path = Path(path)
    if _is_raw(path):
        return _load_raw(path)
    raw = _read_bytes(path)
    if len(raw) < HEADER_SIZE:
        raise VolumeFormatError(f"{path}: malformed header ({len(raw)} bytes)")

    if struct.unpack("<i", raw[:4])[0] == HEADER_SIZE:
        bo = "<"
    elif struct.unpack(">i", raw[:4])[0] == HEADER_SIZE:
        bo = ">"
    else:
        raise VolumeFormatError(f"{path}: malformed header (bad sizeof_hdr)")

    magic = raw[344:348].rstrip(b"\x00")
    if magic not in (b"n+1", b"ni1"):
        raise VolumeFormatError(f"{path}: malformed header (magic {magic!r})")

    dim = struct.unpack(bo + "8h", raw[40:56])
    datatype = struct.unpack(bo + "h", raw[70:72])[0]
    pixdim = struct.unpack(bo + "8f", raw[76:108])
    vox_offset = int(struct.unpack(bo + "f", raw[108:112])[0])
    slope, inter = struct.unpack(bo + "2f", raw[112:120])

    ndim = dim[0]
    if ndim not in (3, 4) or (ndim == 4 and dim[4] != 1):
        raise VolumeFormatError(f"{path}: unsupported dimensionality {dim[:ndim + 1]}")
    shape = tuple(int(n) for n in dim[1:4])
    if any(n < 1 for n in shape):
        raise VolumeFormatError(f"{path}: non-positive dims {shape}")
    if datatype not in DATATYPES:
        raise VolumeFormatError(f"{path}: unsupported datatype code {datatype}")
    dtype = DATATYPES[datatype].newbyteorder(bo)

    if magic == b"n+1":
        payload = raw[vox_offset:]
    else:
        base = _strip_nifti_suffix(path)
        for cand in (Path(base + ".img"), Path(base + ".img.gz")):
            if cand.exists():
                payload = _read_bytes(cand)[vox_offset:]
                break
        else:
            raise VolumeFormatError(f"{path}: paired .img file not found")

    nbytes = int(np.prod(shape)) * dtype.itemsize
    if len(payload) != nbytes:
        raise VolumeFormatError(
            f"{path}: header dims {shape} need {nbytes} bytes, payload has {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(shape, order="F").astype(np.float64)
    if slope != 0 and np.isfinite(slope):
        data = data * slope + (inter if np.isfinite(inter) else 0.0)
    bad = ~np.isfinite(data)
    if bad.any():
        log.warning("%s: %d non-finite voxels set to 0", path, int(bad.sum()))
        data = np.where(bad, 0.0, data)

    spacing = tuple(abs(float(p)) if p != 0 else 1.0 for p in pixdim[1:4])
    return Volume(data, spacing, source_dtype=DATATYPES[datatype].name)


def _header(dims, spacing) -> bytes:
    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    struct.pack_into("<8h", hdr, 40, 3, *dims, 1, 1, 1, 1)
    struct.pack_into("<2h", hdr, 70, 16, 32)
    struct.pack_into("<8f", hdr, 76, 1.0, *spacing, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<3f", hdr, 108, float(VOX_OFFSET), 1.0, 0.0)
    hdr[123] = 2  # xyzt_units: mm
    hdr[344:348] = b"n+1\x00"
    return bytes(hdr)


def encode_nifti(v: Volume) -> bytes:
    payload = np.asarray(v.data, dtype="<f4").tobytes(order="F")
    return _header(v.dims, v.spacing) + b"\x00" * (VOX_OFFSET - HEADER_SIZE) + payload


def save_volume(v: Volume, path) -> None:
    """Write ``v`` as float32; format chosen by extension (.nii, .nii.gz, .f32raw)."""
    path = Path(path)
    if _is_raw(path):
        _save_raw(v, path)
        return
    blob = encode_nifti(v)
    if path.name.endswith(".gz"):
        # mtime=0 keeps compressed output byte-reproducible
        blob = gzip.compress(blob, mtime=0)
    path.write_bytes(blob)


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def _save_raw(v: Volume, path: Path) -> None:
    path.write_bytes(np.asarray(v.data, dtype="<f4").tobytes(order="F"))
    meta = {"dims": list(v.dims), "spacing": list(v.spacing)}
    _sidecar(path).write_text(json.dumps(meta) + "\n")


def _load_raw(path: Path) -> Volume:
    try:
        meta = json.loads(_sidecar(path).read_text())
        dims = tuple(int(n) for n in meta["dims"])
        spacing = tuple(float(s) for s in meta["spacing"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise VolumeFormatError(f"{path}: missing or invalid sidecar") from exc
    if len(dims) != 3 or len(spacing) != 3:
        raise VolumeFormatError(f"{path}: sidecar needs 3 dims and 3 spacings")
    payload = path.read_bytes()
    if len(payload) != int(np.prod(dims)) * 4:
        raise VolumeFormatError(f"{path}: sidecar dims {dims} do not match payload size")
    data = np.frombuffer(payload, dtype="<f4").reshape(dims, order="F")
    return Volume(data, spacing, source_dtype="float32")
