"""3D intensity volumes and the preprocessing steps applied before simulation.

Volumes are indexed ``data[x, y, z]`` in stored voxel order. No affine or
orientation handling is attempted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage as ndi

from .errors import ParameterError

Triple = Tuple[float, float, float]


@dataclass(frozen=True)
class Volume:
    data: np.ndarray
    spacing: Triple = (1.0, 1.0, 1.0)
    # dtype stored on disk; drives the integer branch of normalize_intensity
    source_dtype: str = "float64"

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("volume must have at least one voxel")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or any(not s > 0 for s in spacing):
            raise ValueError(f"spacing must be three positive reals, got {self.spacing}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(n) for n in self.data.shape)

    def with_data(self, data: np.ndarray) -> "Volume":
        """Same spacing, new float data."""
        return Volume(data, self.spacing)

    def __repr__(self):
        return f"Volume(dims={self.dims}, spacing={self.spacing}, source_dtype={self.source_dtype!r})"


@dataclass(frozen=True)
class VolumeStats:
    mean: float
    std: float


def stats(v: Volume) -> VolumeStats:
    """Population mean and standard deviation over all voxels."""
    return VolumeStats(float(np.mean(v.data)), float(np.std(v.data)))


def normalize_intensity(v: Volume) -> Volume:
    """Map intensities into [0, 1].

    Integer sources are divided by the maximum of their on-disk datatype;
    real sources are min-max rescaled. A constant real volume becomes zeros.
    """
    dt = np.dtype(v.source_dtype)
    if np.issubdtype(dt, np.integer):
        out = np.clip(v.data / float(np.iinfo(dt).max), 0.0, 1.0)
        return Volume(out, v.spacing)
    lo = float(v.data.min())
    hi = float(v.data.max())
    if hi <= lo:
        return Volume(np.zeros(v.dims), v.spacing)
    return Volume((v.data - lo) / (hi - lo), v.spacing)


def resize(data: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """Trilinear resize with voxel-centre alignment.

    Sample positions always fall inside the physical extent of the input, so
    the half-voxel border is handled by edge clamping.
    """
    shape = tuple(int(n) for n in shape)
    if any(n < 1 for n in shape):
        raise ParameterError(f"target shape must be positive, got {shape}")
    if shape == data.shape:
        return np.array(data, dtype=np.float64)
    ratio = np.array(data.shape, dtype=np.float64) / np.array(shape, dtype=np.float64)
    offset = 0.5 * ratio - 0.5
    return ndi.affine_transform(
        np.asarray(data, dtype=np.float64), np.diag(ratio), offset=offset,
        output_shape=shape, order=1, mode="nearest",
    )


def resample_isotropic(v: Volume, target_spacing: float = 1.0) -> Volume:
    if not target_spacing > 0:
        raise ParameterError(f"target spacing must be positive, got {target_spacing}")
    shape = [int(np.floor(n * s / target_spacing + 0.5)) for n, s in zip(v.dims, v.spacing)]
    if any(n < 1 for n in shape):
        raise ParameterError(f"resampling {v.dims} at {v.spacing} to {target_spacing} mm gives empty axis")
    return Volume(resize(v.data, shape), (target_spacing,) * 3)


def pad_center_crop(v: Volume, target: int = 224) -> Volume:
    """Zero-pad to at least ``target`` per axis, then crop the central ``target``^3 block.

    Odd padding surplus goes to the high-index side; odd crop surplus is
    removed from the high-index side as well.
    """
    if target < 1:
        raise ParameterError(f"target must be >= 1, got {target}")
    pads = []
    for n in v.dims:
        total = max(0, target - n)
        pads.append((total // 2, total - total // 2))
    data = np.pad(v.data, pads) if any(p != (0, 0) for p in pads) else v.data
    sl = tuple(slice((n - target) // 2, (n - target) // 2 + target) for n in data.shape)
    return Volume(data[sl], v.spacing)


def preprocess(v: Volume, size: int = 224, spacing: float = 1.0) -> Volume:
    """normalize -> isotropic resample -> pad/crop, the order used for all references."""
    return pad_center_crop(resample_isotropic(normalize_intensity(v), spacing), size)
