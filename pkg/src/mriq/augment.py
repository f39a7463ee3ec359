"""Geometric and shape augmentations that leave quality targets untouched.

All resampling is trilinear with zero fill outside the volume.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage as ndi

from .errors import ParameterError
from .jsonfmt import quantize
from .volume import Volume

TRANSLATION_RANGE = (-10, 10)
ROTATION_RANGE = (-10.0, 10.0)
ELASTIC_SIGMA_RANGE = (20.0, 30.0)
ELASTIC_SCALE_RANGE = (200.0, 500.0)
DILATE_RANGE = (1, 5)
SKULL_THRESHOLD = 0.1  # fraction of the volume maximum

_BALL = ndi.generate_binary_structure(3, 1)


@dataclass
class ElasticSpec:
    sigma: float
    scale: float
    seed: int


@dataclass
class SkullStripSpec:
    threshold: float
    dilate_radius: int


@dataclass
class AugmentSpec:
    translation: Tuple[int, int, int] = (0, 0, 0)
    rotation: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    flip_axes: List[int] = field(default_factory=list)
    elastic: Optional[ElasticSpec] = None
    skull_strip: Optional[SkullStripSpec] = None

    def to_dict(self) -> dict:
        return {
            "translation": [int(t) for t in self.translation],
            "rotation": [float(r) for r in self.rotation],
            "flip_axes": [int(a) for a in self.flip_axes],
            "elastic": asdict(self.elastic) if self.elastic else None,
            "skull_strip": asdict(self.skull_strip) if self.skull_strip else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentSpec":
        return cls(
            translation=tuple(int(t) for t in d["translation"]),
            rotation=tuple(float(r) for r in d["rotation"]),
            flip_axes=[int(a) for a in d["flip_axes"]],
            elastic=ElasticSpec(**d["elastic"]) if d.get("elastic") else None,
            skull_strip=SkullStripSpec(**d["skull_strip"]) if d.get("skull_strip") else None,
        )

    @property
    def is_identity(self) -> bool:
        return (not any(self.translation) and not any(self.rotation) and not self.flip_axes
                and self.elastic is None and self.skull_strip is None)


def _bounded(out: np.ndarray, v: Volume) -> np.ndarray:
    # interpolation weights sum to 1 only up to rounding
    return np.clip(out, min(0.0, float(v.data.min())), max(0.0, float(v.data.max())))


def translate(v: Volume, offsets) -> Volume:
    """Integer voxel shift; exposed borders are zero."""
    offsets = [int(o) for o in offsets]
    out = np.zeros_like(v.data)
    src, dst = [], []
    for o, n in zip(offsets, v.dims):
        if abs(o) > n:
            raise ParameterError(f"offset {o} exceeds axis length {n}")
        src.append(slice(max(0, -o), n - max(0, o)))
        dst.append(slice(max(0, o), n - max(0, -o)))
    out[tuple(dst)] = v.data[tuple(src)]
    return v.with_data(out)


def rotation_matrix(angles_deg) -> np.ndarray:
    """Rotation about x, then y, then z (angles in degrees)."""
    ax, ay, az = np.deg2rad([float(a) for a in angles_deg])
    cx, sx = np.cos(ax), np.sin(ax)
    cy, sy = np.cos(ay), np.sin(ay)
    cz, sz = np.cos(az), np.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rz @ ry @ rx


def rotate(v: Volume, angles_deg) -> Volume:
    angles = [float(a) for a in angles_deg]
    for a in angles:
        if not ROTATION_RANGE[0] <= a <= ROTATION_RANGE[1]:
            raise ParameterError(f"rotation angle {a} outside {ROTATION_RANGE}")
    if not any(angles):
        return v.with_data(v.data)
    r = rotation_matrix(angles)
    c = (np.array(v.dims, dtype=np.float64) - 1.0) / 2.0
    # affine_transform maps output coords to input coords: inverse rotation
    inv = r.T
    out = ndi.affine_transform(v.data, inv, offset=c - inv @ c, order=1,
                               mode="grid-constant", cval=0.0)
    return v.with_data(_bounded(out, v))


def flip(v: Volume, axis: int) -> Volume:
    if axis not in (0, 1, 2):
        raise ParameterError(f"axis must be 0, 1 or 2, got {axis}")
    return v.with_data(np.flip(v.data, axis=axis))


def displacement_field(dims, sigma: float, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform [-1, 1] noise per component, Gaussian-smoothed (truncated at 4 sigma), scaled."""
    disp = rng.uniform(-1.0, 1.0, size=(3,) + tuple(dims))
    for k in range(3):
        disp[k] = ndi.gaussian_filter(disp[k], sigma, truncate=4.0)
    return disp * scale


def elastic_deform(v: Volume, sigma: float, scale: float, rng) -> Volume:
    if not ELASTIC_SIGMA_RANGE[0] <= sigma <= ELASTIC_SIGMA_RANGE[1]:
        raise ParameterError(f"elastic sigma {sigma} outside {ELASTIC_SIGMA_RANGE}")
    if scale != 0 and not ELASTIC_SCALE_RANGE[0] <= scale <= ELASTIC_SCALE_RANGE[1]:
        raise ParameterError(f"elastic scale {scale} outside {ELASTIC_SCALE_RANGE}")
    if scale == 0:
        return v.with_data(v.data)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(int(rng))
    disp = displacement_field(v.dims, sigma, scale, rng)
    grid = np.indices(v.dims, dtype=np.float64)
    out = ndi.map_coordinates(v.data, grid + disp, order=1, mode="grid-constant", cval=0.0)
    return v.with_data(_bounded(out, v))


def skull_strip_crop(v: Volume, threshold: float, dilate_radius: int) -> Volume:
    """Threshold, open, keep the largest 6-connected component, dilate, and mask.

    If nothing survives the opening the input is returned unchanged with a
    ``RuntimeWarning``.
    """
    if not 0 < threshold < 1:
        raise ParameterError(f"threshold {threshold} outside (0, 1)")
    if not DILATE_RANGE[0] <= dilate_radius <= DILATE_RANGE[1]:
        raise ParameterError(f"dilate radius {dilate_radius} outside {DILATE_RANGE}")
    mask = v.data > threshold
    if mask.all():
        return v.with_data(v.data)
    # border_value=1 so voxels at the volume edge are not eroded away
    mask = ndi.binary_erosion(mask, _BALL, border_value=1)
    mask = ndi.binary_dilation(mask, _BALL)
    labels, n = ndi.label(mask, _BALL)
    if n == 0:
        warnings.warn("skull strip: empty mask, volume returned unchanged", RuntimeWarning)
        return v.with_data(v.data)
    sizes = np.bincount(labels.ravel())[1:]
    mask = labels == (int(np.argmax(sizes)) + 1)
    mask = ndi.binary_dilation(mask, _BALL, iterations=int(dilate_radius))
    return v.with_data(np.where(mask, v.data, 0.0))


def apply_spec(v: Volume, spec: AugmentSpec) -> Volume:
    """Replay a spec in the fixed order strip -> elastic -> rotate -> translate -> flip."""
    if spec.skull_strip is not None:
        v = skull_strip_crop(v, spec.skull_strip.threshold, spec.skull_strip.dilate_radius)
    if spec.elastic is not None:
        v = elastic_deform(v, spec.elastic.sigma, spec.elastic.scale, spec.elastic.seed)
    if any(spec.rotation):
        v = rotate(v, spec.rotation)
    if any(spec.translation):
        v = translate(v, spec.translation)
    for axis in spec.flip_axes:
        v = flip(v, axis)
    return v


def sample_spec(v: Volume, rng: np.random.Generator) -> AugmentSpec:
    """Draw each augmentation independently with probability 1/2."""
    spec = AugmentSpec()
    if rng.random() < 0.5:
        peak = float(v.data.max())
        thr = quantize(SKULL_THRESHOLD * peak)
        if 0 < thr < 1:
            r = int(rng.integers(DILATE_RANGE[0], DILATE_RANGE[1] + 1))
            spec.skull_strip = SkullStripSpec(threshold=thr, dilate_radius=r)
    if rng.random() < 0.5:
        spec.elastic = ElasticSpec(
            sigma=quantize(rng.uniform(*ELASTIC_SIGMA_RANGE)),
            scale=quantize(rng.uniform(*ELASTIC_SCALE_RANGE)),
            seed=int(rng.integers(0, 2 ** 63)),
        )
    if rng.random() < 0.5:
        spec.rotation = tuple(quantize(a) for a in rng.uniform(*ROTATION_RANGE, size=3))
    if rng.random() < 0.5:
        lo, hi = TRANSLATION_RANGE
        spec.translation = tuple(int(t) for t in rng.integers(lo, hi + 1, size=3))
    spec.flip_axes = [ax for ax in range(3) if rng.random() < 0.5]
    return spec


def random_augment(v: Volume, rng) -> Tuple[Volume, AugmentSpec]:
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(int(rng))
    spec = sample_spec(v, rng)
    return apply_spec(v, spec), spec
