"""The six artifact simulators.

Each ``apply_*`` function returns the distorted volume together with a
:class:`DistortionRecord` holding the parameters and the analytic
ground-truth score. Distorted volumes are clipped to [0, 1].

Parameter ranges are stated for the 224^3 reference grid. On other grid sizes
the bias-field geometry and the ringing cutoff are rescaled proportionally,
while the score keeps its 224-based definition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple, Union

import numpy as np
from scipy import ndimage as ndi

from . import metrics
from .errors import ParameterError
from .jsonfmt import quantize
from .spectral import KSpace, fft3_centered, ifft3_centered, signed_frequencies
from .volume import Volume, resize

REFERENCE_DIM = 224

GAMMA_RANGE = (0.5, 2.0)
CENTER_RANGE = (1.0, 224.0)
CUTOFF_RANGE = (32, 224)
ALPHA_RANGE = (0.35, 1.0)
VARIANCE_RANGE = (1e-6, 1e-2)
SCALE_RANGE = (0.2, 2.0)
KERNEL_RANGE = (3, 11)
SIGMA_RANGE = (0.25, 5.0)


class DistortionKind(str, Enum):
    CONTRAST = "contrast"
    BIAS = "bias"
    RING = "ring"
    GHOST = "ghost"
    NOISE = "noise"
    BLUR = "blur"

    @property
    def index(self) -> int:
        return list(DistortionKind).index(self)


KINDS = tuple(DistortionKind)


@dataclass(frozen=True)
class DistortionRecord:
    kind: DistortionKind
    params: Dict[str, Any]
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "params": dict(self.params), "score": self.score}

    @classmethod
    def from_dict(cls, d: dict) -> "DistortionRecord":
        return cls(DistortionKind(d["kind"]), dict(d["params"]), float(d["score"]))


def _check_range(name: str, x: float, lo: float, hi: float):
    if not (lo <= x <= hi):
        raise ParameterError(f"{name}={x} outside [{lo}, {hi}]")


def _finish(data: np.ndarray, v: Volume) -> Volume:
    return Volume(np.clip(data, 0.0, 1.0), v.spacing)


def apply_contrast(v: Volume, gamma: float) -> Tuple[Volume, DistortionRecord]:
    _check_range("gamma", gamma, *GAMMA_RANGE)
    out = _finish(np.clip(v.data, 0.0, 1.0) ** gamma, v)
    score = metrics.contrast_sdr(v, out, gamma_hint=gamma)
    return out, DistortionRecord(DistortionKind.CONTRAST, {"gamma": float(gamma)}, score)


def bias_field(dims, center) -> np.ndarray:
    """Elliptic gradient field sum_k ((p_k - c_k) / 224)^2 on the 1..224 grid.

    For dims other than 224 the grid 1..n is stretched onto 1..224 so that the
    radii scale with the volume.
    """
    g = np.zeros(tuple(dims))
    for axis, (n, c) in enumerate(zip(dims, center)):
        p = np.arange(1, n + 1) * (REFERENCE_DIM / n)
        term = ((p - c) / REFERENCE_DIM) ** 2
        shape = [1, 1, 1]
        shape[axis] = n
        g = g + term.reshape(shape)
    return g


def apply_bias_field(v: Volume, center) -> Tuple[Volume, DistortionRecord]:
    center = tuple(float(c) for c in center)
    if len(center) != 3:
        raise ParameterError(f"center needs 3 coordinates, got {center}")
    for c in center:
        _check_range("center", c, *CENTER_RANGE)
    j = v.data * bias_field(v.dims, center)
    peak = j.max()
    # renormalising by the max is safe: CVR is invariant to positive scaling
    out = _finish(j / peak if peak > 0 else np.zeros_like(j), v)
    score = metrics.cvr(v, out)
    return out, DistortionRecord(DistortionKind.BIAS, {"center": list(center)}, score)


def _cube_mask(dims, side_fraction: float) -> np.ndarray:
    mask = np.ones(tuple(dims), dtype=bool)
    for axis, n in enumerate(dims):
        half = side_fraction * n / 2.0
        keep = np.abs(signed_frequencies(n)) <= half
        shape = [1, 1, 1]
        shape[axis] = n
        mask = mask & keep.reshape(shape)
    return mask


def apply_gibbs_ringing(v: Volume, f_c: int) -> Tuple[Volume, DistortionRecord]:
    """Zero k-space outside the centred cube of side ``f_c`` (per 224 voxels).

    Bins within ``f_c / 2`` of the centre are kept on every axis, which keeps
    the truncated spectrum Hermitian. One cutoff is shared by all axes.
    """
    if int(f_c) != f_c:
        raise ParameterError(f"f_c must be an integer, got {f_c}")
    f_c = int(f_c)
    _check_range("f_c", f_c, *CUTOFF_RANGE)
    k = fft3_centered(v)
    if f_c < REFERENCE_DIM:
        k = KSpace(k.data * _cube_mask(v.dims, f_c / REFERENCE_DIM), k.spacing)
    out = _finish(ifft3_centered(k).data, v)
    return out, DistortionRecord(DistortionKind.RING, {"f_c": f_c}, f_c / REFERENCE_DIM)


def apply_motion_ghosting(v: Volume, alpha: float, axis: int) -> Tuple[Volume, DistortionRecord]:
    """Scale every odd-frequency k-space plane perpendicular to ``axis`` by ``alpha``.

    For dims divisible by 4 these are exactly the odd-indexed planes of the
    centred spectrum. In image space the result is a non-negative blend of the
    volume and its half-FOV shifted copy, so clipping never bites and the
    magnitude ratio recovers ``alpha``.
    """
    _check_range("alpha", alpha, *ALPHA_RANGE)
    if axis not in (0, 1, 2):
        raise ParameterError(f"axis must be 0, 1 or 2, got {axis}")
    k = fft3_centered(v)
    n = v.dims[axis]
    weight = np.where(signed_frequencies(n) % 2 == 1, alpha, 1.0)
    shape = [1, 1, 1]
    shape[axis] = n
    k = KSpace(k.data * weight.reshape(shape), k.spacing)
    out = _finish(ifft3_centered(k).data, v)
    params = {"alpha": float(alpha), "axis": int(axis)}
    return out, DistortionRecord(DistortionKind.GHOST, params, float(alpha))


def apply_rician_noise(v: Volume, variance: float,
                       rng: Union[int, np.random.Generator]) -> Tuple[Volume, DistortionRecord]:
    """Magnitude of the image plus complex Gaussian noise of the given variance.

    ``variance == 0`` is accepted as the noiseless limit. Passing an integer
    seed records it, which makes the record replayable.
    """
    if variance != 0:
        _check_range("variance", variance, *VARIANCE_RANGE)
    params: Dict[str, Any] = {"variance": float(variance)}
    if not isinstance(rng, np.random.Generator):
        params["seed"] = int(rng)
        rng = np.random.default_rng(int(rng))
    sd = math.sqrt(variance)
    n1 = rng.normal(0.0, sd, size=v.dims)
    n2 = rng.normal(0.0, sd, size=v.dims)
    out = _finish(np.sqrt((v.data + n1) ** 2 + n2 ** 2), v)
    score = metrics.psnr_score(v, out)
    return out, DistortionRecord(DistortionKind.NOISE, params, score)


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    w = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    return w / w.sum()


def apply_blur(v: Volume, mode: str, scale: float = None, kernel: int = None,
               sigma: float = None) -> Tuple[Volume, DistortionRecord]:
    """Blur by down/up trilinear resampling (``resample``) or a separable Gaussian."""
    mode = str(mode).lower()
    if mode == "resample":
        if scale is None:
            raise ParameterError("resample blur needs a scale")
        _check_range("scale", scale, *SCALE_RANGE)
        small = [max(1, int(math.floor(n * scale + 0.5))) for n in v.dims]
        data = resize(resize(v.data, small), v.dims)
        params = {"mode": "resample", "scale": float(scale)}
    elif mode == "gaussian":
        if kernel is None or sigma is None:
            raise ParameterError("gaussian blur needs kernel and sigma")
        if int(kernel) != kernel or kernel % 2 == 0:
            raise ParameterError(f"kernel size must be an odd integer, got {kernel}")
        _check_range("kernel", kernel, *KERNEL_RANGE)
        _check_range("sigma", sigma, *SIGMA_RANGE)
        w = gaussian_kernel(int(kernel), sigma)
        data = v.data
        for ax in range(3):
            data = ndi.convolve1d(data, w, axis=ax, mode="constant", cval=0.0)
        params = {"mode": "gaussian", "kernel": int(kernel), "sigma": float(sigma)}
    else:
        raise ParameterError(f"unknown blur mode {mode!r}")
    out = _finish(data, v)
    score = metrics.hf_ratio(v, out) if v.data.any() else 1.0
    return out, DistortionRecord(DistortionKind.BLUR, params, score)


def apply(kind: DistortionKind, v: Volume, params: dict) -> Tuple[Volume, DistortionRecord]:
    """Dispatch on ``kind`` with a parameter dict as produced by :func:`sample_params`."""
    kind = DistortionKind(kind)
    if kind is DistortionKind.CONTRAST:
        return apply_contrast(v, params["gamma"])
    if kind is DistortionKind.BIAS:
        return apply_bias_field(v, params["center"])
    if kind is DistortionKind.RING:
        return apply_gibbs_ringing(v, params["f_c"])
    if kind is DistortionKind.GHOST:
        return apply_motion_ghosting(v, params["alpha"], params["axis"])
    if kind is DistortionKind.NOISE:
        return apply_rician_noise(v, params["variance"], params["seed"])
    return apply_blur(v, params["mode"], scale=params.get("scale"),
                      kernel=params.get("kernel"), sigma=params.get("sigma"))


def sample_params(kind: DistortionKind, rng: np.random.Generator) -> dict:
    """Draw parameters for ``kind``; floats sit on the 6-decimal manifest grid."""
    kind = DistortionKind(kind)
    if kind is DistortionKind.CONTRAST:
        return {"gamma": quantize(rng.uniform(*GAMMA_RANGE))}
    if kind is DistortionKind.BIAS:
        return {"center": [quantize(c) for c in rng.uniform(*CENTER_RANGE, size=3)]}
    if kind is DistortionKind.RING:
        return {"f_c": int(rng.integers(CUTOFF_RANGE[0], CUTOFF_RANGE[1] + 1))}
    if kind is DistortionKind.GHOST:
        return {"alpha": quantize(rng.uniform(*ALPHA_RANGE)), "axis": int(rng.integers(0, 3))}
    if kind is DistortionKind.NOISE:
        # log-uniform: linear sampling would put nearly all mass near 1e-2
        lo, hi = np.log10(VARIANCE_RANGE)
        variance = min(max(quantize(10.0 ** rng.uniform(lo, hi)), VARIANCE_RANGE[0]), VARIANCE_RANGE[1])
        return {"variance": variance, "seed": int(rng.integers(0, 2 ** 63))}
    if rng.integers(0, 2) == 0:
        return {"mode": "resample", "scale": quantize(rng.uniform(*SCALE_RANGE))}
    kernel = int(rng.choice(np.arange(KERNEL_RANGE[0], KERNEL_RANGE[1] + 1, 2)))
    return {"mode": "gaussian", "kernel": kernel, "sigma": quantize(rng.uniform(*SIGMA_RANGE))}
