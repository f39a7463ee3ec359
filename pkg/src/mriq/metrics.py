"""Reference-based quality scores, baseline metrics, and the focal MSE loss.

Every score lies in [0, 1] with 1 meaning "no artifact of this kind".
Degenerate denominators (zero std or zero mean) yield 1.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage as ndi

from .errors import ShapeMismatchError
from .spectral import fft3_centered, high_freq_count
from .volume import Volume, stats

KIND_NAMES = ("contrast", "bias", "ring", "ghost", "noise", "blur")

# bins below this fraction of the reference peak are ignored by spectral ratios
GHOST_BIN_FRACTION = 1e-9
RING_BIN_FRACTION = 1e-6
HF_FRACTION = 1e-3


@dataclass(frozen=True)
class QualityVector:
    contrast: float = 1.0
    bias: float = 1.0
    ring: float = 1.0
    ghost: float = 1.0
    noise: float = 1.0
    blur: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            x = float(getattr(self, f.name))
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"{f.name} score {x} outside [0, 1]")
            object.__setattr__(self, f.name, x)

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    def as_dict(self) -> dict:
        return dict(zip(KIND_NAMES, astuple(self)))

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "QualityVector":
        values = [float(x) for x in values]
        if len(values) != 6:
            raise ValueError(f"expected 6 scores, got {len(values)}")
        return cls(*values)

    def replace(self, **kw) -> "QualityVector":
        d = self.as_dict()
        d.update(kw)
        return QualityVector(**d)


@dataclass(frozen=True)
class LossParams:
    alpha: float = 2.0
    gamma_exp: float = 1.0
    m: int = 6

    def __post_init__(self):
        if self.alpha < 0 or self.gamma_exp < 0 or self.m < 1:
            raise ValueError(f"invalid loss parameters {self}")


def _clip01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def _check_pair(ref: Volume, img: Volume):
    if ref.dims != img.dims:
        raise ShapeMismatchError(f"dimension mismatch: {ref.dims} vs {img.dims}")


def contrast_sdr(ref: Volume, img: Volume, gamma_hint: Optional[float] = None) -> float:
    """Standard deviation ratio, oriented so that the result is at most 1."""
    _check_pair(ref, img)
    s_ref = stats(ref).std
    s_img = stats(img).std
    if s_ref == 0:
        return 1.0
    ratio = s_img / s_ref
    invert = gamma_hint > 1 if gamma_hint is not None else ratio > 1
    if invert:
        ratio = s_ref / s_img if s_img > 0 else 1.0
    return _clip01(ratio)


def cvr(ref: Volume, img: Volume) -> float:
    """Coefficient-of-variation ratio (sigma_ref * mu_img) / (sigma_img * mu_ref)."""
    _check_pair(ref, img)
    a, b = stats(ref), stats(img)
    if b.std == 0 or a.mean == 0:
        return 1.0
    return _clip01((a.std * b.mean) / (b.std * a.mean))


def mse(ref: Volume, img: Volume) -> float:
    _check_pair(ref, img)
    return float(np.mean((ref.data - img.data) ** 2))


def psnr_from_mse(m: float) -> float:
    return math.inf if m == 0 else 10.0 * math.log10(1.0 / m)


def psnr_score_from_mse(m: float) -> float:
    return _clip01(psnr_from_mse(m) / 100.0)


def psnr(ref: Volume, img: Volume) -> float:
    """PSNR in dB for unit-range data; ``inf`` for identical inputs."""
    return psnr_from_mse(mse(ref, img))


def psnr_score(ref: Volume, img: Volume) -> float:
    return psnr_score_from_mse(mse(ref, img))


def hf_ratio(ref: Volume, img: Volume) -> float:
    _check_pair(ref, img)
    n_ref = high_freq_count(fft3_centered(ref), HF_FRACTION)
    if n_ref == 0:
        raise ValueError("reference volume is all zeros")
    n_img = high_freq_count(fft3_centered(img), HF_FRACTION)
    return _clip01(n_img / n_ref)


def ghost_modulation(ref: Volume, img: Volume) -> float:
    """Smallest k-space magnitude ratio |F_img| / |F_ref| over significant reference bins."""
    _check_pair(ref, img)
    f_ref = np.abs(fft3_centered(ref).data)
    f_img = np.abs(fft3_centered(img).data)
    peak = f_ref.max()
    if peak == 0:
        return 1.0
    sig = f_ref > GHOST_BIN_FRACTION * peak
    return _clip01(float(np.min(f_img[sig] / f_ref[sig])))


def truncation_ratio(ref: Volume, img: Volume) -> float:
    """Estimate the retained k-space fraction (cutoff side / dim) of a truncated image.

    A bin counts as retained when it keeps more than half its reference
    magnitude; the cutoff side is twice the largest retained offset from the
    k-space centre along any axis. An image that keeps every significant
    reference bin scores 1.
    """
    _check_pair(ref, img)
    k_ref = fft3_centered(ref)
    f_ref = np.abs(k_ref.data)
    f_img = np.abs(fft3_centered(img).data)
    peak = f_ref.max()
    if peak == 0:
        return 1.0
    sig = f_ref > RING_BIN_FRACTION * peak
    kept = np.zeros_like(sig)
    kept[sig] = f_img[sig] > 0.5 * f_ref[sig]
    if kept[sig].all():
        return 1.0
    if not kept.any():
        return 0.0
    best = 0.0
    for axis, (n, c) in enumerate(zip(k_ref.dims, k_ref.center)):
        other = tuple(a for a in range(3) if a != axis)
        idx = np.nonzero(kept.any(axis=other))[0]
        best = max(best, 2.0 * np.max(np.abs(idx - c)) / n)
    return _clip01(best)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    w = np.exp(-(r ** 2) / (2 * sigma ** 2))
    return w / w.sum()


def ssim3d(ref: Volume, img: Volume, win_size: int = 11, sigma: float = 1.5,
           data_range: float = 1.0, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean local SSIM over every window position lying fully inside the volume."""
    _check_pair(ref, img)
    if min(ref.dims) < win_size:
        raise ValueError(f"volume {ref.dims} smaller than SSIM window {win_size}")
    w = _gaussian_window(win_size, sigma)
    pad = win_size // 2
    valid = tuple(slice(pad, n - pad) for n in ref.dims)

    def wmean(a):
        for ax in range(3):
            a = ndi.correlate1d(a, w, axis=ax, mode="constant")
        return a[valid]

    x, y = ref.data, img.data
    mx, my = wmean(x), wmean(y)
    vx = wmean(x * x) - mx * mx
    vy = wmean(y * y) - my * my
    cxy = wmean(x * y) - mx * my
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    return float(np.mean(s))


def focal_mse(y: Union[QualityVector, Sequence[float]], t: Union[QualityVector, Sequence[float]],
              params: LossParams = LossParams()) -> float:
    """(1/M) * sum_m (1 + alpha |y_m - t_m|^gamma) (y_m - t_m)^2."""
    y = y.as_array() if isinstance(y, QualityVector) else np.asarray(y, dtype=np.float64)
    t = t.as_array() if isinstance(t, QualityVector) else np.asarray(t, dtype=np.float64)
    if y.shape != t.shape:
        raise ShapeMismatchError(f"{y.shape} vs {t.shape}")
    d = y - t
    return float(np.sum((1.0 + params.alpha * np.abs(d) ** params.gamma_exp) * d * d) / params.m)


def aggregate_quality(q: QualityVector) -> float:
    return float(np.mean(q.as_array()))


def flip_average(a: QualityVector, b: QualityVector) -> QualityVector:
    return QualityVector.from_array((a.as_array() + b.as_array()) / 2.0)


def quality_from_pair(ref: Volume, img: Volume) -> QualityVector:
    """All six reference-based scores for an arbitrary (reference, image) pair."""
    return QualityVector(
        contrast=contrast_sdr(ref, img),
        bias=cvr(ref, img),
        ring=truncation_ratio(ref, img),
        ghost=ghost_modulation(ref, img),
        noise=psnr_score(ref, img),
        blur=hf_ratio(ref, img),
    )


def scores_dict(q: QualityVector) -> dict:
    d = q.as_dict()
    d["aggregate"] = aggregate_quality(q)
    return d
