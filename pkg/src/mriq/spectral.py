"""Centered 3D Fourier transforms (k-space) and high-frequency counting.

Transforms are exact-length (pocketfft handles mixed radix, e.g. 224 = 2^5 * 7)
and always computed in complex128.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import fft as sfft

from .volume import Volume

# tolerated imaginary residue when returning to image space
IMAG_TOL = 1e-4


@dataclass(frozen=True)
class KSpace:
    """Complex spectrum with the DC bin at index ``n // 2`` on every axis."""
    data: np.ndarray
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(n) for n in self.data.shape)

    @property
    def center(self) -> Tuple[int, int, int]:
        return tuple(n // 2 for n in self.data.shape)

    def magnitude(self) -> np.ndarray:
        return np.abs(self.data)


def fft3_centered(v: Volume) -> KSpace:
    k = sfft.fftshift(sfft.fftn(np.asarray(v.data, dtype=np.complex128)))
    return KSpace(k, v.spacing)


def ifft3_centered(k: KSpace, check_real: bool = True) -> Volume:
    """Inverse of :func:`fft3_centered`, returning the real part unclipped.

    With ``check_real`` the imaginary residue must stay below ``IMAG_TOL``,
    which holds whenever ``k`` keeps the Hermitian symmetry of a real volume.
    """
    x = sfft.ifftn(sfft.ifftshift(k.data))
    if check_real:
        resid = float(np.max(np.abs(x.imag))) if x.size else 0.0
        if resid >= IMAG_TOL:
            raise ValueError(f"k-space is not Hermitian: imaginary residue {resid:.3g}")
    return Volume(x.real, k.spacing)


def high_freq_count(k: KSpace, threshold_fraction: float = 1e-3) -> int:
    """Number of bins whose magnitude strictly exceeds ``threshold_fraction * max|k|``."""
    if not 0 < threshold_fraction < 1:
        raise ValueError(f"threshold_fraction must lie in (0, 1), got {threshold_fraction}")
    mag = k.magnitude()
    peak = float(mag.max())
    if peak == 0:
        return 0
    return int(np.count_nonzero(mag > threshold_fraction * peak))


def signed_frequencies(n: int) -> np.ndarray:
    """Signed integer frequency for each centered index of an axis of length n."""
    return np.arange(n) - n // 2
