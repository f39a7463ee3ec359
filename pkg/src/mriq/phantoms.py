"""Synthetic test volumes used by the test suite and the example scripts."""
from __future__ import annotations

import numpy as np

from .volume import Volume


def _coords(n: int):
    c = (n - 1) / 2.0
    return np.meshgrid(*(np.arange(n) - c,) * 3, indexing="ij")


def smooth_phantom(n: int = 32) -> Volume:
    """Brain-like blob: a few overlapping Gaussian lobes, peak 1, near-zero border."""
    x, y, z = _coords(n)
    s = n / 2.0
    lobes = [
        (0.0, 0.0, 0.0, 0.35, 1.0),
        (0.18, 0.05, -0.1, 0.15, 0.5),
        (-0.2, -0.1, 0.12, 0.12, -0.35),
        (0.05, 0.22, 0.2, 0.1, 0.4),
    ]
    out = np.zeros((n, n, n))
    for cx, cy, cz, w, a in lobes:
        r2 = (x / s - cx) ** 2 + (y / s - cy) ** 2 + (z / s - cz) ** 2
        out += a * np.exp(-r2 / (2 * w ** 2))
    out = np.clip(out, 0, None)
    return Volume(out / out.max())


def sphere(n: int = 32, radius: float = None, value: float = 1.0) -> Volume:
    x, y, z = _coords(n)
    radius = n / 4.0 if radius is None else radius
    return Volume(np.where(x ** 2 + y ** 2 + z ** 2 <= radius ** 2, value, 0.0))


def step_phantom(n: int = 32, low: float = 0.25, high: float = 0.75) -> Volume:
    """Nested boxes on a mid-grey background; sharp edges, values kept off 0 and 1.

    Box widths are odd and off-centre so the spectrum has no exact zeros.
    """
    data = np.full((n, n, n), low)
    a, w = n // 5, n // 2 + 1 - (n // 2) % 2
    data[a:a + w, a + 1:a + 1 + w, a + 2:a + 2 + w] = high
    b, u = a + w // 3, w // 3 | 1
    data[b:b + u, b + 2:b + 2 + u, b:b + u + 2] = (low + high) / 2
    return Volume(data)


def ramp(n: int = 32) -> Volume:
    """Linear ramp from 0 to 1 along x."""
    line = np.linspace(0.0, 1.0, n)
    return Volume(np.broadcast_to(line[:, None, None], (n, n, n)))
