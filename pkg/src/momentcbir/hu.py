"""Geometric moments and Hu's seven moment invariants.

Coordinates are zero-based pixel indices with x along columns and y along
rows. Normalized central moments use eta_pq = mu_pq / mu_00**gamma,
gamma = (p + q)/2 + 1. The invariants are

    phi1 = eta20 + eta02
    phi2 = (eta20 - eta02)^2 + 4 eta11^2
    phi3 = (eta30 - 3 eta12)^2 + (3 eta21 - eta03)^2
    phi4 = (eta30 + eta12)^2 + (eta21 + eta03)^2
    phi5 = (eta30 - 3 eta12)(eta30 + eta12)[(eta30 + eta12)^2 - 3 (eta21 + eta03)^2]
         + (3 eta21 - eta03)(eta21 + eta03)[3 (eta30 + eta12)^2 - (eta21 + eta03)^2]
    phi6 = (eta20 - eta02)[(eta30 + eta12)^2 - (eta21 + eta03)^2]
         + 4 eta11 (eta30 + eta12)(eta21 + eta03)
    phi7 = (3 eta21 - eta03)(eta30 + eta12)[(eta30 + eta12)^2 - 3 (eta21 + eta03)^2]
         - (eta30 - 3 eta12)(eta21 + eta03)[3 (eta30 + eta12)^2 - (eta21 + eta03)^2]

phi7 changes sign under reflection; the others are unchanged.
"""
from __future__ import annotations

import numpy as np

from .features import FeatureVector
from .image_io import GrayImage


class DegenerateImageError(ValueError):
    """The image has zero total intensity, so the centroid is undefined."""


def _pixels(image) -> np.ndarray:
    return image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)


def raw_moment(image, p: int, q: int) -> float:
    f = _pixels(image)
    ys = np.arange(f.shape[0], dtype=np.float64)
    xs = np.arange(f.shape[1], dtype=np.float64)
    return float((ys**q) @ f @ (xs**p))


def centroid(image) -> tuple[float, float]:
    m00 = raw_moment(image, 0, 0)
    if m00 <= 0:
        raise DegenerateImageError("zero-mass image has no centroid")
    return raw_moment(image, 1, 0) / m00, raw_moment(image, 0, 1) / m00


def central_moment(image, p: int, q: int) -> float:
    f = _pixels(image)
    xbar, ybar = centroid(f)
    dy = np.arange(f.shape[0]) - ybar
    dx = np.arange(f.shape[1]) - xbar
    return float((dy**q) @ f @ (dx**p))


def normalized_moments(image, max_order: int = 3) -> dict[tuple[int, int], float]:
    """eta_pq for 2 <= p + q <= max_order."""
    f = _pixels(image)
    mu00 = central_moment(f, 0, 0)
    return {
        (p, s - p): central_moment(f, p, s - p) / mu00 ** (s / 2 + 1)
        for s in range(2, max_order + 1)
        for p in range(s + 1)
    }


def hu_invariants(image) -> FeatureVector:
    e = normalized_moments(image, 3)
    n20, n02, n11 = e[2, 0], e[0, 2], e[1, 1]
    n30, n03, n21, n12 = e[3, 0], e[0, 3], e[2, 1], e[1, 2]
    a, b = n30 + n12, n21 + n03
    c, d = n30 - 3 * n12, 3 * n21 - n03
    phi = [
        n20 + n02,
        (n20 - n02) ** 2 + 4 * n11**2,
        c**2 + d**2,
        a**2 + b**2,
        c * a * (a**2 - 3 * b**2) + d * b * (3 * a**2 - b**2),
        (n20 - n02) * (a**2 - b**2) + 4 * n11 * a * b,
        d * a * (a**2 - 3 * b**2) - c * b * (3 * a**2 - b**2),
    ]
    return FeatureVector(np.array(phi), "mi", 0)
