"""Zernike moment magnitudes on the unit disk.

Pixel centers use the same [-1, 1]^2 grid as the Legendre moments (row index
along x). Pixels whose center lies outside the unit circle are dropped.
Moments are

    A_nm = (n+1)/pi * sum f(x, y) R_nm(rho) exp(-i m theta) dx dy,

with theta = atan2(y, x), and the features are |A_nm| for 0 <= m <= n,
n - m even, ordered by n then m.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .features import FeatureVector
from .image_io import GrayImage
from .legendre import pixel_centers


def _check_nm(n: int, m: int) -> None:
    if n < 0 or abs(m) > n or (n - abs(m)) % 2:
        raise ValueError(f"invalid Zernike indices (n={n}, m={m}): need |m| <= n and n - |m| even")


def radial_coefficients(n: int, m: int) -> list[float]:
    """Coefficients of rho^(n-2s), s = 0 .. (n-|m|)/2, built by term ratios."""
    _check_nm(n, m)
    a, b = (n + abs(m)) // 2, (n - abs(m)) // 2
    c = float(math.comb(n, a))  # n! / (a! b!)
    coeffs = [c]
    for s in range(b):
        c = -c * (a - s) * (b - s) / ((s + 1) * (n - s))
        coeffs.append(c)
    return coeffs


def zernike_radial(n: int, m: int, rho):
    """Radial polynomial R_nm(rho), scalar or array."""
    coeffs = radial_coefficients(n, m)
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0) or np.any(rho > 1):
        raise ValueError("rho must lie in [0, 1]")
    out = np.zeros_like(rho)
    for s, c in enumerate(coeffs):
        out = out + c * rho ** (n - 2 * s)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def zernike_index(order: int) -> tuple[tuple[int, int], ...]:
    return tuple((n, m) for n in range(order + 1) for m in range(n % 2, n + 1, 2))


@lru_cache(maxsize=16)
def polar_grid(side: int):
    """(rho, theta, inside-mask) at the pixel centers of a ``side`` grid."""
    c = pixel_centers(side)
    x, y = np.meshgrid(c, c, indexing="ij")
    rho = np.hypot(x, y)
    theta = np.arctan2(y, x)
    inside = rho <= 1.0
    for a in (rho, theta, inside):
        a.setflags(write=False)
    return rho, theta, inside


def excluded_pixels(side: int) -> int:
    """Number of pixels whose center falls outside the unit disk."""
    return int(np.count_nonzero(~polar_grid(side)[2]))


def _basis_row(n, m, rho, theta, scale):
    return (n + 1) / math.pi * scale * zernike_radial(n, m, rho) * np.exp(-1j * m * theta)


@lru_cache(maxsize=16)
def _basis(order: int, side: int):
    rho, theta, inside = polar_grid(side)
    r, t = rho[inside], theta[inside]
    area = (2.0 / side) ** 2
    B = np.array([_basis_row(n, m, r, t, area) for n, m in zernike_index(order)])
    B.setflags(write=False)
    return B, inside


def _pixels(image) -> np.ndarray:
    px = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)
    if px.ndim != 2 or px.shape[0] != px.shape[1]:
        raise ValueError(f"image must be square, got shape {px.shape}")
    return px


def zernike_complex(image, n: int, m: int) -> complex:
    """Complex moment A_nm for any valid repetition, negative m included."""
    _check_nm(n, m)
    px = _pixels(image)
    rho, theta, inside = polar_grid(px.shape[0])
    area = (2.0 / px.shape[0]) ** 2
    v = _basis_row(n, m, rho[inside], theta[inside], area)
    return complex(np.dot(v, px[inside]))


def zm_compute(image, order: int) -> FeatureVector:
    if order < 0:
        raise ValueError("order must be non-negative")
    px = _pixels(image)
    B, inside = _basis(order, px.shape[0])
    return FeatureVector(np.abs(B @ px[inside]), "zm", order)
