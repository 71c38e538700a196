"""Exact Legendre moments of gray-level images.

Each pixel is treated as a constant patch over its cell in [-1, 1]^2 and the
Legendre polynomials are integrated over every cell in closed form, using

    (2p+1)/2 * integral_{a}^{b} P_p(x) dx = (2p+1)/(2p+2) * [x P_p(x) - P_{p-1}(x)]_a^b

so the moments carry no quadrature error. The 2-D sum is separable: a pass
over the columns of every row, followed by a pass over the rows.

Conventions
-----------
Row index ``i`` of the pixel array runs along x and column index ``j`` along
y. Cell ``i`` (zero-based here) spans ``[-1 + i*dx, -1 + (i+1)*dx]`` with
``dx = 2/N``; its center is ``-1 + (i + 1/2)*dx``.

Feature vectors list L_pq for every p + q <= g, sorted by p + q and then by p.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _core
from .features import FeatureVector
from .image_io import GrayImage


def legendre_poly(p: int, x):
    """Evaluate P_p(x) with the three-term recurrence.

    Works on scalars and arrays. ``x`` must lie in [-1, 1].
    """
    if p < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    assert np.all(np.abs(x) <= 1.0), "legendre_poly: x outside [-1, 1]"
    prev, cur = np.ones_like(x), x.copy()
    if p == 0:
        out = prev
    else:
        for n in range(1, p):
            prev, cur = cur, ((2 * n + 1) * x * cur - n * prev) / (n + 1)
        out = cur
    return float(out) if out.ndim == 0 else out


def legendre_table(max_degree: int, x) -> np.ndarray:
    """Rows P_0(x) .. P_max_degree(x) as a ``(max_degree + 1, len(x))`` array."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = x
    for n in range(1, max_degree):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out


def pixel_centers(side: int) -> np.ndarray:
    """Centers of the ``side`` cells that tile [-1, 1]."""
    return (2.0 * np.arange(side) + 1.0 - side) / side


def cell_edges(side: int) -> np.ndarray:
    """The ``side + 1`` cell boundaries, with both ends exactly -1 and 1."""
    return (2.0 * np.arange(side + 1) - side) / side


@dataclass(frozen=True)
class LegendreKernel:
    """Per-cell integrals ``table[p, i] = (2p+1)/2 * integral of P_p over cell i``."""

    order: int
    side: int
    table: np.ndarray


@lru_cache(maxsize=64)
def build_kernel(order: int, side: int) -> LegendreKernel:
    if order < 0 or side < 1:
        raise ValueError("order must be >= 0 and side >= 1")
    edges = cell_edges(side)
    P = legendre_table(order, edges)
    table = np.empty((order + 1, side))
    table[0] = 1.0 / side
    for p in range(1, order + 1):
        g = edges * P[p] - P[p - 1]
        table[p] = (2 * p + 1) / (2 * p + 2) * np.diff(g)
    table.setflags(write=False)
    return LegendreKernel(order=order, side=side, table=table)


@lru_cache(maxsize=None)
def moment_index(g: int) -> tuple[tuple[int, int], ...]:
    """(p, q) pairs with p + q <= g in feature order."""
    return tuple((p, s - p) for s in range(g + 1) for p in range(s + 1))


def _pack(L: np.ndarray, g: int) -> np.ndarray:
    idx = moment_index(g)
    return np.array([L[p, q] for p, q in idx])


def unpack(features: FeatureVector) -> np.ndarray:
    """Scatter a feature vector back into a ``(g+1, g+1)`` moment matrix (zeros above the anti-diagonal)."""
    g = features.order
    L = np.zeros((g + 1, g + 1))
    for (p, q), v in zip(moment_index(g), features.values):
        L[p, q] = v
    return L


def _check(image, kernel: LegendreKernel) -> np.ndarray:
    px = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)
    if px.shape != (kernel.side, kernel.side):
        raise ValueError(f"kernel side {kernel.side} does not match image shape {px.shape}")
    return px


def elm_moments(image, g: int, kernel: LegendreKernel | None = None) -> np.ndarray:
    """Full ``(g+1, g+1)`` matrix of exact moments (entries with p + q > g included)."""
    if g < 0:
        raise ValueError("order must be non-negative")
    side = image.side if isinstance(image, GrayImage) else np.shape(image)[0]
    kernel = kernel or build_kernel(g, side)
    if kernel.order < g:
        raise ValueError(f"kernel order {kernel.order} < requested order {g}")
    px = _check(image, kernel)
    T = kernel.table[: g + 1]
    return _core.separable_moments(px, T, T)


def elm_compute(image, g: int, kernel: LegendreKernel | None = None) -> FeatureVector:
    """Exact Legendre moment features of total order ``g``.

    Returns ``(g+1)(g+2)/2`` values. Row moments Y[i, q] are accumulated first
    (sum over j), then L[p, q] = sum_i I_p(x_i) Y[i, q].
    """
    L = elm_moments(image, g, kernel)
    return FeatureVector(_pack(L, g), "elm", g)


def elm_direct(image, g: int) -> FeatureVector:
    """Reference double sum over every (i, j) for every (p, q); slow, used to cross-check."""
    side = image.side if isinstance(image, GrayImage) else np.shape(image)[0]
    T = build_kernel(g, side).table
    px = _check(image, build_kernel(g, side))
    vals = [float(np.sum(np.outer(T[p], T[q]) * px)) for p, q in moment_index(g)]
    return FeatureVector(np.array(vals), "elm", g)


def elm_approximate(image, g: int) -> FeatureVector:
    """Zeroth-order approximation: P_p(x_i) P_q(y_j) dx dy in place of the cell integral.

    This is the classical approximation whose error grows with the order; it
    exists for comparison against :func:`elm_compute`.
    """
    if g < 0:
        raise ValueError("order must be non-negative")
    px = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)
    side = px.shape[0]
    if px.shape != (side, side):
        raise ValueError(f"image must be square, got {px.shape}")
    delta = 2.0 / side
    norm = (2 * np.arange(g + 1) + 1) / 2.0
    T = legendre_table(g, pixel_centers(side)) * delta * norm[:, None]
    L = _core.separable_moments(px, T, T)
    return FeatureVector(_pack(L, g), "elm", g)


def elm_reconstruct(features: FeatureVector, side: int) -> np.ndarray:
    """Sample sum_{p+q<=g} L_pq P_p(x) P_q(y) at the pixel centers of a ``side`` grid."""
    L = unpack(features)
    P = legendre_table(features.order, pixel_centers(side))
    return P.T @ L @ P
