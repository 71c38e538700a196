"""Synthetic COIL-style image sets: objects on a turntable, one view per angle step.

Used to exercise the pipeline end to end where the real COIL-20 images are
not available. Objects are a handful of random ellipsoids seen from the side
while turning about the vertical image axis.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .image_io import GrayImage, save_pgm


def _object_params(k: int, seed: int):
    rng = np.random.default_rng([seed, k])
    parts = []
    for _ in range(2 + k % 4):
        parts.append(
            dict(
                cx=rng.uniform(-0.3, 0.3),
                cy=rng.uniform(-0.4, 0.4),
                cz=rng.uniform(-0.3, 0.3),
                a=rng.uniform(0.08, 0.35),
                b=rng.uniform(0.08, 0.45),
                c=rng.uniform(0.05, 0.35),
                level=rng.uniform(0.3, 1.0),
                hard=bool(rng.integers(0, 2)),
            )
        )
    return parts


def render(k: int, angle_deg: float, side: int = 128, seed: int = 0) -> np.ndarray:
    """Orthographic view of object ``k`` turned ``angle_deg`` about the vertical axis.

    Rows run top to bottom (vertical axis), columns left to right. Each part
    is an axis-aligned ellipsoid whose silhouette is drawn either solid or as
    a soft Gaussian; overlapping parts take the brighter value.
    """
    c = (2.0 * np.arange(side) + 1.0 - side) / side
    yy, xx = np.meshgrid(c, c, indexing="ij")
    t = np.deg2rad(angle_deg)
    img = np.zeros((side, side))
    for p in _object_params(k, seed):
        # turntable rotation about the vertical axis, then drop depth
        px = p["cx"] * np.cos(t) + p["cz"] * np.sin(t)
        half_width = np.hypot(p["a"] * np.cos(t), p["c"] * np.sin(t))
        r2 = ((xx - px) / half_width) ** 2 + ((yy - p["cy"]) / p["b"]) ** 2
        # parts nearer the camera are drawn brighter
        depth = -p["cx"] * np.sin(t) + p["cz"] * np.cos(t)
        level = p["level"] * (0.85 + 0.15 * depth / 0.3)
        if p["hard"]:
            img = np.maximum(img, level * (r2 <= 1.0))
        else:
            img = np.maximum(img, level * np.exp(-2.0 * r2))
    return np.clip(img, 0.0, 1.0)


def make_images(classes: int = 20, views: int = 72, side: int = 128, seed: int = 0) -> list[GrayImage]:
    """In-memory dataset ordered by (class, view), ids ``obj<k>__<view>``."""
    step = 360.0 / views
    out = []
    for k in range(1, classes + 1):
        for v in range(views):
            px = np.rint(render(k, v * step, side, seed) * 255.0) / 255.0
            out.append(GrayImage(px, id=f"obj{k}__{v}", class_label=k - 1))
    return out


def write_dataset(root, classes: int = 20, views: int = 72, side: int = 128, seed: int = 0) -> Path:
    """Write a dataset directory of ``obj<k>__<view>.pgm`` files and return its path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for im in make_images(classes, views, side, seed):
        save_pgm(im, root / f"{im.id}.pgm")
    return root
