"""Grayscale image loading and COIL-20 directory scanning.

Images are held as square float64 arrays scaled to [0, 1]. Binary PGM (P5)
is parsed directly; PNG goes through Pillow.
"""
from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

COIL20_CLASSES = 20
COIL20_PER_CLASS = 72

_COIL_NAME = re.compile(r"^obj(\d+)__(\d+)\.(png|pgm)$", re.IGNORECASE)


class ImageFormatError(ValueError):
    """Raised when a file cannot be decoded as a square 8-bit grayscale image."""


class DatasetError(ValueError):
    """Raised when a dataset directory does not have the expected layout."""


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray
    id: str = ""
    class_label: int = 0

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise ImageFormatError(f"image must be square 2-D, got shape {px.shape}")
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ImageFormatError("intensities must lie in [0, 1]")
        if self.class_label < 0:
            raise ValueError("class_label must be non-negative")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def side(self) -> int:
        return self.pixels.shape[0]


@dataclass
class ManifestEntry:
    path: Path
    id: str
    class_label: int
    angle: int = 0


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    variant: str = "coil-20-proc"

    @property
    def class_count(self) -> int:
        return len({e.class_label for e in self.entries})

    @property
    def per_class_count(self) -> int:
        counts = self.class_counts()
        return min(counts.values()) if counts else 0

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for e in self.entries:
            counts[e.class_label] = counts.get(e.class_label, 0) + 1
        return counts

    def __len__(self):
        return len(self.entries)

    def to_json(self) -> str:
        return json.dumps(
            [{"path": str(e.path), "id": e.id, "class": e.class_label} for e in self.entries],
            ensure_ascii=False,
            indent=1,
        )

    def load_images(self) -> list[GrayImage]:
        return [load_image(e.path, id=e.id, class_label=e.class_label) for e in self.entries]


def _read_pgm(data: bytes) -> np.ndarray:
    # P5 header: magic, width, height, maxval, separated by whitespace; '#' starts a comment
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ImageFormatError("truncated PGM header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster
    if tokens[0] != b"P5":
        raise ImageFormatError(f"unsupported PGM magic {tokens[0]!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError("malformed PGM header") from exc
    if maxval != 255:
        raise ImageFormatError(f"only 8-bit PGM is supported (maxval={maxval})")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ImageFormatError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def _read_png(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "P"):
                raise ImageFormatError(f"{path}: not an 8-bit grayscale image (mode {im.mode})")
            if im.mode == "P":
                rgb = np.asarray(im.convert("RGB"))
                if not (np.array_equal(rgb[..., 0], rgb[..., 1]) and np.array_equal(rgb[..., 1], rgb[..., 2])):
                    raise ImageFormatError(f"{path}: palette image is not grayscale")
                return rgb[..., 0].copy()
            return np.asarray(im, dtype=np.uint8).copy()
    except ImageFormatError:
        raise
    except Exception as exc:
        raise ImageFormatError(f"{path}: cannot decode PNG: {exc}") from exc


def load_image(path, id: str | None = None, class_label: int = 0) -> GrayImage:
    """Load an 8-bit grayscale PGM or PNG file, scaling values by 1/255."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(8)
    except OSError as exc:
        raise ImageFormatError(f"{path}: unreadable: {exc}") from exc
    if head.startswith(b"P5"):
        raw = _read_pgm(path.read_bytes())
    elif head.startswith(b"\x89PNG"):
        raw = _read_png(path)
    else:
        raise ImageFormatError(f"{path}: unsupported format (expected binary PGM or PNG)")
    if raw.shape[0] != raw.shape[1]:
        raise ImageFormatError(f"{path}: image is not square ({raw.shape[1]}x{raw.shape[0]})")
    return GrayImage(raw.astype(np.float64) / 255.0, id=id if id is not None else path.stem,
                     class_label=class_label)


def save_pgm(image: GrayImage | np.ndarray, path) -> None:
    """Write an image as binary 8-bit PGM (values rounded to the nearest 1/255)."""
    px = image.pixels if isinstance(image, GrayImage) else np.asarray(image)
    raw = np.clip(np.rint(px * 255.0), 0, 255).astype(np.uint8)
    h, w = raw.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(raw.tobytes())


def scan_coil20(root, strict: bool = False, expected_classes: int = COIL20_CLASSES,
                expected_per_class: int = COIL20_PER_CLASS) -> DatasetManifest:
    """Build a manifest from a directory of ``obj<k>__<angle>.<ext>`` files.

    Entries are sorted by (class, angle) independently of filesystem order.
    With ``strict`` set, a missing class or a class count other than
    ``expected_per_class`` is an error; otherwise it is logged as a warning.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    found: dict[tuple[int, int], Path] = {}
    for name in os.listdir(root):
        m = _COIL_NAME.match(name)
        if not m:
            continue
        k, angle = int(m.group(1)), int(m.group(2))
        if not 1 <= k <= expected_classes:
            log.warning("ignoring %s: object index outside 1..%d", name, expected_classes)
            continue
        if (k, angle) in found:
            raise DatasetError(f"duplicate entry for obj{k} angle {angle}: {found[(k, angle)].name}, {name}")
        found[(k, angle)] = root / name
    if not found:
        raise DatasetError(f"{root}: no obj<k>__<angle> images found")

    entries = [ManifestEntry(path=p, id=p.stem, class_label=k - 1, angle=a)
               for (k, a), p in sorted(found.items())]
    manifest = DatasetManifest(entries=entries)

    counts = manifest.class_counts()
    problems = []
    present = sorted(counts)
    if strict and len(present) != expected_classes:
        missing = sorted(set(range(expected_classes)) - set(present))
        problems.append(f"missing classes {[c + 1 for c in missing]}")
    for c, n in sorted(counts.items()):
        if n != expected_per_class:
            problems.append(f"obj{c + 1} has {n} images, expected {expected_per_class}")
    if problems:
        msg = "; ".join(problems)
        if strict:
            raise DatasetError(msg)
        log.warning("%s", msg)

    # class labels must be contiguous from 0 for downstream consumers
    remap = {c: i for i, c in enumerate(present)}
    if any(c != i for c, i in remap.items()):
        for e in manifest.entries:
            e.class_label = remap[e.class_label]
    return manifest
