import os
from pathlib import Path

import numpy as np
import pytest

from momentcbir import synthetic
from momentcbir.image_io import GrayImage


def coil20_root():
    root = os.environ.get("COIL20_ROOT")
    return Path(root) if root else None


@pytest.fixture(scope="session")
def coil20_images():
    """Real COIL-20 images, or a test failure explaining how to provide them."""
    from momentcbir.image_io import scan_coil20

    root = coil20_root()
    if root is None or not root.is_dir():
        pytest.fail(
            "COIL-20 not available: set COIL20_ROOT to the directory of obj<k>__<angle>.png files "
            "(the processed 128x128 distribution)",
            pytrace=False,
        )
    return scan_coil20(root, strict=True).load_images()


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """4 classes x 12 views at 32x32, written as PGM files."""
    root = tmp_path_factory.mktemp("coil_small")
    synthetic.write_dataset(root, classes=4, views=12, side=32, seed=3)
    return root


@pytest.fixture(scope="session")
def synthetic_coil():
    """Full-size synthetic stand-in: 20 classes x 72 views, 128x128."""
    return synthetic.make_images(20, 72, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def turntable_image():
    return GrayImage(synthetic.render(5, 30.0, 64), id="obj5__30", class_label=4)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
