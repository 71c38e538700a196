import math

import numpy as np
import pytest

from momentcbir.image_io import GrayImage
from momentcbir.zernike import (
    excluded_pixels,
    polar_grid,
    zernike_complex,
    zernike_index,
    zernike_radial,
    zm_compute,
)


def radial_by_factorials(n, m, rho):
    m = abs(m)
    return sum(
        (-1) ** s * math.factorial(n - s)
        / (math.factorial(s) * math.factorial((n + m) // 2 - s) * math.factorial((n - m) // 2 - s))
        * rho ** (n - 2 * s)
        for s in range((n - m) // 2 + 1)
    )


def valid_nm(max_n):
    return [(n, m) for n in range(max_n + 1) for m in range(-n, n + 1) if (n - abs(m)) % 2 == 0]


class TestRadial:
    def test_examples(self):
        assert zernike_radial(0, 0, 0.7) == 1.0
        assert zernike_radial(1, 1, 0.5) == pytest.approx(0.5, abs=1e-15)
        assert zernike_radial(2, 0, 0.5) == pytest.approx(-0.5, abs=1e-15)

    def test_against_factorial_sum(self):
        rho = np.linspace(0, 1, 23)
        for n, m in valid_nm(20):
            expected = np.array([radial_by_factorials(n, m, r) for r in rho])
            np.testing.assert_allclose(zernike_radial(n, m, rho), expected, atol=1e-9)

    def test_unit_at_rim(self):
        for n, m in valid_nm(12):
            assert zernike_radial(n, m, 1.0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n,m", [(3, 0), (2, 3), (-1, 1), (4, 1)])
    def test_invalid_indices(self, n, m):
        with pytest.raises(ValueError):
            zernike_radial(n, m, 0.5)


class TestZernikeMoments:
    @pytest.mark.parametrize("order,dim", [(4, 9), (5, 12), (6, 16), (7, 20), (8, 25), (9, 30)])
    def test_dimensions(self, order, dim, turntable_image):
        fv = zm_compute(turntable_image, order)
        assert fv.dim == dim
        assert len(zernike_index(order)) == dim
        assert np.all(fv.values >= 0)

    def test_constant_image_disk_area(self):
        side = 128
        delta = 2.0 / side
        area = 0.0
        for i in range(side):
            for j in range(side):
                x, y = -1 + (i + 0.5) * delta, -1 + (j + 0.5) * delta
                if x * x + y * y <= 1.0:
                    area += delta * delta
        a00 = zm_compute(np.ones((side, side)), 0).values[0]
        assert a00 == pytest.approx(area / math.pi, abs=1e-12)
        assert a00 == pytest.approx(1.0, rel=0.02)

    def test_excluded_pixel_count(self):
        for side in (7, 64, 128):
            centers = [-1 + (k + 0.5) * 2.0 / side for k in range(side)]
            outside = sum(1 for x in centers for y in centers if math.hypot(x, y) > 1.0)
            assert excluded_pixels(side) == outside

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_rotation_invariance(self, k, turntable_image):
        a = zm_compute(turntable_image, 9).values
        b = zm_compute(np.rot90(turntable_image.pixels, k), 9).values
        np.testing.assert_allclose(b, a, rtol=0, atol=1e-10)

    def test_conjugate_symmetry(self, turntable_image):
        for n, m in valid_nm(6):
            if m > 0:
                assert abs(zernike_complex(turntable_image, n, -m) - np.conj(zernike_complex(turntable_image, n, m))) < 1e-12

    def test_magnitudes_match_complex(self, turntable_image):
        fv = zm_compute(turntable_image, 5)
        for (n, m), v in zip(zernike_index(5), fv.values):
            assert v == pytest.approx(abs(zernike_complex(turntable_image, n, m)), abs=1e-12)

    def test_outside_pixels_ignored(self):
        side = 32
        f = np.zeros((side, side))
        f[0, 0] = f[-1, -1] = 1.0  # corners are outside the disk
        assert np.all(zm_compute(f, 6).values == 0.0)
        assert not polar_grid(side)[2][0, 0]

    def test_accepts_gray_image(self):
        img = GrayImage(np.eye(16) * 0.5)
        np.testing.assert_array_equal(zm_compute(img, 3).values, zm_compute(img.pixels, 3).values)
