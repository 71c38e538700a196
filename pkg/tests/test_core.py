import os
import subprocess
import sys

import numpy as np
import pytest

from momentcbir import _core
from momentcbir._core import _fallback
from momentcbir.legendre import build_kernel
from momentcbir.svm import kernel_matrix

kernels = pytest.importorskip("momentcbir._core._kernels", reason="compiled extension not built")


def test_backend_selected():
    forced = os.environ.get("MOMENTCBIR_PURE", "0") not in ("", "0")
    assert _core.BACKEND == ("python" if forced else "cython")
    assert _core.smo_solve is (_fallback.smo_solve if forced else kernels.smo_solve)


def test_pure_env_forces_fallback():
    code = "from momentcbir import _core; print(_core.BACKEND)"
    env = dict(os.environ, MOMENTCBIR_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("side,order", [(1, 0), (8, 4), (128, 9)])
def test_separable_moments_agree(rng, side, order):
    T = build_kernel(order, side).table
    F = rng.random((side, side))
    np.testing.assert_allclose(kernels.separable_moments_loop(F, T, T), _fallback.separable_moments(F, T, T),
                               rtol=1e-12, atol=1e-14)


def test_canberra_agree(rng):
    X = rng.normal(size=(200, 30))
    X[:20, :5] = 0.0
    q = X[3].copy()
    np.testing.assert_allclose(kernels.canberra_to_many(q, X), _fallback.canberra_to_many(q, X), rtol=1e-13)
    np.testing.assert_allclose(kernels.canberra_pairwise(X), _fallback.canberra_pairwise(X), rtol=1e-13)
    B = X[:17]
    np.testing.assert_allclose(kernels.canberra_pairwise(X, B), _fallback.canberra_pairwise(X, B), rtol=1e-13)


@pytest.mark.parametrize("kind,c", [("rbf", 10.0), ("rbf", 0.5), ("linear", 10.0)])
def test_smo_agree(rng, kind, c):
    X = np.concatenate([rng.normal(0, 1, (25, 4)), rng.normal(1.2, 1, (25, 4))])
    y = np.repeat([1.0, -1.0], 25)
    K = np.ascontiguousarray(kernel_matrix(X, X, kind, 0.25))
    a1, r1, n1, g1 = kernels.smo_solve(K, y, c, 1e-3, 10000)
    a2, r2, n2, g2 = _fallback.smo_solve(K, y, c, 1e-3, 10000)
    assert n1 == n2
    np.testing.assert_allclose(a1, a2, atol=1e-9)
    assert r1 == pytest.approx(r2, abs=1e-9)
    assert g1 <= 1e-3 and g2 <= 1e-3


def test_smo_iteration_cap(rng):
    X = rng.normal(size=(40, 3))
    y = np.where(rng.random(40) > 0.5, 1.0, -1.0)
    K = np.ascontiguousarray(kernel_matrix(X, X, "rbf", 1.0))
    for impl in (kernels, _fallback):
        _, _, n, gap = impl.smo_solve(K, y, 1000.0, 1e-12, 3)
        assert n == 3 and gap > 1e-12
