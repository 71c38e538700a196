"""Hot kernels, compiled when possible.

The Cython extension ``_kernels`` supplies the Canberra scans and the SMO
solver when it was built; otherwise, or when the environment variable
``MOMENTCBIR_PURE`` is set to a non-empty value other than ``0``, the numpy
fallback is used. ``BACKEND`` names the choice. The separable moment pass is
a pair of BLAS matrix products in both cases.
"""
import os

from . import _fallback

if os.environ.get("MOMENTCBIR_PURE", "0") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

# BLAS matmul beats a hand loop on the separable pass; see benchmarks/bench_core.py
separable_moments = _fallback.separable_moments
canberra_to_many = _impl.canberra_to_many
canberra_pairwise = _impl.canberra_pairwise
smo_solve = _impl.smo_solve

__all__ = ["BACKEND", "separable_moments", "canberra_to_many", "canberra_pairwise", "smo_solve"]
