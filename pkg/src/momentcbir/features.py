"""Feature vector container and the method dispatch used by the database and CLI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METHODS = ("elm", "zm", "mi")


@dataclass(frozen=True)
class FeatureVector:
    """Ordered moment features with the method and order that produced them."""

    values: np.ndarray
    method: str
    order: int

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.dim

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def feature_dim(method: str, order: int) -> int:
    """Length of the feature vector for ``method`` at ``order``."""
    if method == "elm":
        return (order + 1) * (order + 2) // 2
    if method == "zm":
        # (n, m) with 0 <= m <= n, n - m even
        return sum(n // 2 + 1 for n in range(order + 1))
    if method == "mi":
        return 7
    raise ValueError(f"unknown method {method!r}")


def extract(image, method: str, order: int) -> FeatureVector:
    """Compute the features of ``image`` for one of ``elm``, ``zm`` or ``mi``.

    ``order`` is ignored for ``mi`` and recorded as 0.
    """
    if method == "elm":
        from .legendre import elm_compute

        return elm_compute(image, order)
    if method == "zm":
        from .zernike import zm_compute

        return zm_compute(image, order)
    if method == "mi":
        from .hu import hu_invariants

        return hu_invariants(image)
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
