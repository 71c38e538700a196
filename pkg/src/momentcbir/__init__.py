"""Image-moment shape descriptors for content-based image retrieval.

Exact Legendre moments, Zernike moment magnitudes and Hu invariants as
feature vectors, Canberra-distance retrieval over a feature database, and a
one-vs-one kernel SVM for classification.
"""
__version__ = "0.1.0"

from .features import FeatureVector, extract, feature_dim
from .image_io import DatasetManifest, GrayImage, load_image, save_pgm, scan_coil20
from .legendre import build_kernel, elm_approximate, elm_compute, elm_reconstruct, legendre_poly
from .zernike import zernike_radial, zm_compute
from .hu import central_moment, hu_invariants, raw_moment
from .retrieval import FeatureDatabase, RankedResult, build_db, canberra, load_db, query, retrieval_efficiency, save_db
from .svm import SvmModel, classification_efficiency, classify, rbf_kernel, train

__all__ = [
    "DatasetManifest", "FeatureDatabase", "FeatureVector", "GrayImage", "RankedResult", "SvmModel",
    "build_db", "build_kernel", "canberra", "central_moment", "classification_efficiency", "classify",
    "elm_approximate", "elm_compute", "elm_reconstruct", "extract", "feature_dim", "hu_invariants",
    "legendre_poly", "load_db", "load_image", "query", "raw_moment", "rbf_kernel", "retrieval_efficiency",
    "save_db", "save_pgm", "scan_coil20", "train", "zernike_radial", "zm_compute",
]
