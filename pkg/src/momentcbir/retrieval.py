"""Feature database, Canberra-distance queries and retrieval efficiency.

Binary database layout (all integers little-endian)::

    b"MOMF"  version:u16  method:u8  order:u16  dim:u32  count:u32
    count x ( id_len:u16  id:utf-8  class:u16  dim x f64 )
    crc32:u32   -- over every preceding byte, magic included
"""
from __future__ import annotations

import json
import logging
import struct
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _core
from .features import METHODS, FeatureVector, extract, feature_dim

log = logging.getLogger(__name__)

MAGIC = b"MOMF"
FORMAT_VERSION = 1
_METHOD_CODES = {"elm": 1, "zm": 2, "mi": 3}
_CODE_METHODS = {v: k for k, v in _METHOD_CODES.items()}
_HEADER = struct.Struct("<4sHBHII")


class DatabaseFormatError(ValueError):
    """Corrupt, truncated or incompatible feature database file."""


def canberra(a, b) -> float:
    """Canberra distance sum_k |a_k - b_k| / (|a_k| + |b_k|); 0/0 terms count as 0."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(_core.canberra_to_many(a, b[None, :])[0])


@dataclass
class FeatureDatabase:
    method: str
    order: int
    dim: int
    ids: list[str] = field(default_factory=list)
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    matrix: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float64).reshape(len(self.ids), self.dim)
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("database ids must be unique")
        if self.labels.shape != (len(self.ids),):
            raise ValueError("one class label per record required")

    def __len__(self):
        return len(self.ids)

    @cached_property
    def id_positions(self) -> np.ndarray:
        """Position of each record in id order, the tie-break key for ranking."""
        pos = np.empty(len(self.ids), dtype=np.int64)
        pos[np.argsort(np.array(self.ids, dtype=object), kind="stable")] = np.arange(len(self.ids))
        return pos

    @classmethod
    def from_records(cls, records, method: str | None = None, order: int | None = None):
        """Build from ``(id, class_label, FeatureVector)`` triples."""
        records = list(records)
        if not records and (method is None or order is None):
            raise ValueError("empty record list needs explicit method and order")
        method = method or records[0][2].method
        order = records[0][2].order if order is None else order
        dim = records[0][2].dim if records else feature_dim(method, order)
        for rid, _, fv in records:
            if fv.dim != dim or fv.method != method:
                raise ValueError(f"record {rid!r}: expected {method} features of dim {dim}, got {fv.method}/{fv.dim}")
        return cls(
            method=method,
            order=order,
            dim=dim,
            ids=[r[0] for r in records],
            labels=np.array([r[1] for r in records], dtype=np.int64),
            matrix=np.array([r[2].values for r in records]).reshape(len(records), dim),
        )

    def record(self, k: int) -> tuple[str, int, FeatureVector]:
        return self.ids[k], int(self.labels[k]), FeatureVector(self.matrix[k], self.method, self.order)

    def records(self):
        return [self.record(k) for k in range(len(self))]

    def describe(self) -> dict:
        return {
            "method": self.method,
            "order": self.order,
            "dim": self.dim,
            "records": len(self),
            "classes": int(np.unique(self.labels).size),
            "checksum": f"{zlib.crc32(self.to_bytes()):08x}",
        }

    def to_bytes(self) -> bytes:
        parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, _METHOD_CODES[self.method], self.order, self.dim, len(self))]
        for rid, label, row in zip(self.ids, self.labels, self.matrix):
            raw = rid.encode("utf-8")
            parts.append(struct.pack("<H", len(raw)))
            parts.append(raw)
            parts.append(struct.pack("<H", int(label)))
            parts.append(row.astype("<f8").tobytes())
        body = b"".join(parts)
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "FeatureDatabase":
        if len(data) < _HEADER.size + 4:
            raise DatabaseFormatError("file too short for a feature database")
        magic, version, code, order, dim, count = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise DatabaseFormatError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise DatabaseFormatError(f"unsupported format version {version} (expected {FORMAT_VERSION})")
        (stored_crc,) = struct.unpack_from("<I", data, len(data) - 4)
        if zlib.crc32(data[:-4]) != stored_crc:
            raise DatabaseFormatError("checksum mismatch (file truncated or corrupt)")
        if code not in _CODE_METHODS:
            raise DatabaseFormatError(f"unknown method code {code}")
        pos = _HEADER.size
        end = len(data) - 4
        ids, labels = [], []
        matrix = np.empty((count, dim))
        try:
            for k in range(count):
                (n,) = struct.unpack_from("<H", data, pos)
                pos += 2
                ids.append(data[pos : pos + n].decode("utf-8"))
                pos += n
                (label,) = struct.unpack_from("<H", data, pos)
                pos += 2
                labels.append(label)
                matrix[k] = np.frombuffer(data, dtype="<f8", count=dim, offset=pos)
                pos += 8 * dim
        except (struct.error, ValueError, UnicodeDecodeError) as exc:
            raise DatabaseFormatError(f"record {len(ids)}: {exc}") from exc
        if pos != end:
            raise DatabaseFormatError(f"length mismatch: {end - pos} trailing bytes")
        return cls(_CODE_METHODS[code], order, dim, ids, np.array(labels, dtype=np.int64), matrix)

    def to_json(self) -> str:
        doc = {
            "format": "MOMF-json",
            "version": FORMAT_VERSION,
            "method": self.method,
            "order": self.order,
            "dim": self.dim,
            "records": [
                {"id": rid, "class": int(label), "values": [float(f"{v:.17g}") for v in row]}
                for rid, label, row in zip(self.ids, self.labels, self.matrix)
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "FeatureDatabase":
        doc = json.loads(text)
        recs = doc["records"]
        return cls(
            method=doc["method"],
            order=int(doc["order"]),
            dim=int(doc["dim"]),
            ids=[r["id"] for r in recs],
            labels=np.array([r["class"] for r in recs], dtype=np.int64),
            matrix=np.array([r["values"] for r in recs], dtype=np.float64).reshape(len(recs), int(doc["dim"])),
        )


def save_db(db: FeatureDatabase, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    tmp.write_bytes(db.to_bytes())
    tmp.replace(path)


def load_db(path) -> FeatureDatabase:
    return FeatureDatabase.from_bytes(Path(path).read_bytes())


def _extract_one(args):
    image, method, order = args
    return extract(image, method, order).values


def build_db(images, method: str, order: int, jobs: int = 1) -> FeatureDatabase:
    """Extract features for every image (``GrayImage`` list) into a database."""
    images = list(images)
    if method == "mi":
        order = 0
    work = [(im, method, order) for im in images]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_extract_one, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        rows = [_extract_one(w) for w in work]
    dim = feature_dim(method, order)
    return FeatureDatabase(
        method=method,
        order=order,
        dim=dim,
        ids=[im.id for im in images],
        labels=np.array([im.class_label for im in images], dtype=np.int64),
        matrix=np.array(rows).reshape(len(images), dim),
    )


@dataclass
class Hit:
    id: str
    class_label: int
    distance: float


@dataclass
class RankedResult:
    hits: list[Hit]

    def __len__(self):
        return len(self.hits)

    def __iter__(self):
        return iter(self.hits)

    def __getitem__(self, k):
        return self.hits[k]


def _rank(distances: np.ndarray, id_pos: np.ndarray) -> np.ndarray:
    # ascending distance, ties by id
    return np.lexsort((id_pos, distances))


def query(db: FeatureDatabase, q, top_n: int) -> RankedResult:
    """Return the ``top_n`` records closest to ``q`` (all records if fewer)."""
    if len(db) == 0:
        raise ValueError("cannot query an empty database")
    if top_n < 1:
        raise ValueError("top_n must be positive")
    if isinstance(q, FeatureVector) and (q.method != db.method or (db.method != "mi" and q.order != db.order)):
        raise ValueError(
            f"query features are {q.method} order {q.order}, database is {db.method} order {db.order}"
        )
    qv = np.asarray(q, dtype=np.float64).ravel()
    if qv.shape[0] != db.dim:
        raise ValueError(f"dimension mismatch: query {qv.shape[0]} vs database {db.dim}")
    d = _core.canberra_to_many(qv, db.matrix)
    order = _rank(d, db.id_positions)[:top_n]
    return RankedResult([Hit(db.ids[k], int(db.labels[k]), float(d[k])) for k in order])


@dataclass
class RetrievalEfficiency:
    top_n: int
    exclude_self: bool
    per_class: dict[int, float]
    average: float          # mean of the per-class means
    per_query_average: float

    def to_dict(self) -> dict:
        return {
            "top_n": self.top_n,
            "exclude_self": self.exclude_self,
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "average": self.average,
            "per_query_average": self.per_query_average,
        }


def retrieval_efficiency(db: FeatureDatabase, top_n: int, exclude_self: bool = False,
                         distances: np.ndarray | None = None) -> RetrievalEfficiency:
    """Percentage of same-class images among the ``top_n`` retrieved, every record used as the query.

    By default the query stays in the candidate set (and counts as a match at
    rank 1). ``distances`` may pass a precomputed all-pairs matrix.
    """
    m = len(db)
    if m == 0:
        raise ValueError("cannot evaluate an empty database")
    if top_n < 1:
        raise ValueError("top_n must be positive")
    D = _core.canberra_pairwise(db.matrix) if distances is None else distances
    ranks = _rank_all(D, db.id_positions, exclude_self)
    n_ret = min(top_n, ranks.shape[1])
    hits = (db.labels[ranks[:, :n_ret]] == db.labels[:, None]).sum(axis=1)
    eff = 100.0 * hits / top_n
    per_class = {int(c): float(eff[db.labels == c].mean()) for c in np.unique(db.labels)}
    return RetrievalEfficiency(
        top_n=top_n,
        exclude_self=exclude_self,
        per_class=per_class,
        average=float(np.mean(list(per_class.values()))),
        per_query_average=float(eff.mean()),
    )


def _rank_all(D: np.ndarray, id_pos: np.ndarray, exclude_self: bool) -> np.ndarray:
    m = D.shape[0]
    out = []
    for r in range(m):
        d = D[r]
        order = np.lexsort((id_pos, d))
        if exclude_self:
            order = order[order != r]
        else:
            # self sits at rank 1 even if another record is also at distance 0
            order = np.concatenate(([r], order[order != r]))
        out.append(order)
    return np.array(out, dtype=np.int64)
