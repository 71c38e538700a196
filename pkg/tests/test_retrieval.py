import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from momentcbir.features import FeatureVector
from momentcbir.retrieval import (
    DatabaseFormatError,
    FeatureDatabase,
    build_db,
    canberra,
    load_db,
    query,
    retrieval_efficiency,
    save_db,
)
from momentcbir.synthetic import make_images

vectors = hnp.arrays(np.float64, st.integers(1, 12), elements=st.floats(-1e6, 1e6, allow_subnormal=False))


def make_db(matrix, labels, ids=None, method="elm", order=None):
    matrix = np.asarray(matrix, dtype=np.float64)
    ids = ids or [f"r{k:03d}" for k in range(len(matrix))]
    if order is None:
        order = {1: 0, 3: 1, 6: 2}.get(matrix.shape[1], 0)
    return FeatureDatabase(method, order, matrix.shape[1], ids, np.asarray(labels), matrix)


class TestCanberra:
    def test_identity(self):
        assert canberra([1.5, -2.0, 0.0], [1.5, -2.0, 0.0]) == 0.0

    def test_example(self):
        assert canberra([1.0, 0.0], [3.0, 0.0]) == pytest.approx(0.5, abs=1e-15)

    def test_all_zero(self):
        assert canberra(np.zeros(5), np.zeros(5)) == 0.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            canberra([1, 2], [1, 2, 3])

    @given(vectors, st.data())
    def test_metric_properties(self, a, data):
        b = data.draw(hnp.arrays(np.float64, a.shape, elements=st.floats(-1e6, 1e6, allow_subnormal=False)))
        d = canberra(a, b)
        assert d == canberra(b, a)
        assert 0.0 <= d <= a.size + 1e-12
        assert (d == 0.0) == bool(np.all(a == b))

    def test_against_scalar_loop(self, rng):
        a, b = rng.normal(size=40), rng.normal(size=40)
        b[:5] = 0
        a[:3] = 0
        ref = sum(abs(x - y) / (abs(x) + abs(y)) for x, y in zip(a, b) if abs(x) + abs(y) > 0)
        assert canberra(a, b) == pytest.approx(ref, rel=1e-14)


class TestQuery:
    def test_self_match(self, rng):
        db = make_db(rng.random((10, 6)), np.arange(10) % 2)
        res = query(db, db.matrix[4], 3)
        assert res[0].id == "r004" and res[0].distance == 0.0
        assert len(res) == 3

    def test_one_hot(self):
        db = make_db(np.eye(3), [0, 1, 2], ids=["c", "a", "b"])
        res = query(db, np.array([1.0, 0.0, 0.0]), 3)
        assert [h.id for h in res] == ["c", "a", "b"]
        assert [h.distance for h in res] == [0.0, 2.0, 2.0]

    def test_clamps_top_n(self, rng):
        db = make_db(rng.random((4, 3)), [0, 0, 1, 1])
        assert len(query(db, db.matrix[0], 50)) == 4

    def test_sorted(self, rng):
        db = make_db(rng.random((50, 6)), rng.integers(0, 4, 50))
        d = [h.distance for h in query(db, rng.random(6), 50)]
        assert d == sorted(d)

    def test_permutation_invariance(self, rng):
        m = rng.random((30, 3))
        m[5] = m[6]  # forces a tie
        db = make_db(m, np.arange(30) % 3)
        perm = rng.permutation(30)
        db2 = make_db(m[perm], (np.arange(30) % 3)[perm], ids=[db.ids[k] for k in perm])
        q = rng.random(3)
        a = [(h.id, h.distance) for h in query(db, q, 30)]
        b = [(h.id, h.distance) for h in query(db2, q, 30)]
        assert a == b

    def test_errors(self, rng):
        db = make_db(rng.random((4, 3)), [0, 0, 1, 1])
        with pytest.raises(ValueError, match="dimension"):
            query(db, np.zeros(6), 2)
        with pytest.raises(ValueError, match="empty"):
            query(make_db(np.zeros((0, 3)), []), np.zeros(3), 1)
        with pytest.raises(ValueError, match="zm"):
            query(db, FeatureVector(np.zeros(3), "zm", 1), 2)


class TestEfficiency:
    def test_perfect_separation(self):
        m = np.repeat(np.eye(4), 5, axis=0)
        db = make_db(m, np.repeat(np.arange(4), 5))
        eff = retrieval_efficiency(db, 5)
        assert eff.average == 100.0
        assert eff.per_class == {0: 100.0, 1: 100.0, 2: 100.0, 3: 100.0}

    def test_single_class(self, rng):
        db = make_db(rng.random((9, 3)), [0] * 9)
        assert retrieval_efficiency(db, 9).average == 100.0

    def test_top1_self(self, rng):
        m = rng.random((20, 3))
        m[3] = m[7]  # a duplicate of another class must not displace the query
        db = make_db(m, np.arange(20) % 4)
        assert retrieval_efficiency(db, 1).average == 100.0

    def test_hand_example(self):
        # 1-D features; classes {0, 0, 1}; top 2 with self included
        db = make_db([[1.0], [2.0], [1.1]], [0, 0, 1])
        eff = retrieval_efficiency(db, 2)
        # r0 -> r0, r2 (1/2); r1 -> r1, r2 (1/2); r2 -> r2, r0 (1/2)
        assert eff.per_query_average == pytest.approx(50.0)
        assert eff.per_class == {0: 50.0, 1: 50.0}
        excl = retrieval_efficiency(db, 1, exclude_self=True)
        # r0 -> r2 (0); r1 -> r2 (0); r2 -> r0 (0)
        assert excl.per_query_average == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            retrieval_efficiency(make_db(np.zeros((0, 3)), []), 3)


class TestPersistence:
    def test_round_trip(self, tmp_path, rng):
        db = make_db(rng.normal(size=(25, 6)) * 10.0 ** rng.integers(-12, 12, (25, 6)), rng.integers(0, 5, 25),
                     ids=[f"obj{k}__ü{k}" for k in range(25)])
        save_db(db, tmp_path / "x.momf")
        back = load_db(tmp_path / "x.momf")
        assert back.ids == db.ids and back.method == db.method and back.order == db.order
        np.testing.assert_array_equal(back.labels, db.labels)
        assert back.matrix.tobytes() == db.matrix.tobytes()

    def test_truncated(self, tmp_path, rng):
        db = make_db(rng.random((5, 3)), [0, 1, 2, 3, 4])
        data = db.to_bytes()
        for cut in (3, 20, len(data) - 1):
            (tmp_path / "t.momf").write_bytes(data[:cut])
            with pytest.raises(DatabaseFormatError):
                load_db(tmp_path / "t.momf")

    def test_bit_flip(self, rng):
        data = bytearray(make_db(rng.random((5, 3)), [0] * 5).to_bytes())
        data[40] ^= 0x10
        with pytest.raises(DatabaseFormatError, match="checksum"):
            FeatureDatabase.from_bytes(bytes(data))

    def test_version(self, rng):
        import struct
        import zlib

        data = bytearray(make_db(rng.random((2, 3)), [0, 1]).to_bytes()[:-4])
        data[4:6] = struct.pack("<H", 99)
        data += struct.pack("<I", zlib.crc32(bytes(data)))
        with pytest.raises(DatabaseFormatError, match="version"):
            FeatureDatabase.from_bytes(bytes(data))

    def test_header_layout(self):
        db = make_db([[1.0, 2.0, 3.0]], [7], ids=["ab"])
        data = db.to_bytes()
        assert data[:4] == b"MOMF"
        assert data[4:6] == b"\x01\x00"
        assert data[6] == 1  # elm
        assert data[7:9] == b"\x01\x00"
        assert data[9:13] == b"\x03\x00\x00\x00"
        assert data[13:17] == b"\x01\x00\x00\x00"
        assert data[17:19] == b"\x02\x00" and data[19:21] == b"ab" and data[21:23] == b"\x07\x00"
        assert np.frombuffer(data[23:47], "<f8").tolist() == [1.0, 2.0, 3.0]
        assert len(data) == 47 + 4

    def test_json_round_trip(self, rng):
        db = make_db(rng.normal(size=(30, 6)) * 1e-7, rng.integers(0, 3, 30))
        back = FeatureDatabase.from_json(db.to_json())
        np.testing.assert_array_equal(back.matrix, db.matrix)
        doc = json.loads(db.to_json())
        assert doc["records"][0]["class"] == int(db.labels[0])

    def test_unique_ids(self):
        with pytest.raises(ValueError, match="unique"):
            make_db(np.zeros((2, 3)), [0, 1], ids=["a", "a"])


class TestBuild:
    def test_dims_and_labels(self):
        imgs = make_images(2, 3, 16)
        for method, order, dim in [("elm", 4, 15), ("zm", 4, 9), ("mi", 6, 7)]:
            db = build_db(imgs, method, order)
            assert db.dim == dim and len(db) == 6
            assert db.order == (0 if method == "mi" else order)
            assert db.labels.tolist() == [0, 0, 0, 1, 1, 1]

    def test_parallel_matches_serial(self):
        imgs = make_images(2, 4, 16)
        a = build_db(imgs, "elm", 5, jobs=1)
        b = build_db(imgs, "elm", 5, jobs=2)
        np.testing.assert_array_equal(a.matrix, b.matrix)
