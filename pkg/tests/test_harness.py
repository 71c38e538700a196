import csv
import io
import json

import pytest

from momentcbir import harness
from momentcbir.synthetic import make_images, render


@pytest.fixture(scope="module")
def cache():
    return harness.FeatureCache(make_images(3, 8, 32), jobs=1)


def test_render_deterministic():
    assert (render(2, 45.0, 32) == render(2, 45.0, 32)).all()
    assert 0.0 <= render(2, 45.0, 32).min() and render(2, 45.0, 32).max() <= 1.0


def test_cache_persists(tmp_path):
    imgs = make_images(2, 4, 16)
    a = harness.FeatureCache(imgs, tmp_path).get("elm", 4)
    assert (tmp_path / "elm_4.momf").exists()
    b = harness.FeatureCache(imgs, tmp_path).get("elm", 4)
    assert a.matrix.tobytes() == b.matrix.tobytes()
    # a cache built from different images is not reused
    c = harness.FeatureCache(make_images(2, 5, 16), tmp_path).get("elm", 4)
    assert len(c) == 10


def test_mi_is_order_independent(cache):
    assert cache.get("mi", 4) is cache.get("mi", 9)


def test_retrieval_rows(cache):
    res = harness.run_retrieval_benchmark(cache, ("mi", "elm"), (4, 5), top_n=8)
    rows = res["rows"]
    assert [(r["method"], r["order"]) for r in rows] == [("mi", 4), ("mi", 5), ("elm", 4), ("elm", 5)]
    assert rows[0]["avg_retrieval_efficiency_pct"] == rows[1]["avg_retrieval_efficiency_pct"]
    for r in rows:
        assert r["self_excluded_pct"] <= r["self_included_pct"]
        assert set(r["per_class_pct"]) == {0, 1, 2}


def test_exclude_self_switches_main_value(cache):
    res = harness.run_retrieval_benchmark(cache, ("zm",), (4,), top_n=8, exclude_self=True)
    r = res["rows"][0]
    assert r["avg_retrieval_efficiency_pct"] == r["self_excluded_pct"]


def test_classification_rows(cache):
    res = harness.run_classification_benchmark(cache, "elm", 6, (2, 3, 4))
    assert [r["k_train"] for r in res["rows"]] == [2, 3, 4]
    assert res["config"]["select"] == "even"


def test_classification_error_names_context(cache):
    with pytest.raises(ValueError, match="k=9"):
        harness.run_classification_benchmark(cache, "elm", 4, (9,))


def test_timing(cache):
    res = harness.run_timing_benchmark(cache, ("mi", "elm"), order=5, repetitions=3, top_n=8)
    for r in res["rows"]:
        assert r["mean_query_s"] > 0 and r["std_query_s"] >= 0
        assert r["mean_extract_s"] <= r["mean_query_s"]
    with pytest.raises(ValueError):
        harness.run_timing_benchmark(cache, ("mi",), repetitions=1)


def test_report_files(tmp_path, cache):
    report = harness.new_report("synthetic", "turntable", {"seed": 0})
    report["sections"]["retrieval"] = harness.run_retrieval_benchmark(cache, ("mi", "zm"), (4, 5), top_n=8)
    report["sections"]["classification"] = [harness.run_classification_benchmark(cache, "zm", 4, (2, 3))]
    paths = harness.write_report(report, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["classification.csv", "classification_plot.csv", "report.json", "retrieval.csv",
                     "retrieval_plot.csv"]
    plot = list(csv.DictReader(io.StringIO((tmp_path / "retrieval_plot.csv").read_text())))
    assert [row["order"] for row in plot] == ["4", "5"] and set(plot[0]) == {"order", "mi", "zm"}
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"] == {"seed": 0}
    assert not list(tmp_path.glob("*.part"))


def test_report_all_or_nothing(tmp_path, monkeypatch, cache):
    report = harness.new_report("synthetic", "turntable", {})
    report["sections"]["retrieval"] = harness.run_retrieval_benchmark(cache, ("mi",), (4,), top_n=8)
    original = harness.Path.replace
    calls = []

    def flaky(self, target):
        calls.append(self)
        if len(calls) == 2:
            raise OSError("disk full")
        return original(self, target)

    monkeypatch.setattr(harness.Path, "replace", flaky)
    with pytest.raises(OSError):
        harness.write_report(report, tmp_path)
    assert list(tmp_path.iterdir()) == []
