"""Evaluation harness: retrieval efficiency per order, SVM classification
efficiency per training-set size, and per-query timing.

Reports are plain dicts (JSON-serializable) with the configuration that
produced them embedded; :func:`write_report` emits the JSON and CSV files.
"""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import logging
import platform
import statistics
import time
from pathlib import Path

import numpy as np

from . import _core
from .features import extract
from .retrieval import FeatureDatabase, build_db, load_db, query, retrieval_efficiency, save_db
from .svm import DEFAULT_C, evaluate

log = logging.getLogger(__name__)

DEFAULT_ORDERS = (4, 5, 6, 7, 8, 9)
DEFAULT_K = (4, 5, 6, 7)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class FeatureCache:
    """Feature databases keyed by (method, order), optionally persisted in ``directory``."""

    def __init__(self, images, directory=None, jobs: int = 1):
        self.images = list(images)
        self.directory = Path(directory) if directory else None
        self.jobs = jobs
        self._dbs: dict[tuple[str, int], FeatureDatabase] = {}

    def get(self, method: str, order: int) -> FeatureDatabase:
        if method == "mi":
            order = 0
        key = (method, order)
        if key in self._dbs:
            return self._dbs[key]
        path = self.directory / f"{method}_{order}.momf" if self.directory else None
        db = None
        if path is not None and path.exists():
            db = load_db(path)
            if db.ids != [im.id for im in self.images]:
                log.info("cached %s does not match the dataset; rebuilding", path)
                db = None
        if db is None:
            db = build_db(self.images, method, order, jobs=self.jobs)
            if path is not None:
                self.directory.mkdir(parents=True, exist_ok=True)
                save_db(db, path)
        self._dbs[key] = db
        return db


def run_retrieval_benchmark(cache: FeatureCache, methods=("mi", "zm", "elm"), orders=DEFAULT_ORDERS,
                            top_n: int = 72, exclude_self: bool = False) -> dict:
    """Average retrieval efficiency for every (method, order).

    Hu invariants do not depend on the order: they are computed once and the
    same value is reported in every order column. Both self-match conventions
    are computed; ``avg_retrieval_efficiency_pct`` follows ``exclude_self``.
    """
    rows = []
    for method in methods:
        computed = {}
        for order in orders:
            key = 0 if method == "mi" else order
            if key not in computed:
                db = cache.get(method, order)
                D = _core.canberra_pairwise(db.matrix)
                incl = retrieval_efficiency(db, top_n, exclude_self=False, distances=D)
                excl = retrieval_efficiency(db, top_n, exclude_self=True, distances=D)
                computed[key] = (db, incl, excl)
            db, incl, excl = computed[key]
            main = excl if exclude_self else incl
            rows.append(
                {
                    "method": method,
                    "order": order,
                    "dim": db.dim,
                    "avg_retrieval_efficiency_pct": main.average,
                    "per_query_efficiency_pct": main.per_query_average,
                    "self_included_pct": incl.average,
                    "self_excluded_pct": excl.average,
                    "per_class_pct": main.per_class,
                    "db_checksum": db.describe()["checksum"],
                }
            )
    return {
        "config": {"methods": list(methods), "orders": list(orders), "top_n": top_n,
                   "exclude_self": exclude_self},
        "rows": rows,
    }


def run_classification_benchmark(cache: FeatureCache, method: str, order: int, k_values=DEFAULT_K,
                                 kernel: str = "rbf", c: float = DEFAULT_C, gamma="auto",
                                 select: str = "even", eval_scope: str = "all") -> dict:
    db = cache.get(method, order)
    rows = []
    for k in k_values:
        try:
            res = evaluate(db, k, kernel=kernel, c=c, gamma=gamma, select=select, eval_scope=eval_scope)
        except ValueError as exc:
            raise type(exc)(f"{method} order {order}, k={k}: {exc}") from exc
        row = {"method": method, "order": db.order, **res.to_dict(), "db_checksum": db.describe()["checksum"]}
        row["gamma"] = res.model.gamma
        rows.append(row)
    return {
        "config": {"method": method, "order": order, "k_values": list(k_values), "kernel": kernel, "c": c,
                   "gamma": gamma, "select": select, "eval_scope": eval_scope,
                   "standardization": "z-score from training images"},
        "rows": rows,
    }


def _time_queries(images, db: FeatureDatabase, method: str, order: int, repetitions: int, top_n: int):
    picks = np.linspace(0, len(images) - 1, repetitions).round().astype(int)
    full, ext, scan = [], [], []
    query(db, extract(images[0], method, order), top_n)  # warm the basis/kernel caches
    for k in picks:
        t0 = time.perf_counter()
        fv = extract(images[k], method, order)
        t1 = time.perf_counter()
        query(db, fv, top_n)
        t2 = time.perf_counter()
        full.append(t2 - t0)
        ext.append(t1 - t0)
        scan.append(t2 - t1)
    return full, ext, scan


def run_timing_benchmark(cache: FeatureCache, methods=("mi", "zm", "elm"), order: int = 9,
                         repetitions: int = 20, top_n: int = 72) -> dict:
    """Wall-clock time of the full query path (extract + scan + sort), per method."""
    if repetitions < 2:
        raise ValueError("need at least 2 repetitions for a standard deviation")
    rows = []
    for method in methods:
        db = cache.get(method, order)
        full, ext, scan = _time_queries(cache.images, db, method, order, repetitions, top_n)
        rows.append(
            {
                "method": method,
                "order": db.order,
                "repetitions": repetitions,
                "mean_query_s": statistics.fmean(full),
                "std_query_s": statistics.stdev(full),
                "mean_extract_s": statistics.fmean(ext),
                "mean_scan_s": statistics.fmean(scan),
            }
        )
    return {
        "config": {"methods": list(methods), "order": order, "repetitions": repetitions, "top_n": top_n,
                   "backend": _core.BACKEND, "machine": platform.machine(), "python": platform.python_version()},
        "rows": rows,
    }


def new_report(dataset: str, variant: str, config: dict) -> dict:
    return {
        "created": _now(),
        "dataset": {"path": dataset, "variant": variant},
        "config": config,
        "sections": {},
    }


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r[c] for c in columns])
    return buf.getvalue()


def render_files(report: dict) -> dict[str, str]:
    """File name -> content for every artifact of a report."""
    files = {"report.json": json.dumps(report, indent=2, default=float)}
    sec = report["sections"]
    if "retrieval" in sec:
        rows = sec["retrieval"]["rows"]
        files["retrieval.csv"] = _csv(rows, ["method", "order", "avg_retrieval_efficiency_pct"])
        orders = sorted({r["order"] for r in rows})
        methods = list(dict.fromkeys(r["method"] for r in rows))
        lut = {(r["method"], r["order"]): r["avg_retrieval_efficiency_pct"] for r in rows}
        wide = [{"order": o, **{m: lut.get((m, o), "") for m in methods}} for o in orders]
        files["retrieval_plot.csv"] = _csv(wide, ["order", *methods])
    if "classification" in sec:
        rows = [r for part in sec["classification"] for r in part["rows"]]
        files["classification.csv"] = _csv(rows, ["method", "k_train", "classification_efficiency_pct"])
        ks = sorted({r["k_train"] for r in rows})
        methods = list(dict.fromkeys(r["method"] for r in rows))
        lut = {(r["method"], r["k_train"]): r["classification_efficiency_pct"] for r in rows}
        wide = [{"k_train": k, **{m: lut.get((m, k), "") for m in methods}} for k in ks]
        files["classification_plot.csv"] = _csv(wide, ["k_train", *methods])
    if "timing" in sec:
        files["timing.csv"] = _csv(
            sec["timing"]["rows"],
            ["method", "order", "repetitions", "mean_query_s", "std_query_s", "mean_extract_s", "mean_scan_s"],
        )
    return files


def write_report(report: dict, out_dir) -> list[Path]:
    """Write all report files, or none: a failure removes whatever was written."""
    out_dir = Path(out_dir)
    files = render_files(report)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, text in files.items():
            tmp = out_dir / (name + ".part")
            tmp.write_text(text, encoding="utf-8")
            written.append(tmp)
        final = []
        for tmp in written:
            dest = tmp.with_name(tmp.name[: -len(".part")])
            tmp.replace(dest)
            final.append(dest)
        return final
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
            p.with_name(p.name[: -len(".part")]).unlink(missing_ok=True)
        raise
