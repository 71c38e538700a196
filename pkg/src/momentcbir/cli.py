"""Command-line interface: ``momentcbir <subcommand> ...``.

Subcommands: extract, query, train-svm, classify, eval, db-info. Options can
also come from ``--config FILE`` (TOML or JSON, keys named like the long
options with dashes or underscores); explicit flags win over the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, _core
from .features import METHODS, extract
from .image_io import load_image, scan_coil20
from .retrieval import build_db, load_db, query, save_db

log = logging.getLogger("momentcbir")


class CliError(Exception):
    pass


def parse_int_list(text: str) -> list[int]:
    """``"4..9"`` -> [4, ..., 9]; ``"4,5,7"`` -> [4, 5, 7]; both forms may be mixed."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _methods(text: str) -> list[str]:
    ms = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in ms if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
    return ms


def _gamma(text: str):
    if text == "auto":
        return "auto"
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("gamma must be positive")
    return v


def _select(text: str) -> str:
    if text in ("even", "first") or (text.startswith("random:") and text[7:].lstrip("-").isdigit()):
        return text
    raise argparse.ArgumentTypeError("select must be even, first or random:<seed>")


def _add_common(p, *names):
    if "method" in names:
        p.add_argument("--method", choices=METHODS, default="elm", help="feature method (default elm; eval uses --methods unless this is set)")
    if "order" in names:
        p.add_argument("--order", type=int, default=9, help="moment order g (default 9; ignored for mi)")
    if "top_n" in names:
        p.add_argument("--top-n", type=int, default=72, help="number of images retrieved (default 72)")
    if "exclude_self" in names:
        p.add_argument("--exclude-self", action="store_true", help="drop the query from its own result list")
    if "svm" in names:
        p.add_argument("--k", type=parse_int_list, default=[7], help="training images per class, list or a..b")
        p.add_argument("--c", type=float, default=10.0, help="SVM regularization C (default 10)")
        p.add_argument("--gamma", type=_gamma, default="auto", help="RBF gamma or 'auto' = 1/dim")
        p.add_argument("--kernel", choices=("rbf", "linear"), default="rbf")
        p.add_argument("--select", type=_select, default="even", help="even | first | random:<seed>")
        p.add_argument("--eval-scope", choices=("all", "heldout"), default="all")
    if "jobs" in names:
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="extraction worker processes")
    if "format" in names:
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="momentcbir", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({_core.BACKEND} core)")
    ap.add_argument("--config", type=Path, help="TOML or JSON file with default option values")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract features for a COIL-20 style directory")
    p.add_argument("dataset", type=Path)
    p.add_argument("--out", type=Path, required=True, help="output feature database (.momf)")
    p.add_argument("--manifest", type=Path, help="also write the dataset manifest as JSON")
    p.add_argument("--strict", action="store_true", help="require exactly 20 classes x 72 views")
    _add_common(p, "method", "order", "jobs")

    p = sub.add_parser("query", help="rank database images by Canberra distance to a query image")
    p.add_argument("db", type=Path)
    p.add_argument("image", type=Path)
    p.add_argument("--method", choices=METHODS, help="expected database method (checked, not required)")
    p.add_argument("--order", type=int, help="expected database order (checked, not required)")
    _add_common(p, "top_n", "format")
    p.set_defaults(top_n=10)

    p = sub.add_parser("train-svm", help="train a one-vs-one SVM on a feature database")
    p.add_argument("db", type=Path)
    p.add_argument("--out", type=Path, required=True, help="model JSON path")
    _add_common(p, "svm")

    p = sub.add_parser("classify", help="classify images, or a whole database, with a trained model")
    p.add_argument("model", type=Path)
    p.add_argument("images", type=Path, nargs="*")
    p.add_argument("--db", type=Path, help="classify every record of this database and report efficiency")
    _add_common(p, "format")

    p = sub.add_parser("eval", help="run the retrieval / classification / timing experiments")
    p.add_argument("dataset", type=Path)
    p.add_argument("--suite", choices=("retrieval", "classify", "timing", "all"), default="all")
    p.add_argument("--methods", type=_methods, default=["mi", "zm", "elm"])
    p.add_argument("--orders", type=parse_int_list, default=[4, 5, 6, 7, 8, 9])
    p.add_argument("--out-dir", type=Path, default=Path("reports"))
    p.add_argument("--cache-dir", type=Path, help="persist feature databases here between runs")
    p.add_argument("--repetitions", type=int, default=20, help="timed queries per method")
    p.add_argument("--strict", action="store_true")
    _add_common(p, "method", "order", "top_n", "exclude_self", "svm", "jobs")
    p.set_defaults(method=None, k=[4, 5, 6, 7])

    p = sub.add_parser("db-info", help="describe a feature database")
    p.add_argument("db", type=Path)
    p.add_argument("--export-json", type=Path, help="write the database as JSON")
    _add_common(p, "format")
    return ap


def _load_config(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        data = tomllib.loads(text)
    return {k.replace("-", "_"): v for k, v in data.items()}


def _resolve(argv) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        # reparse so explicit flags override file values
        sub = ap._subparsers._group_actions[0].choices[args.command]
        converters = {a.dest: a.type for a in sub._actions if a.dest in cfg}
        defaults = {}
        for k, v in cfg.items():
            conv = converters.get(k)
            defaults[k] = conv(v) if conv and isinstance(v, str) else v
        sub.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


def _print_config(args) -> None:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    print("config: " + json.dumps(cfg, sort_keys=True, default=str), file=sys.stderr)


def cmd_extract(args) -> int:
    if args.method == "mi" and args.order not in (0, None):
        log.warning("mi features do not depend on the order; --order %d ignored", args.order)
    manifest = scan_coil20(args.dataset, strict=args.strict)
    images = manifest.load_images()
    db = build_db(images, args.method, args.order, jobs=max(1, args.jobs))
    save_db(db, args.out)
    if args.manifest:
        args.manifest.write_text(manifest.to_json(), encoding="utf-8")
    print(f"wrote {args.out}: {len(db)} records, method {db.method}, order {db.order}, dim {db.dim}")
    return 0


def cmd_query(args) -> int:
    db = load_db(args.db)
    if args.method and args.method != db.method:
        raise CliError(f"method mismatch: requested {args.method}, database {args.db} holds {db.method} features")
    if args.order is not None and db.method != "mi" and args.order != db.order:
        raise CliError(f"order mismatch: requested {args.order}, database {args.db} has order {db.order}")
    image = load_image(args.image)
    fv = extract(image, db.method, db.order)
    if fv.dim != db.dim:
        raise CliError(f"dimension mismatch: query {fv.method}/{fv.order} dim {fv.dim}, "
                       f"database {db.method}/{db.order} dim {db.dim}")
    res = query(db, fv, args.top_n)
    if args.format == "json":
        print(json.dumps([{"rank": r, "id": h.id, "class": h.class_label, "distance": h.distance}
                          for r, h in enumerate(res, 1)]))
    elif args.format == "csv":
        print("rank,id,class,distance")
        for r, h in enumerate(res, 1):
            print(f"{r},{h.id},{h.class_label},{h.distance:.17g}")
    else:
        for r, h in enumerate(res, 1):
            print(f"{r:4d}  {h.id:<24s} {h.class_label:4d}  {h.distance:.6f}")
    return 0


def cmd_train(args) -> int:
    from .svm import select_training, train

    db = load_db(args.db)
    if len(args.k) != 1:
        raise CliError("train-svm takes a single --k value")
    k = args.k[0]
    tr = select_training(db.labels, k, args.select)
    model = train(db.matrix[tr], db.labels[tr], kernel=args.kernel, c=args.c, gamma=args.gamma,
                  config={"k": k, "select": args.select, "method": db.method, "order": db.order,
                          "db": str(args.db), "db_checksum": db.describe()["checksum"]})
    tmp = args.out.with_name(args.out.name + ".part")
    tmp.write_text(model.to_json(), encoding="utf-8")
    tmp.replace(args.out)
    print(f"wrote {args.out}: {len(model.classes)} classes, {len(model.machines)} pairwise machines, "
          f"{tr.size} training images")
    return 0


def cmd_classify(args) -> int:
    from .svm import SvmModel, classify, predict

    model = SvmModel.from_json(args.model.read_text(encoding="utf-8"))
    method, order = model.config.get("method"), model.config.get("order")
    if args.db:
        db = load_db(args.db)
        if method and (db.method != method or (method != "mi" and db.order != order)):
            raise CliError(f"model was trained on {method}/{order} features, database holds {db.method}/{db.order}")
        pred = predict(model, db.matrix)
        eff = 100.0 * float(np.mean(pred == db.labels))
        if args.format == "json":
            print(json.dumps({"classification_efficiency_pct": eff, "n": len(db)}))
        else:
            print(f"classification efficiency: {eff:.2f}% over {len(db)} images")
        return 0
    if not args.images:
        raise CliError("give image paths or --db")
    if not method:
        raise CliError("model has no feature method recorded; classify a database with --db instead")
    rows = []
    for path in args.images:
        fv = extract(load_image(path), method, order)
        label, votes = classify(model, fv)
        rows.append({"image": str(path), "class": label, "votes": votes})
    if args.format == "json":
        print(json.dumps(rows))
    else:
        for r in rows:
            print(f"{r['image']}\t{r['class']}\tvotes={max(r['votes'].values())}")
    return 0


def cmd_eval(args) -> int:
    from . import harness

    if args.repetitions < 2:
        raise CliError("--repetitions must be at least 2")
    manifest = scan_coil20(args.dataset, strict=args.strict)
    images = manifest.load_images()
    cache = harness.FeatureCache(images, args.cache_dir, jobs=max(1, args.jobs))
    methods = [args.method] if args.method else args.methods
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    report = harness.new_report(str(args.dataset), manifest.variant, cfg)
    suites = ("retrieval", "classify", "timing") if args.suite == "all" else (args.suite,)
    if "retrieval" in suites:
        report["sections"]["retrieval"] = harness.run_retrieval_benchmark(
            cache, methods, args.orders, args.top_n, args.exclude_self)
    if "classify" in suites:
        report["sections"]["classification"] = [
            harness.run_classification_benchmark(cache, m, args.order, args.k, kernel=args.kernel, c=args.c,
                                                 gamma=args.gamma, select=args.select,
                                                 eval_scope=args.eval_scope)
            for m in methods
        ]
    if "timing" in suites:
        report["sections"]["timing"] = harness.run_timing_benchmark(cache, methods, args.order, args.repetitions,
                                                                    args.top_n)
    for p in harness.write_report(report, args.out_dir):
        print(f"wrote {p}")
    return 0


def cmd_db_info(args) -> int:
    db = load_db(args.db)
    info = db.describe()
    if args.export_json:
        args.export_json.write_text(db.to_json(), encoding="utf-8")
    if args.format == "json":
        print(json.dumps(info))
    else:
        for k, v in info.items():
            print(f"{k}: {v}")
    return 0


COMMANDS = {
    "extract": cmd_extract,
    "query": cmd_query,
    "train-svm": cmd_train,
    "classify": cmd_classify,
    "eval": cmd_eval,
    "db-info": cmd_db_info,
}


def main(argv=None) -> int:
    args = _resolve(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    _print_config(args)
    try:
        return COMMANDS[args.command](args)
    except (CliError, ValueError, OSError) as exc:
        print(f"momentcbir {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
