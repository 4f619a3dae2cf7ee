"""Command-line interface: dataset generation, training, prediction,
application runs, and benchmarks. Exit codes: 0 success, 1 domain error,
2 usage error."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench, gbdt, linkpred, scf
from .errors import ScflinkError
from .features import FeatureVector, read_csv, write_csv
from .graph import load_edge_list


def _load_cluster(args) -> scf.ClusterSpec:
    if getattr(args, "cluster_auto", False):
        import psutil
        return scf.ClusterSpec(
            mm=max(1024, psutil.virtual_memory().total // 2**20),
            mc=os.cpu_count() or 1,
            wn=1,
            wmn=max(1024, psutil.virtual_memory().total // 2**20),
            wcn=os.cpu_count() or 1,
            manager=getattr(args, "manager", "standalone") or "standalone",
        )
    path = args.cluster_file
    if path is None:
        raise ScflinkError("a cluster file (--cluster-file) is required")
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return scf.ClusterSpec(
        mm=int(values["mm"]), mc=int(values["mc"]), wn=int(values["wn"]),
        wmn=int(values["wmn"]), wcn=int(values["wcn"]),
        manager=values.get("manager", "standalone"))


def _cmd_gen_data(args) -> int:
    records = scf.generate_training_dataset(args.n, seed=args.seed)
    write_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_train(args) -> int:
    records = read_csv(args.data)
    if args.baseline_dt:
        model, train_time = gbdt.timed_train(
            gbdt.train_decision_tree, records,
            {"max_depth": args.depth if args.depth else 20}, args.seed)
    else:
        params = {"learning_rate": args.lr, "max_depth": args.depth or 3,
                  "n_estimators": args.rounds}
        model, train_time = gbdt.timed_train(
            gbdt.train_gbdt, records, params, args.seed)
    report = gbdt.evaluate(model, records, training_time=train_time)
    if args.baseline_dt:
        import json
        doc = {"version": 1, "kind": "decision_tree",
               "n_classes": model.n_classes,
               "tree": gbdt._tree_to_dict(model.tree)}
        with open(args.out_model, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    else:
        gbdt.save_model(model, args.out_model)
    print(f"training_time_s={train_time:.3f}")
    print(f"train_accuracy={report.accuracy}")
    print(f"model={args.out_model}")
    return 0


def _features_from_args(args) -> FeatureVector:
    if args.collect:
        parts = args.collect.split(",")
        if len(parts) != 3:
            raise ScflinkError("--collect expects app,data,cluster-file")
        app_path, data_path, cluster_file = parts
        args.cluster_file = cluster_file
        cluster = _load_cluster(args)
        _, fv = scf.collect(app_path, data_path, cluster)
        return fv
    vals = args.features
    return FeatureVector(mm=float(vals[0]), mc=int(vals[1]), wn=int(vals[2]),
                         wmn=float(vals[3]), wcn=int(vals[4]), ds=float(vals[5]),
                         ac=int(vals[6]), mec=float(vals[7]))


def _cmd_predict(args) -> int:
    model = gbdt.load_model(args.model)
    fv = _features_from_args(args)
    proba = gbdt.predict_proba(model, fv)
    cls = gbdt.predict_class(model, fv)
    print(f"class={cls}")
    print(f"epn={cls + 1}")
    print("proba=" + ",".join(repr(float(p)) for p in proba))
    return 0


def _cmd_run(args) -> int:
    g = load_edge_list(args.input)
    cluster = _load_cluster(args)
    bounds = scf.load_bounds(args.bounds_file, cluster)
    if args.mode == "scf":
        if args.model is None:
            raise ScflinkError("--mode scf requires --model")
        model = gbdt.load_model(args.model)
        cfg = bench.scf_config(args.app, g, cluster, model, bounds)
    else:
        cfg = bench.default_config(cluster, bounds)
    if args.emit_props:
        for line in scf.update(cfg, cluster):
            print(line)
    output, metrics = bench.execute_app(args.app, g, cfg, seed=args.seed)
    if args.app == "gc":
        for v, c in enumerate(output):
            print(f"{int(g.external_ids[v])},{c}")
    elif args.app == "ocd":
        for v, membership in enumerate(output):
            labels = ";".join(f"{lab}:{w:.6f}" for lab, w in membership)
            print(f"{int(g.external_ids[v])},{labels}")
    else:
        for a, b, c in output:
            ids = sorted(int(g.external_ids[x]) for x in (a, b, c))
            print(f"{ids[0]},{ids[1]},{ids[2]}")
    print(f"# wall_ms={metrics.wall_time_ms:.1f} pdr={metrics.pdr} "
          f"util_rate={metrics.utilization_rate:.2f}", file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    scenario = bench.load_scenario(args.scenario_file)
    cluster = _load_cluster(args)
    bounds = scf.load_bounds(args.bounds_file, cluster)
    model = gbdt.load_model(args.model) if args.model else None
    if model is None and "scf" in scenario.modes:
        raise ScflinkError("scenario includes scf mode; --model is required")
    rows = bench.bench_compare(scenario, cluster, model, bounds,
                               seed=args.seed, sample_ms=args.sample_ms)
    bench.write_report_csv(rows, args.out_csv)
    print(f"wrote {len(rows)} rows to {args.out_csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scflink",
        description="Self-configured parallel link prediction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic training CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train", help="train the classifier from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--lr", type=float, default=0.3)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline-dt", action="store_true")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("predict", help="predict executors-per-node")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--features", nargs=8, metavar=("MM", "MC", "WN", "WMN",
                                                       "WCN", "DS", "AC", "MEC"))
    group.add_argument("--collect", metavar="APP,DATA,CLUSTER_FILE")
    p.add_argument("--cluster-file", default=None)
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("run", help="run an application on an edge list")
    p.add_argument("--app", choices=list(bench.APPS), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=["default", "scf"], default="default")
    p.add_argument("--model", default=None)
    p.add_argument("--cluster-file", default=None)
    p.add_argument("--cluster-auto", action="store_true")
    p.add_argument("--bounds-file", default=None)
    p.add_argument("--emit-props", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("bench", help="run a benchmark scenario")
    p.add_argument("--scenario-file", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--cluster-file", default=None)
    p.add_argument("--cluster-auto", action="store_true")
    p.add_argument("--bounds-file", default=None)
    p.add_argument("--sample-ms", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_bench)
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.fn(args)
    except (ScflinkError, ValueError, OSError, KeyError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())
