"""Command-line entry point for the full pipeline.

One subcommand per stage: synth, heterophily, train, score, eval,
reproduce. Every run writes a manifest (resolved config, input hashes,
output paths, versions, backend, wall-clock) atomically into the output
directory. Exit codes: 0 success, 2 user/validation error, 3 numerical
failure.
"""
import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

import huge
from huge import datagen, heterophily, metrics, trainer
from huge.encoder import load_checkpoint, save_checkpoint
from huge.graph import _has_header, load_graph, save_graph
from huge.heterophily import METRIC_IDS, check_properties, node_heterophily
from huge.kernels import BACKEND
from huge.numerics import NumericalError
from huge.trainer import TrainConfig


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write_json(path, obj):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _out_dir(args):
    out = args.out_dir or os.environ.get("HUGE_OUT_DIR") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _versions():
    vers = {
        "huge": huge.__version__,
        "numpy": np.__version__,
        "python": sys.version.split()[0],
    }
    try:
        import numba

        vers["numba"] = numba.__version__
    except ImportError:
        vers["numba"] = None
    return vers


def _write_manifest(out, subcommand, args, inputs, outputs, config, t0):
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": sorted(outputs),
        "versions": _versions(),
        "backend": BACKEND,
        "threads": args.threads,
        "wall_clock_s": time.perf_counter() - t0,
    }
    path = os.path.join(out, f"{subcommand}_manifest.json")
    _atomic_write_json(path, manifest)
    return path


def _load_graph_from_args(args, need_labels=False):
    if need_labels and not args.labels:
        raise ValueError("this subcommand needs --labels")
    return load_graph(args.edges, args.attrs, labels_path=args.labels)


def _resolve_train_config(args):
    base = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    overrides = {
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "alpha": args.alpha,
        "lr": args.lr,
        "seed": args.seed,
        "eps_halo": args.eps_halo,
        "d_e": args.d_e,
        "metric_id": args.metric,
    }
    for key, val in overrides.items():
        if val is not None:
            base[key] = val
    if args.no_gnn:
        base["use_gnn"] = False
    return TrainConfig.from_dict(base)


def _write_scores_csv(path, node_ids, values, value_name="score"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"node_id,{value_name}\n")
        for gid, v in zip(node_ids, values):
            fh.write(f"{int(gid)},{repr(float(v))}\n")


def cmd_synth(args):
    t0 = time.perf_counter()
    out = _out_dir(args)
    spec_kwargs = {}
    inputs = []
    if args.spec:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec_kwargs = json.load(fh)
        inputs.append(args.spec)
    if args.n is not None:
        spec_kwargs["n"] = args.n
    if args.seed is not None:
        spec_kwargs["seed"] = args.seed
    spec = datagen.SynthSpec(**spec_kwargs)
    g = datagen.generate(spec)
    paths = {
        "edges": os.path.join(out, "edges.csv"),
        "attrs": os.path.join(out, "attrs.csv"),
        "labels": os.path.join(out, "labels.csv"),
        "spec": os.path.join(out, "spec.json"),
    }
    save_graph(g, paths["edges"], paths["attrs"], labels_path=paths["labels"])
    _atomic_write_json(paths["spec"], spec.as_dict())
    outputs = list(paths.values())
    outputs.append(_write_manifest(out, "synth", args, inputs, outputs, spec.as_dict(), t0))
    print(f"wrote {g.n} nodes / {g.num_edges} edges to {out}")
    return 0


def cmd_heterophily(args):
    t0 = time.perf_counter()
    out = _out_dir(args)
    g = _load_graph_from_args(args)
    field = node_heterophily(g, args.metric, args.eps)
    csv_path = os.path.join(out, "node_heterophily.csv")
    _write_scores_csv(csv_path, g.node_ids, field.node_values, value_name="heterophily")
    outputs = [csv_path]
    config = {"metric_id": args.metric, "eps": args.eps}
    if args.check_properties:
        report = check_properties(args.metric, trials=args.trials, seed=args.seed or 0)
        rep_path = os.path.join(out, "property_report.json")
        _atomic_write_json(rep_path, report.as_dict())
        outputs.append(rep_path)
        config["property_trials"] = args.trials
    inputs = [args.edges, args.attrs] + ([args.labels] if args.labels else [])
    outputs.append(_write_manifest(out, "heterophily", args, inputs, outputs, config, t0))
    print(f"wrote {csv_path} ({args.metric}, backend {BACKEND})")
    return 0


def cmd_train(args):
    t0 = time.perf_counter()
    out = _out_dir(args)
    cfg = _resolve_train_config(args)
    g = _load_graph_from_args(args)
    params, tlog = trainer.train(g, cfg)
    ckpt_path = os.path.join(out, "checkpoint.json")
    meta = {"seed": cfg.seed, "config_hash": cfg.config_hash(), "config": cfg.as_dict()}
    save_checkpoint(ckpt_path, params, meta=meta)
    tlog.checkpoint_path = ckpt_path
    log_path = os.path.join(out, "train_log.jsonl")
    tlog.write_jsonl(log_path)
    inputs = [args.edges, args.attrs] + ([args.labels] if args.labels else [])
    if args.config:
        inputs.append(args.config)
    outputs = [ckpt_path, log_path]
    outputs.append(_write_manifest(out, "train", args, inputs, outputs, cfg.as_dict(), t0))
    final = tlog.epochs[-1].mean_total
    print(f"trained {cfg.epochs} epochs (final mean loss {final:.6f}); wrote {ckpt_path}")
    return 0


def cmd_score(args):
    t0 = time.perf_counter()
    out = _out_dir(args)
    params, meta = load_checkpoint(args.checkpoint)
    g = _load_graph_from_args(args)
    scores = trainer.infer(params, g)
    csv_path = os.path.join(out, "scores.csv")
    _write_scores_csv(csv_path, g.node_ids, scores)
    inputs = [args.checkpoint, args.edges, args.attrs] + ([args.labels] if args.labels else [])
    outputs = [csv_path]
    outputs.append(
        _write_manifest(out, "score", args, inputs, outputs, meta.get("config", {}), t0)
    )
    print(f"wrote {csv_path}")
    return 0


def _read_column_csv(path, col):
    data = np.loadtxt(
        path,
        delimiter=",",
        dtype=np.float64,
        ndmin=2,
        skiprows=1 if _has_header(path) else 0,
    )
    if data.shape[1] <= col:
        raise ValueError(f"{path}: expected at least {col + 1} columns")
    return data[:, col]


def cmd_eval(args):
    t0 = time.perf_counter()
    out = _out_dir(args)
    scores_tbl = np.loadtxt(
        args.scores,
        delimiter=",",
        dtype=np.float64,
        ndmin=2,
        skiprows=1 if _has_header(args.scores) else 0,
    )
    scores = scores_tbl[:, 1] if scores_tbl.shape[1] >= 2 else scores_tbl[:, 0]
    labels = _read_column_csv(args.labels, 0).astype(np.int64)
    a, p = metrics.evaluate(scores, labels)
    result = {"auroc": a, "auprc": p, "n": int(labels.size), "n_pos": int(labels.sum())}
    json_path = os.path.join(out, "metrics.json")
    _atomic_write_json(json_path, result)
    outputs = [json_path]
    outputs.append(_write_manifest(out, "eval", args, [args.scores, args.labels], outputs, {}, t0))
    print(json.dumps(result, sort_keys=True))
    return 0


def _write_result_rows(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dataset,variant,seed,auroc,auprc\n")
        for dataset, variant, seed, a, p in rows:
            fh.write(f"{dataset},{variant},{int(seed)},{repr(float(a))},{repr(float(p))}\n")


def cmd_reproduce(args):
    t0 = time.perf_counter()
    out = _out_dir(args)
    seeds = metrics.DESK_SEEDS if args.seed is None else tuple(range(args.seed, args.seed + 5))
    outputs = []
    if args.suite == "desk":
        res = metrics.desk_run(seeds)
        report_path = os.path.join(out, "desk_report.json")
        _atomic_write_json(report_path, res.as_dict())
        rows_path = os.path.join(out, "desk_results.csv")
        _write_result_rows(rows_path, res.rows)
        outputs += [report_path, rows_path]
        summary = (
            f"huge mean auroc {res.auroc_mean:.4f} vs heterophily-only baseline "
            f"{res.baseline_mean:.4f} over seeds {list(seeds)}"
        )
    else:
        reports = metrics.ablation_run(seeds)
        report_path = os.path.join(out, "ablation_report.json")
        _atomic_write_json(report_path, {k: r.as_dict() for k, r in reports.items()})
        rows = [row for r in reports.values() for row in r.csv_rows("synthetic")]
        rows_path = os.path.join(out, "ablation_results.csv")
        _write_result_rows(rows_path, rows)
        outputs += [report_path, rows_path]
        summary = ", ".join(f"{k}={r.auroc_mean:.4f}" for k, r in reports.items())
    config = {"suite": args.suite, "seeds": list(seeds)}
    outputs.append(_write_manifest(out, "reproduce", args, [], outputs, config, t0))
    print(summary)
    return 0


def _add_common(p, graph_flags=True):
    if graph_flags:
        p.add_argument("--edges", required=True, help="edge list CSV (src,dst)")
        p.add_argument("--attrs", required=True, help="node attribute CSV, one row per node")
        p.add_argument("--labels", default=None, help="0/1 label CSV, one row per node")
    p.add_argument("--out-dir", default=None, help="output directory (default: $HUGE_OUT_DIR or .)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1, help="recorded in the manifest; kernels are single-threaded for determinism")


def _build_parser():
    ap = argparse.ArgumentParser(prog="huge", description="heterophily-guided unsupervised graph fraud detection")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="generate a planted-fraud graph")
    p.add_argument("--spec", default=None, help="JSON file of generator parameters")
    p.add_argument("--n", type=int, default=None, help="override node count")
    _add_common(p, graph_flags=False)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("heterophily", help="per-node heterophily scores")
    p.add_argument("--metric", choices=METRIC_IDS, default="halo")
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("--check-properties", action="store_true", help="also run the metric property suite")
    p.add_argument("--trials", type=int, default=2000, help="property-suite sample count")
    _add_common(p)
    p.set_defaults(func=cmd_heterophily)

    p = sub.add_parser("train", help="train the encoder")
    p.add_argument("--config", default=None, help="JSON config file (flags override)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--eps-halo", type=float, default=None)
    p.add_argument("--d-e", type=int, default=None)
    p.add_argument("--metric", choices=METRIC_IDS, default=None)
    p.add_argument("--no-gnn", action="store_true", help="drop the GNN branch (ablation)")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score nodes with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="AUROC/AUPRC of a score file")
    p.add_argument("--scores", required=True, help="CSV from the score subcommand")
    p.add_argument("--labels", required=True, help="0/1 label CSV")
    _add_common(p, graph_flags=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce", help="run a frozen evaluation suite")
    p.add_argument("--suite", choices=("desk", "ablation"), required=True)
    _add_common(p, graph_flags=False)
    p.set_defaults(func=cmd_reproduce)
    return ap


def _cap_threads(n):
    """Cap numba's worker pool. The shipped kernels are single-threaded, so
    this only constrains any parallel code layered on top; scores never
    depend on it. Left untouched at the default to avoid waking the
    threading layer for nothing."""
    if n == 1:
        return
    try:
        import numba
    except ImportError:
        return
    limit = getattr(numba.config, "NUMBA_NUM_THREADS", 1)
    numba.set_num_threads(max(1, min(n, limit)))


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    _cap_threads(args.threads)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
