"""Command-line interface.

Subcommands: generate, fit, cluster, compare, stability, eval.  Runs are
configured by a JSON file (see README for the schema) whose keys mirror the
RunConfig fields; command-line flags override file values.  Every run writes a
manifest listing the resolved configuration and a sha256 hash of each output
file, so reruns can be checked for bit-identical results.

Exit codes: 0 success, 2 validation error, 3 fit failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
import scipy

from . import __version__
from .datasets import ALL_KINDS, DatasetSpec, generate, save_csv
from .errors import FitFailureError, IngestionError, NebClusterError, ValidationError
from .filtering import FilteredModel
from .graph import graph_to_dot, graph_to_json
from .hierarchy import (
    dendrogram_to_json,
    dendrogram_to_newick,
    labels_to_csv,
    threshold_curve_to_csv,
)
from .metrics import ari, overcluster_stability, seed_stability
from .mixture import model_to_dict
from .pipeline import (
    RunConfig,
    compare_strategies,
    load_points,
    prepare_components,
    run_pipeline,
    run_strategy,
)


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                config = RunConfig.from_dict(json.load(fh))
        except OSError as exc:
            raise IngestionError(f"cannot read config {args.config}: {exc}") from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad config {args.config}: {exc}") from exc
    else:
        config = RunConfig()
    overrides = {}
    if getattr(args, "input", None):
        overrides["input_path"] = args.input
        overrides["dataset"] = None
    if getattr(args, "dataset_kind", None):
        overrides["dataset"] = DatasetSpec(kind=args.dataset_kind)
        overrides["input_path"] = None
    for name in (
        "label_column",
        "family",
        "df",
        "n_components",
        "k_target",
        "knn",
        "output_dir",
        "jobs",
    ):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "seeds", None):
        overrides["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    strategy = config.strategy
    if getattr(args, "strategy", None):
        strategy = replace(strategy, kind=args.strategy)
    if getattr(args, "overcluster_backend", None):
        strategy = replace(strategy, overcluster_backend=args.overcluster_backend)
    if getattr(args, "one_shot", False):
        strategy = replace(strategy, recompute_centers=False)
    if strategy != config.strategy:
        overrides["strategy"] = strategy
    if overrides:
        config = replace(config, **overrides)
    return config.validate()


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write(path, content: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default)


def _manifest(config: RunConfig, outdir, files, extra=None) -> None:
    manifest = {
        "config": config.to_dict(),
        "versions": {
            "nebcluster": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "outputs": {f: _sha256(os.path.join(outdir, f)) for f in sorted(files)},
    }
    if extra:
        manifest.update(extra)
    _write(os.path.join(outdir, "manifest.json"), _json_dumps(manifest))


def _filtered_model_dict(filtered: FilteredModel) -> dict:
    return {"model": model_to_dict(filtered.model), **filtered.report()}


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    spec = DatasetSpec(
        kind=args.kind,
        n_points=args.n_points,
        dimension=args.dimension,
        n_classes=args.classes,
        seed=args.seed if args.seed is not None else 0,
        noise=args.noise,
        df=args.df if args.df is not None else 4.0,
    )
    ps = generate(spec)
    save_csv(ps, args.out)
    print(f"wrote {ps.n} points, d={ps.dim}, classes={len(set(ps.labels.tolist()))} -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    config = _load_config(args)
    ps = load_points(config)
    seed = config.seeds[0]
    t0 = time.perf_counter()
    model, filtered = prepare_components(config, ps, seed)
    elapsed = time.perf_counter() - t0
    outdir = config.output_dir
    _write(os.path.join(outdir, "model.json"), _json_dumps(_filtered_model_dict(filtered)))
    _write(os.path.join(outdir, "filter_report.json"), _json_dumps(filtered.report()))
    _manifest(
        config,
        outdir,
        ["model.json", "filter_report.json"],
        extra={"timings": {"fit": elapsed}, "filter_report": filtered.report()},
    )
    print(
        f"fit ok: {filtered.model.n_components}/{model.n_components} components survive, "
        f"loglik={model.fit_meta['final_loglik']:.3f} -> {outdir}"
    )
    return 0


def _cluster_one(task):
    config, seed, outdir = task
    files = {}

    def emit(name, content):
        _write(os.path.join(outdir, name), content)
        files[name] = None

    strategy = config.strategy
    if strategy.kind != "neb" or strategy.overcluster_backend != "mixture":
        # alternative merging strategies produce a flat clustering only
        t0 = time.perf_counter()
        clustering = run_strategy(config, seed)
        buf = io.StringIO()
        labels_to_csv(clustering.point_labels, buf)
        emit("labels.csv", buf.getvalue())
        return seed, sorted(files), {"total": time.perf_counter() - t0}, [], None

    result = run_pipeline(config, seed=seed)
    emit("model.json", _json_dumps(_filtered_model_dict(result.filtered)))
    emit("filter_report.json", _json_dumps(result.filtered.report()))
    emit("graph.json", graph_to_json(result.graph))
    emit("graph.dot", graph_to_dot(result.graph))
    emit("dendrogram.json", dendrogram_to_json(result.dendrogram))
    emit("dendrogram.nwk", dendrogram_to_newick(result.dendrogram) + "\n")
    buf = io.StringIO()
    threshold_curve_to_csv(result.curve, buf)
    emit("thresholds.csv", buf.getvalue())
    if result.clustering is not None:
        buf = io.StringIO()
        labels_to_csv(result.clustering.point_labels, buf)
        emit("labels.csv", buf.getvalue())
    return seed, sorted(files), result.timings, result.warnings, result.filtered.report()


def cmd_cluster(args) -> int:
    config = _load_config(args)
    outdir = config.output_dir
    multi = len(config.seeds) > 1
    tasks = [
        (config, seed, os.path.join(outdir, f"seed_{seed}") if multi else outdir)
        for seed in config.seeds
    ]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_cluster_one, tasks))
    else:
        results = [_cluster_one(t) for t in tasks]
    all_files = []
    runs = {}
    for (seed, files, timings, warnings, filter_report), (_, _, subdir) in zip(results, tasks):
        rel = os.path.relpath(subdir, outdir)
        prefix = "" if rel == "." else rel + "/"
        all_files.extend(prefix + f for f in files)
        runs[str(seed)] = {
            "timings": timings,
            "warnings": warnings,
            "filter_report": filter_report,
        }
        for w in warnings:
            print(f"warning (seed {seed}): {w}", file=sys.stderr)
    _manifest(config, outdir, all_files, extra={"runs": runs})
    print(f"clustered {len(tasks)} run(s) -> {outdir}")
    return 0


def cmd_compare(args) -> int:
    config = _load_config(args)
    report = compare_strategies(config, jobs=config.jobs)
    outdir = config.output_dir
    _write(os.path.join(outdir, "compare.json"), _json_dumps(report))
    names = list(report["table"])
    lines = ["strategy,mean_ari,std_ari,n_runs,failures"]
    for name in names:
        row = report["table"][name]
        mean = "" if row["mean"] is None else repr(row["mean"])
        lines.append(f"{name},{mean},{repr(row['std'])},{len(row['aris'])},{row['failures']}")
    _write(os.path.join(outdir, "compare.csv"), "\n".join(lines) + "\n")

    dataset = config.dataset.kind if config.dataset else os.path.basename(config.input_path)
    dim = config.dataset.resolved().dimension if config.dataset else ""
    cells = []
    for name in names:
        row = report["table"][name]
        cells.append("" if row["mean"] is None else f"{row['mean']:.2f} ± {row['std']:.2f}")
    wide = "dataset,dim," + ",".join(names) + "\n" + f"{dataset},{dim}," + ",".join(cells) + "\n"
    _write(os.path.join(outdir, "compare_table.csv"), wide)
    _manifest(config, outdir, ["compare.json", "compare.csv", "compare_table.csv"])
    for name in names:
        row = report["table"][name]
        if row["mean"] is not None:
            print(f"{name}: {row['mean']:.3f} ± {row['std']:.3f}")
    return 0


def cmd_stability(args) -> int:
    config = _load_config(args)
    if args.mode == "seeds":
        report = seed_stability(config, list(config.seeds), jobs=config.jobs)
    else:
        sweep = None
        if args.components:
            sweep = [int(v) for v in args.components.split(",")]
        report = overcluster_stability(config, sweep, jobs=config.jobs)
    outdir = config.output_dir
    _write(os.path.join(outdir, "stability.json"), _json_dumps(report.to_dict()))
    n = report.pairwise_ari.shape[0]
    lines = [",".join(str(i) for i in range(n))]
    for i in range(n):
        lines.append(",".join(repr(float(v)) for v in report.pairwise_ari[i]))
    _write(os.path.join(outdir, "stability_matrix.csv"), "\n".join(lines) + "\n")
    summary = report.summary()
    dataset = config.dataset.kind if config.dataset else os.path.basename(config.input_path)
    dim = config.dataset.resolved().dimension if config.dataset else ""
    _write(
        os.path.join(outdir, "stability_summary.csv"),
        "dataset,dim,mode,n_runs,mean,min,std\n"
        + f"{dataset},{dim},{args.mode},{summary['n_runs']},"
        + f"{summary['mean']},{summary['min']},{summary['std']}\n",
    )
    _manifest(
        config,
        outdir,
        ["stability.json", "stability_matrix.csv", "stability_summary.csv"],
        extra={"summary": summary, "warnings": report.warnings},
    )
    print(f"stability ({args.mode}): {summary}")
    return 0


def _read_label_file(path, column):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if column is None:
        for candidate in ("cluster", "label"):
            if candidate in header:
                column = candidate
                break
        else:
            raise ValidationError(f"{path}: no cluster/label column; pass --column")
    if column not in header:
        raise ValidationError(f"{path}: no column {column!r}")
    idx = header.index(column)
    data = np.loadtxt(path, delimiter=",", skiprows=1, usecols=idx, ndmin=1)
    return data.astype(np.int64)


def cmd_eval(args) -> int:
    truth = _read_label_file(args.truth, args.truth_column)
    pred = _read_label_file(args.pred, args.pred_column)
    value = ari(truth, pred)
    print(f"ari {value!r}")
    if args.out:
        _write(args.out, _json_dumps({"ari": value, "n": int(truth.size)}))
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file (keys mirror RunConfig)")
    p.add_argument("--input", help="input CSV instead of a dataset spec")
    p.add_argument("--dataset-kind", choices=ALL_KINDS, dest="dataset_kind")
    p.add_argument("--label-column", dest="label_column")
    p.add_argument("--family", choices=["gaussian", "student_t"])
    p.add_argument("--df", type=float)
    p.add_argument("--n-components", type=int, dest="n_components")
    p.add_argument("--k-target", type=int, dest="k_target")
    p.add_argument("--knn", type=int)
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--jobs", type=int)
    p.add_argument("--strategy", choices=["neb", "oracle", "euclidean", "dip"])
    p.add_argument(
        "--overcluster-backend", choices=["mixture", "kmeans"], dest="overcluster_backend"
    )
    p.add_argument(
        "--one-shot",
        action="store_true",
        dest="one_shot",
        help="rank all pairs once instead of recomputing centers after merges",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nebcluster",
        description="Hierarchical clustering via mixture overclustering and "
        "maximum-density-path merging.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("--kind", required=True, choices=ALL_KINDS)
    p.add_argument("--n-points", type=int, dest="n_points")
    p.add_argument("--dimension", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--df", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit and filter a mixture model")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cluster", help="full pipeline: fit, graph, dendrogram, cuts")
    _add_config_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("compare", help="compare merging strategies over seeds")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("stability", help="pairwise-ARI stability protocols")
    _add_config_flags(p)
    p.add_argument("--mode", choices=["seeds", "components"], default="seeds")
    p.add_argument("--components", help="comma-separated component counts")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("eval", help="ARI between two label CSVs")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--truth-column", dest="truth_column")
    p.add_argument("--pred-column", dest="pred_column")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FitFailureError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        for diag in exc.diagnostics:
            print(f"  attempt {diag['attempt']}: {diag['reason']}", file=sys.stderr)
        return 3
    except (IngestionError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except NebClusterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
