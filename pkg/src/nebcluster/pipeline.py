"""End-to-end orchestration: data -> mixture -> filter -> graph -> hierarchy.

The RunConfig captures everything a run needs, is JSON-serializable, and is
what the CLI, the stability protocols and the strategy-comparison harness all
share. Mixture seeds vary per run; the dataset seed lives in the DatasetSpec
so sweeps see identical data.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import strategies as strat
from .datasets import DatasetSpec, PointSet, generate, load_csv
from .errors import FitFailureError, ValidationError
from .filtering import FilterConfig, FilteredModel, filter_components
from .graph import ClusterGraph, build_graph
from .hierarchy import Clustering, Dendrogram, ThresholdCurve, build_dendrogram, cut, threshold_curve
from .mixture import GAUSSIAN, STUDENT_T, FitConfig, MixtureModel, fit, hard_assign, kmeans
from .neb import NebConfig
from .strategies import MergeStrategy

DEFAULT_COMPONENTS = 25
DEFAULT_COMPONENTS_2D = 15


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec | None = None
    input_path: str | None = None
    label_column: str = "label"
    family: str = STUDENT_T
    df: float = 1.0
    n_components: int | None = None
    max_em_steps: int = 1000
    tolerance: float = 1e-5
    ridge: float = 1e-4
    ridge_on_gaussian: bool = True
    retry_schedule: tuple[tuple[float, int], ...] = ((1e-3, 100000),)
    filter: FilterConfig = FilterConfig()
    neb: NebConfig = NebConfig()
    knn: int = 10
    k_target: int | None = None
    strategy: MergeStrategy = MergeStrategy()
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "out"
    jobs: int = 1

    def validate(self) -> "RunConfig":
        if (self.dataset is None) == (self.input_path is None):
            raise ValidationError("configure exactly one of dataset spec or input_path")
        if self.family not in (GAUSSIAN, STUDENT_T):
            raise ValidationError(f"unknown family {self.family!r}")
        if not self.seeds:
            raise ValidationError("need at least one seed")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")
        self.strategy.validate()
        self.filter.validate()
        self.neb.validate()
        return self

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset.to_dict() if self.dataset else None,
            "input_path": self.input_path,
            "label_column": self.label_column,
            "family": self.family,
            "df": self.df,
            "n_components": self.n_components,
            "fit": {
                "max_em_steps": self.max_em_steps,
                "tolerance": self.tolerance,
                "ridge": self.ridge,
                "ridge_on_gaussian": self.ridge_on_gaussian,
                "retry_schedule": [list(x) for x in self.retry_schedule],
            },
            "filter": {
                "min_points": self.filter.min_points,
                "elongation_factor": self.filter.elongation_factor,
            },
            "neb": {
                "n_path_points": self.neb.n_path_points,
                "n_steps": self.neb.n_steps,
                "step_size": self.neb.step_size,
                "step_size_scale": self.neb.step_size_scale,
                "beta1": self.neb.beta1,
                "beta2": self.neb.beta2,
                "epsilon": self.neb.epsilon,
                "keep_best": self.neb.keep_best,
            },
            "knn": self.knn,
            "k_target": self.k_target,
            "strategy": {
                "kind": self.strategy.kind,
                "recompute_centers": self.strategy.recompute_centers,
                "overcluster_backend": self.strategy.overcluster_backend,
            },
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "jobs": self.jobs,
        }

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        data = dict(data)
        fit_cfg = data.pop("fit", {}) or {}
        filt = data.pop("filter", {}) or {}
        neb_cfg = data.pop("neb", {}) or {}
        strategy = data.pop("strategy", {}) or {}
        dataset = data.pop("dataset", None)
        kwargs = dict(
            dataset=DatasetSpec.from_dict(dataset) if dataset else None,
            input_path=data.pop("input_path", None),
            label_column=data.pop("label_column", "label"),
            family=data.pop("family", STUDENT_T),
            df=float(data.pop("df", 1.0)),
            n_components=data.pop("n_components", None),
            max_em_steps=int(fit_cfg.get("max_em_steps", 1000)),
            tolerance=float(fit_cfg.get("tolerance", 1e-5)),
            ridge=float(fit_cfg.get("ridge", 1e-4)),
            ridge_on_gaussian=bool(fit_cfg.get("ridge_on_gaussian", True)),
            retry_schedule=tuple(
                (float(t), int(s)) for t, s in fit_cfg.get("retry_schedule", [[1e-3, 100000]])
            ),
            filter=FilterConfig(
                min_points=int(filt.get("min_points", 10)),
                elongation_factor=float(filt.get("elongation_factor", 500.0)),
            ),
            neb=NebConfig(
                n_path_points=int(neb_cfg.get("n_path_points", 1024)),
                n_steps=int(neb_cfg.get("n_steps", 100)),
                step_size=neb_cfg.get("step_size"),
                step_size_scale=float(neb_cfg.get("step_size_scale", 0.01)),
                beta1=float(neb_cfg.get("beta1", 0.9)),
                beta2=float(neb_cfg.get("beta2", 0.999)),
                epsilon=float(neb_cfg.get("epsilon", 1e-8)),
                keep_best=bool(neb_cfg.get("keep_best", True)),
            ),
            knn=int(data.pop("knn", 10)),
            k_target=data.pop("k_target", None),
            strategy=MergeStrategy(
                kind=strategy.get("kind", "neb"),
                recompute_centers=bool(strategy.get("recompute_centers", True)),
                overcluster_backend=strategy.get("overcluster_backend", "mixture"),
            ),
            seeds=tuple(int(s) for s in data.pop("seeds", [0])),
            output_dir=data.pop("output_dir", "out"),
            jobs=int(data.pop("jobs", 1)),
        )
        if kwargs["k_target"] is not None:
            kwargs["k_target"] = int(kwargs["k_target"])
        if kwargs["n_components"] is not None:
            kwargs["n_components"] = int(kwargs["n_components"])
        return RunConfig(**kwargs)


@dataclass
class PipelineResult:
    pointset: PointSet
    model: MixtureModel
    filtered: FilteredModel
    graph: ClusterGraph
    dendrogram: Dendrogram
    curve: ThresholdCurve
    clustering: Clustering | None
    timings: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def load_points(config: RunConfig) -> PointSet:
    if config.dataset is not None:
        return generate(config.dataset)
    return load_csv(config.input_path, label_column=config.label_column)


def resolve_n_components(config: RunConfig, dim: int) -> int:
    if config.n_components is not None:
        return config.n_components
    return DEFAULT_COMPONENTS_2D if dim == 2 else DEFAULT_COMPONENTS


def fit_config(config: RunConfig, dim: int, seed: int, n_components=None) -> FitConfig:
    return FitConfig(
        n_components=n_components or resolve_n_components(config, dim),
        family=config.family,
        df=config.df,
        max_em_steps=config.max_em_steps,
        tolerance=config.tolerance,
        ridge=config.ridge,
        ridge_on_gaussian=config.ridge_on_gaussian,
        seed=seed,
        retry_schedule=config.retry_schedule,
    )


def prepare_components(config: RunConfig, ps: PointSet, seed: int, n_components=None):
    """Fit the mixture and filter it: the shared front half of every strategy."""
    cfg = fit_config(config, ps.dim, seed, n_components)
    model = fit(ps, cfg)
    filtered = filter_components(model, ps, config.filter)
    return model, filtered


def run_pipeline(config: RunConfig, seed: int | None = None, ps: PointSet | None = None) -> PipelineResult:
    """Full density-path clustering run for one seed."""
    config = config.validate()
    seed = config.seeds[0] if seed is None else seed
    timings = {}
    t0 = time.perf_counter()
    if ps is None:
        ps = load_points(config)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    model, filtered = prepare_components(config, ps, seed)
    timings["fit"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph = build_graph(filtered, config.neb, k=config.knn)
    timings["graph"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    dend = build_dendrogram(graph)
    curve = threshold_curve(dend)
    clustering = None
    if config.k_target is not None:
        clustering = cut(dend, config.k_target, filtered, ps)
    timings["hierarchy"] = time.perf_counter() - t0

    return PipelineResult(
        pointset=ps,
        model=model,
        filtered=filtered,
        graph=graph,
        dendrogram=dend,
        curve=curve,
        clustering=clustering,
        timings=timings,
        warnings=list(graph.warnings),
    )


def ground_truth_k(config: RunConfig, ps: PointSet | None = None) -> int:
    if config.k_target is not None:
        return config.k_target
    if ps is None:
        ps = load_points(config)
    if ps.labels is None:
        raise ValidationError("no k_target configured and the data has no labels")
    return int(np.unique(ps.labels).size)


def run_strategy(
    config: RunConfig,
    seed: int,
    strategy: MergeStrategy | None = None,
    ps: PointSet | None = None,
    prepared=None,
) -> Clustering:
    """One overcluster-and-merge run with the given strategy."""
    config = config.validate()
    strategy = (strategy or config.strategy).validate()
    if ps is None:
        ps = load_points(config)
    k = ground_truth_k(config, ps)

    if strategy.overcluster_backend == "kmeans":
        n_comp = resolve_n_components(config, ps.dim)
        if strategy.kind == "euclidean":
            return strat.kmeans_overcluster_merge(
                ps, n_comp, k, recompute=strategy.recompute_centers, seed=seed
            )
        labels, _ = kmeans(ps.points, n_comp, seed=seed)
        return strat.oracle_merge(labels, ps.labels, k)

    model, filtered = prepared if prepared is not None else prepare_components(config, ps, seed)
    if strategy.kind == "neb":
        graph = build_graph(filtered, config.neb, k=config.knn)
        dend = build_dendrogram(graph)
        return cut(dend, k, filtered, ps)
    if strategy.kind == "oracle":
        assignments = hard_assign(filtered.model, ps)
        return strat.oracle_merge(assignments, ps.labels, k)
    if strategy.kind == "euclidean":
        return strat.euclidean_merge(filtered, ps, k, recompute=strategy.recompute_centers)
    return strat.dip_merge(filtered, ps, k, recompute=strategy.recompute_centers)


# ---------------------------------------------------------------------------
# sweeps (used by the stability protocols and the CLI)

def _sweep_worker(args):
    config, seed, n_components = args
    try:
        ps = load_points(config)
        k = ground_truth_k(config, ps)
        if n_components is None:
            return run_strategy(config, seed, ps=ps)
        cfg_k = replace(config, n_components=n_components, k_target=k)
        return run_strategy(cfg_k, seed, ps=ps)
    except FitFailureError as exc:
        return exc


def _run_tasks(tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [_sweep_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_worker, tasks))


def run_seed_sweep(config: RunConfig, seeds, jobs: int = 1):
    config = config.validate()
    return _run_tasks([(config, int(s), None) for s in seeds], jobs)


def run_component_sweep(config: RunConfig, n_components_list, jobs: int = 1):
    config = config.validate()
    seed = config.seeds[0]
    return _run_tasks([(config, seed, int(k)) for k in n_components_list], jobs)


# ---------------------------------------------------------------------------
# strategy comparison harness

def default_comparison_strategies() -> list[MergeStrategy]:
    return [
        MergeStrategy(kind="oracle"),
        MergeStrategy(kind="neb"),
        MergeStrategy(kind="euclidean", recompute_centers=True),
        MergeStrategy(kind="euclidean", recompute_centers=False),
        MergeStrategy(kind="dip", recompute_centers=True),
        MergeStrategy(kind="dip", recompute_centers=False),
        MergeStrategy(kind="euclidean", overcluster_backend="kmeans", recompute_centers=True),
        MergeStrategy(kind="euclidean", overcluster_backend="kmeans", recompute_centers=False),
    ]


def _compare_worker(args):
    config, seed, strategies = args
    from .metrics import ari

    ps = load_points(config)
    if ps.labels is None:
        raise ValidationError("strategy comparison requires ground-truth labels")
    prepared = None
    if any(s.overcluster_backend == "mixture" for s in strategies):
        prepared = prepare_components(config, ps, seed)
    row = {}
    for strategy in strategies:
        try:
            clustering = run_strategy(
                config,
                seed,
                strategy=strategy,
                ps=ps,
                prepared=prepared if strategy.overcluster_backend == "mixture" else None,
            )
            row[strategy.label()] = ari(ps.labels, clustering.point_labels)
        except FitFailureError:
            row[strategy.label()] = None
    return row


def compare_strategies(
    config: RunConfig, seeds=None, strategies=None, jobs: int = 1
) -> dict:
    """Mean +/- std ARI per strategy over seeds (ddof=1; 0 for single seed)."""
    config = config.validate()
    seeds = list(config.seeds if seeds is None else seeds)
    strategies = [s.validate() for s in (strategies or default_comparison_strategies())]
    tasks = [(config, int(s), strategies) for s in seeds]
    if jobs <= 1 or len(tasks) <= 1:
        rows = [_compare_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_compare_worker, tasks))
    table = {}
    for strategy in strategies:
        name = strategy.label()
        vals = [r[name] for r in rows if r[name] is not None]
        table[name] = {
            "aris": vals,
            "mean": float(np.mean(vals)) if vals else None,
            "std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
            "failures": sum(1 for r in rows if r[name] is None),
        }
    return {"seeds": seeds, "per_seed": rows, "table": table}
