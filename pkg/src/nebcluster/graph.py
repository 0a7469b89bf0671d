"""k-nearest-neighbor graph over component centers with path-bottleneck edges.

Paths are only optimized for kNN edges (the union over both endpoints), which
keeps the number of optimizations linear in the component count. A maximum
spanning tree on the bottleneck similarities then supplies all-pairs maximin
bottlenecks: on a maximum spanning tree the minimum edge weight along the tree
path equals the graph-wide widest-path value.
"""

from __future__ import annotations

import hashlib
import json
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .filtering import FilteredModel
from .mixture import MixtureModel
from .neb import DensityPath, NebConfig, optimize_paths

_PATH_CACHE: OrderedDict = OrderedDict()
_PATH_CACHE_MAX = 256


def clear_path_cache() -> None:
    _PATH_CACHE.clear()


def _model_digest(model: MixtureModel) -> str:
    h = hashlib.sha256()
    h.update(model.family.encode())
    h.update(np.float64(model.df).tobytes())
    for arr in (model.weights, model.means, model.covariances):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


@dataclass
class ClusterGraph:
    nodes: list[int]
    centers: np.ndarray
    knn_edges: list[tuple[int, int, float]]
    neb_edges: list[tuple[int, int, float]]
    tree_edges: list[tuple[int, int, float]]
    pairwise_bottleneck: np.ndarray
    paths: dict[tuple[int, int], DensityPath] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def knn_pairs(centers: np.ndarray, k: int) -> list[tuple[int, int, float]]:
    """Undirected union of each node's k nearest neighbors (k capped at n-1)."""
    n = centers.shape[0]
    k = min(k, n - 1)
    if k <= 0:
        return []
    diff = centers[:, None, :] - centers[None, :, :]
    dists = np.sqrt(np.sum(diff * diff, axis=2))
    pairs = set()
    for i in range(n):
        order = np.argsort(dists[i], kind="stable")
        picked = [int(j) for j in order if j != i][:k]
        for j in picked:
            pairs.add((min(i, j), max(i, j)))
    return sorted((a, b, float(dists[a, b])) for a, b in pairs)


def widest_path_tree(edges) -> list[tuple[int, int, float]]:
    """Maximum spanning forest by similarity (Kruskal, descending weights).

    Ties break deterministically on the lower node pair. Returns accepted
    edges in acceptance order, which is also a valid single-linkage merge
    order on the bottleneck similarities.
    """
    normed = [(min(a, b), max(a, b), float(w)) for a, b, w in edges]
    normed.sort(key=lambda e: (-e[2], e[0], e[1]))
    parent: dict[int, int] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for a, b, w in normed:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
            chosen.append((a, b, w))
    return chosen


def _pairwise_from_tree(n: int, tree_edges) -> np.ndarray:
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for a, b, w in tree_edges:
        adj[a].append((b, w))
        adj[b].append((a, w))
    out = np.full((n, n), -np.inf)
    np.fill_diagonal(out, np.inf)
    for s in range(n):
        stack = [(s, np.inf)]
        seen = {s}
        while stack:
            u, bott = stack.pop()
            for v, w in adj[u]:
                if v not in seen:
                    seen.add(v)
                    nb = min(bott, w)
                    out[s, v] = nb
                    stack.append((v, nb))
    return out


def graph_from_edges(centers, neb_edges, knn_edges=None, warnings=None) -> ClusterGraph:
    """Assemble a ClusterGraph from precomputed bottleneck edges."""
    centers = np.asarray(centers, dtype=float)
    n = centers.shape[0]
    tree = widest_path_tree(neb_edges)
    return ClusterGraph(
        nodes=list(range(n)),
        centers=centers,
        knn_edges=list(knn_edges or []),
        neb_edges=[(min(a, b), max(a, b), float(w)) for a, b, w in neb_edges],
        tree_edges=tree,
        pairwise_bottleneck=_pairwise_from_tree(n, tree),
        warnings=list(warnings or []),
    )


def build_graph(
    m: FilteredModel | MixtureModel,
    neb_cfg: NebConfig = NebConfig(),
    k: int = 10,
    use_cache: bool = True,
) -> ClusterGraph:
    """Run path optimization on every kNN edge and assemble the graph."""
    model = m.model if isinstance(m, FilteredModel) else m
    if k < 1:
        raise ValidationError("k must be >= 1")
    n = model.n_components
    if n == 1:
        return ClusterGraph(
            nodes=[0],
            centers=model.means.copy(),
            knn_edges=[],
            neb_edges=[],
            tree_edges=[],
            pairwise_bottleneck=np.array([[np.inf]]),
        )
    knn = knn_pairs(model.means, k)
    digest = _model_digest(model) if use_cache else None
    cached: dict[tuple[int, int], DensityPath] = {}
    missing = []
    for a, b, _ in knn:
        key = (digest, a, b, neb_cfg.key())
        if use_cache and key in _PATH_CACHE:
            _PATH_CACHE.move_to_end(key)
            cached[(a, b)] = _PATH_CACHE[key]
        else:
            missing.append((a, b))
    fresh = optimize_paths(model, missing, neb_cfg) if missing else []
    paths: dict[tuple[int, int], DensityPath] = dict(cached)
    for path in fresh:
        a, b = path.endpoints
        paths[(a, b)] = path
        if use_cache:
            _PATH_CACHE[(digest, a, b, neb_cfg.key())] = path
            while len(_PATH_CACHE) > _PATH_CACHE_MAX:
                _PATH_CACHE.popitem(last=False)

    warnings = []
    neb_edges = []
    for a, b, _ in knn:
        path = paths[(a, b)]
        if np.isfinite(path.bottleneck_log_density):
            neb_edges.append((a, b, path.bottleneck_log_density))
        else:
            warnings.append(f"dropped edge ({a}, {b}): non-finite bottleneck")
    tree = widest_path_tree(neb_edges)
    return ClusterGraph(
        nodes=list(range(n)),
        centers=model.means.copy(),
        knn_edges=knn,
        neb_edges=neb_edges,
        tree_edges=tree,
        pairwise_bottleneck=_pairwise_from_tree(n, tree),
        paths=paths,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# exports

def graph_to_dict(g: ClusterGraph) -> dict:
    tree_set = {(a, b) for a, b, _ in g.tree_edges}
    return {
        "nodes": [
            {"id": i, "center": [float(v) for v in g.centers[i]]} for i in g.nodes
        ],
        "knn_edges": [
            {"a": a, "b": b, "center_distance": w} for a, b, w in g.knn_edges
        ],
        "edges": [
            {
                "a": a,
                "b": b,
                "bottleneck_log_density": w,
                "in_tree": (a, b) in tree_set,
            }
            for a, b, w in g.neb_edges
        ],
        "warnings": list(g.warnings),
    }


def graph_to_json(g: ClusterGraph) -> str:
    return json.dumps(graph_to_dict(g), sort_keys=True, indent=1)


def graph_to_dot(g: ClusterGraph) -> str:
    tree_set = {(a, b) for a, b, _ in g.tree_edges}
    lines = ["graph clusters {"]
    for i in g.nodes:
        lines.append(f'  n{i} [label="{i}"];')
    for a, b, w in g.neb_edges:
        style = "bold" if (a, b) in tree_set else "dashed"
        lines.append(f'  n{a} -- n{b} [label="{w:.4g}", style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
