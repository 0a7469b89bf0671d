"""Dendrogram construction over the cluster graph, flat cuts, threshold curve.

Merging the pair of clusters with the highest between-cluster bottleneck is
single linkage on bottleneck distances, so the dendrogram can be read directly
off the maximum spanning tree edges in acceptance order. Components living in
different connected components of the kNN graph have no finite bottleneck;
those merges are appended after all finite ones, ordered by Euclidean center
distance, with a sentinel height.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .mixture import hard_assign


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    new_id: int
    bottleneck_log_density: float  # -inf for cross-component merges
    cross_component: bool = False

    @property
    def height(self) -> float:
        return -self.bottleneck_log_density


@dataclass
class Dendrogram:
    n_leaves: int
    merges: list[Merge]


@dataclass
class Clustering:
    point_labels: np.ndarray
    component_to_cluster: dict[int, int]
    k: int


def build_dendrogram(g) -> Dendrogram:
    """Merge clusters in descending bottleneck order (single linkage)."""
    n = g.n_nodes
    parent = list(range(n))
    cluster_id = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merges: list[Merge] = []
    next_id = n

    def union(a, b, bottleneck, cross):
        nonlocal next_id
        ra, rb = find(a), find(b)
        ia, ib = cluster_id[ra], cluster_id[rb]
        left, right = (ia, ib) if ia < ib else (ib, ia)
        merges.append(
            Merge(
                left=left,
                right=right,
                new_id=next_id,
                bottleneck_log_density=bottleneck,
                cross_component=cross,
            )
        )
        parent[max(ra, rb)] = min(ra, rb)
        cluster_id[min(ra, rb)] = next_id
        next_id += 1

    # tree_edges arrive in Kruskal acceptance order: descending similarity
    for a, b, w in g.tree_edges:
        union(a, b, w, cross=False)

    if len(merges) < n - 1:
        cross_pairs = []
        for a in range(n):
            for b in range(a + 1, n):
                if find(a) != find(b):
                    dist = float(np.linalg.norm(g.centers[a] - g.centers[b]))
                    cross_pairs.append((dist, a, b))
        cross_pairs.sort()
        for _, a, b in cross_pairs:
            if find(a) != find(b):
                union(a, b, -math.inf, cross=True)

    return Dendrogram(n_leaves=n, merges=merges)


def cluster_map_at(dend: Dendrogram, k: int) -> dict[int, int]:
    """Leaf -> cluster index map after undoing the last k-1 merges."""
    n = dend.n_leaves
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}]")
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for merge in dend.merges[: n - k]:
        la, lb = _any_leaf(dend, merge.left), _any_leaf(dend, merge.right)
        ra, rb = find(la), find(lb)
        parent[max(ra, rb)] = min(ra, rb)
    roots: dict[int, int] = {}
    out = {}
    for leaf in range(n):
        r = find(leaf)
        if r not in roots:
            roots[r] = len(roots)
        out[leaf] = roots[r]
    return out


def _any_leaf(dend: Dendrogram, cluster: int) -> int:
    while cluster >= dend.n_leaves:
        cluster = dend.merges[cluster - dend.n_leaves].left
    return cluster


def canonicalize_labels(raw_labels: np.ndarray, k: int):
    """Relabel clusters to [0, k): by size descending, then first occurrence."""
    raw_labels = np.asarray(raw_labels)
    present = np.unique(raw_labels)
    sizes = {c: int(np.sum(raw_labels == c)) for c in present}
    first = {}
    for i, c in enumerate(raw_labels.tolist()):
        if c not in first:
            first[c] = i
    order = sorted(present.tolist(), key=lambda c: (-sizes[c], first[c]))
    mapping = {c: i for i, c in enumerate(order)}
    new = np.array([mapping[c] for c in raw_labels.tolist()], dtype=np.int64)
    return new, mapping


def cut(dend: Dendrogram, k: int, m, ps) -> Clustering:
    """Flat clustering with k clusters; labels canonicalized by cluster size."""
    leaf_to_cluster = cluster_map_at(dend, k)
    assignments = hard_assign(m.model if hasattr(m, "model") else m, ps)
    raw = np.array([leaf_to_cluster[int(c)] for c in assignments], dtype=np.int64)
    labels, mapping = canonicalize_labels(raw, k)
    # clusters with no assigned points get the ids after the mapped ones
    comp_to_cluster: dict[int, int] = {}
    extra: dict[int, int] = {}
    for comp in sorted(leaf_to_cluster):
        cl = leaf_to_cluster[comp]
        if cl in mapping:
            comp_to_cluster[comp] = mapping[cl]
        else:
            extra.setdefault(cl, len(mapping) + len(extra))
            comp_to_cluster[comp] = extra[cl]
    return Clustering(point_labels=labels, component_to_cluster=comp_to_cluster, k=k)


# ---------------------------------------------------------------------------
# threshold curve

@dataclass(frozen=True)
class ThresholdEntry:
    k: int
    log_density: float      # bottleneck log-density of the merge reaching k
    density: float          # exp(log_density); non-decreasing in k
    distance: float         # reciprocal density; non-increasing in k
    jump: float | None      # density(k) / density(k-1), >= 1; None for k = 1


@dataclass
class ThresholdCurve:
    entries: list[ThresholdEntry]

    def jumps(self) -> dict[int, float]:
        return {e.k: e.jump for e in self.entries if e.jump is not None}


def threshold_curve(dend: Dendrogram) -> ThresholdCurve:
    """Per-k minimal threshold needed to merge down to exactly k clusters.

    Row k carries the bottleneck of the last merge executed to reach k
    clusters. The jump statistic compares the density crossed to reach k with
    the (lower) density required to go one step further; large jumps flag
    meaningful cluster counts.
    """
    n = dend.n_leaves
    entries: list[ThresholdEntry] = []
    logs = {}
    for k in range(n - 1, 0, -1):
        merge = dend.merges[n - k - 1]
        logs[k] = merge.bottleneck_log_density
    for k in range(1, n):
        logd = logs[k]
        jump = None
        if k >= 2:
            prev = logs[k - 1]
            if math.isfinite(logd) and math.isfinite(prev):
                with np.errstate(over="ignore"):
                    jump = float(np.exp(logd - prev))
            elif math.isfinite(logd) and prev == -math.inf:
                jump = math.inf
            # both cross-component: no information, leave undefined
        entries.append(
            ThresholdEntry(
                k=k,
                log_density=logd,
                density=float(np.exp(logd)),
                distance=float(np.exp(-logd)),
                jump=jump,
            )
        )
    return ThresholdCurve(entries=entries)


# ---------------------------------------------------------------------------
# exports

def _json_float(v: float):
    return None if not math.isfinite(v) else v


def dendrogram_to_dict(dend: Dendrogram) -> dict:
    return {
        "n_leaves": dend.n_leaves,
        "merges": [
            {
                "left": m.left,
                "right": m.right,
                "new_id": m.new_id,
                "bottleneck_log_density": _json_float(m.bottleneck_log_density),
                "height": _json_float(m.height),
                "cross_component": m.cross_component,
            }
            for m in dend.merges
        ],
    }


def dendrogram_to_json(dend: Dendrogram) -> str:
    return json.dumps(dendrogram_to_dict(dend), sort_keys=True, indent=1)


def dendrogram_from_dict(data: dict) -> Dendrogram:
    merges = [
        Merge(
            left=m["left"],
            right=m["right"],
            new_id=m["new_id"],
            bottleneck_log_density=(
                -math.inf
                if m["bottleneck_log_density"] is None
                else float(m["bottleneck_log_density"])
            ),
            cross_component=bool(m["cross_component"]),
        )
        for m in data["merges"]
    ]
    return Dendrogram(n_leaves=int(data["n_leaves"]), merges=merges)


def dendrogram_to_newick(dend: Dendrogram) -> str:
    """Newick with branch lengths derived from merge heights.

    Heights are shifted to start at zero and infinite (cross-component)
    heights are capped just above the finite range; intended for tree viewers,
    not for reading exact bottlenecks back.
    """
    finite = [m.height for m in dend.merges if math.isfinite(m.height)]
    if finite:
        lo, hi = min(finite), max(finite)
        cap = hi + 0.05 * max(hi - lo, 1.0) + 1.0
    else:
        lo, cap = 0.0, 1.0

    def height_of(cluster: int) -> float:
        if cluster < dend.n_leaves:
            return lo
        h = dend.merges[cluster - dend.n_leaves].height
        return cap if not math.isfinite(h) else h

    def render(cluster: int, parent_height: float) -> str:
        length = max(parent_height - height_of(cluster), 0.0)
        if cluster < dend.n_leaves:
            return f"{cluster}:{length:.10g}"
        merge = dend.merges[cluster - dend.n_leaves]
        inner = ",".join(
            render(c, height_of(cluster)) for c in (merge.left, merge.right)
        )
        return f"({inner}):{length:.10g}"

    if not dend.merges:
        return "0;"
    root = dend.merges[-1].new_id
    merge = dend.merges[-1]
    inner = ",".join(render(c, height_of(root)) for c in (merge.left, merge.right))
    return f"({inner});"


def threshold_curve_to_csv(curve: ThresholdCurve, fh) -> None:
    fh.write("k,threshold_density,threshold_log_density,threshold_distance,jump\n")
    for e in curve.entries:
        jump = "" if e.jump is None else repr(float(e.jump))
        fh.write(
            f"{e.k},{repr(e.density)},{repr(e.log_density)},{repr(e.distance)},{jump}\n"
        )


def labels_to_csv(labels: np.ndarray, fh) -> None:
    fh.write("point_index,cluster\n")
    for i, lab in enumerate(np.asarray(labels).tolist()):
        fh.write(f"{i},{int(lab)}\n")
