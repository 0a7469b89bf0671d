"""Alternative component-merging strategies used for ablation comparisons.

All strategies start from an overclustering (mixture components or k-means
cells) and merge down to a target cluster count:

- oracle: map each component to the ground-truth class it overlaps most.
- euclidean: iteratively merge the two clusters with the closest centers.
- dip: project candidate pairs onto the line through their centers and merge
  the pair whose pooled 1D sample looks least bimodal (smallest dip).
- kmeans backend: k-means overclustering followed by Euclidean merging.

"recompute" variants update the merged center (point-count-weighted) after
every merge; one-shot variants rank all initial pairs once and apply merges
from that fixed list until the target count is reached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .hierarchy import Clustering, canonicalize_labels
from .mixture import hard_assign, kmeans

_DIP_EXACT_MAX_UNIQUE = 64


@dataclass(frozen=True)
class MergeStrategy:
    kind: str = "neb"  # oracle | euclidean | dip | neb
    recompute_centers: bool = True
    overcluster_backend: str = "mixture"  # mixture | kmeans

    def validate(self) -> "MergeStrategy":
        if self.kind not in ("oracle", "euclidean", "dip", "neb"):
            raise ValidationError(f"unknown merge strategy {self.kind!r}")
        if self.overcluster_backend not in ("mixture", "kmeans"):
            raise ValidationError(
                f"unknown overclustering backend {self.overcluster_backend!r}"
            )
        if self.overcluster_backend == "kmeans" and self.kind not in ("euclidean", "oracle"):
            raise ValidationError("kmeans backend pairs with euclidean (or oracle) merging")
        return self

    def label(self) -> str:
        parts = [self.kind]
        if self.overcluster_backend == "kmeans":
            parts.append("kmeans")
        if self.kind in ("euclidean", "dip"):
            parts.append("recompute" if self.recompute_centers else "oneshot")
        return "_".join(parts)


# ---------------------------------------------------------------------------
# oracle

def oracle_merge(assignments, truth, k: int) -> Clustering:
    """Majority-vote mapping of components onto ground-truth classes."""
    assignments = np.asarray(assignments, dtype=np.int64)
    if truth is None:
        raise ValidationError("oracle merging requires ground-truth labels")
    truth = np.asarray(truth, dtype=np.int64)
    if truth.shape != assignments.shape:
        raise ValidationError("assignments and truth labels differ in length")
    n_classes = int(truth.max()) + 1
    comp_to_cluster = {}
    for comp in np.unique(assignments):
        votes = np.bincount(truth[assignments == comp], minlength=n_classes)
        comp_to_cluster[int(comp)] = int(np.argmax(votes))
    labels = np.array([comp_to_cluster[int(c)] for c in assignments], dtype=np.int64)
    return Clustering(point_labels=labels, component_to_cluster=comp_to_cluster, k=k)


# ---------------------------------------------------------------------------
# center-based agglomeration

def _merge_loop(n_comp, k, recompute, score_fn, merge_fn, initial_pairs):
    """Generic agglomeration; returns component -> cluster map.

    score_fn(a, b) scores a live cluster pair (lower merges first);
    merge_fn(a, b) folds cluster b into a after a merge is accepted.
    """
    if not 1 <= k <= n_comp:
        raise ValidationError(f"k must be in [1, {n_comp}]")
    members = {c: [c] for c in range(n_comp)}
    if recompute:
        scores = {pair: score_fn(*pair) for pair in initial_pairs}
        while len(members) > k:
            best = min(scores.items(), key=lambda kv: (kv[1], kv[0]))[0]
            a, b = best
            merge_fn(a, b)
            members[a].extend(members.pop(b))
            scores = {p: s for p, s in scores.items() if b not in p}
            for other in members:
                if other != a:
                    pair = (min(a, other), max(a, other))
                    scores[pair] = score_fn(*pair)
    else:
        ranked = sorted(initial_pairs, key=lambda p: (score_fn(*p), p))
        parent = list(range(n_comp))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        live = n_comp
        for a, b in ranked:
            if live <= k:
                break
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
                live -= 1
        members = {}
        for c in range(n_comp):
            members.setdefault(find(c), []).append(c)
    comp_to_cluster = {}
    for cluster, comps in enumerate(sorted(members.values(), key=lambda cs: cs[0])):
        for c in comps:
            comp_to_cluster[c] = cluster
    return comp_to_cluster


def _clustering_from_map(comp_to_cluster, assignments, k) -> Clustering:
    raw = np.array([comp_to_cluster[int(c)] for c in assignments], dtype=np.int64)
    labels, mapping = canonicalize_labels(raw, k)
    remapped = {}
    extra = {}
    for comp in sorted(comp_to_cluster):
        cl = comp_to_cluster[comp]
        if cl in mapping:
            remapped[comp] = mapping[cl]
        else:
            extra.setdefault(cl, len(mapping) + len(extra))
            remapped[comp] = extra[cl]
    return Clustering(point_labels=labels, component_to_cluster=remapped, k=k)


def _all_pairs(n):
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def euclidean_merge(m, ps, k: int, recompute: bool = True) -> Clustering:
    """Merge the closest cluster centers until k clusters remain."""
    centers, counts, assignments = _components_of(m, ps)
    n_comp = centers.shape[0]
    cur = {c: centers[c].astype(float) for c in range(n_comp)}
    size = {c: float(counts[c]) for c in range(n_comp)}

    def score(a, b):
        return float(np.linalg.norm(cur[a] - cur[b]))

    def merge(a, b):
        if recompute:
            total = size[a] + size[b]
            cur[a] = (size[a] * cur[a] + size[b] * cur[b]) / total
            size[a] = total

    comp_map = _merge_loop(n_comp, k, recompute, score, merge, _all_pairs(n_comp))
    return _clustering_from_map(comp_map, assignments, k)


def dip_merge(m, ps, k: int, recompute: bool = True) -> Clustering:
    """Merge the pair whose pooled center-line projection is least bimodal."""
    centers, counts, assignments = _components_of(m, ps)
    X = ps.points if hasattr(ps, "points") else np.asarray(ps, dtype=float)
    n_comp = centers.shape[0]
    cur = {c: centers[c].astype(float) for c in range(n_comp)}
    size = {c: float(counts[c]) for c in range(n_comp)}
    points = {c: X[assignments == c] for c in range(n_comp)}

    def score(a, b):
        axis = cur[b] - cur[a]
        norm = np.linalg.norm(axis)
        combined = np.vstack([points[a], points[b]])
        if norm < 1e-12:
            centered = combined - combined.mean(axis=0)
            _, vecs = np.linalg.eigh(centered.T @ centered)
            axis = vecs[:, -1]
        else:
            axis = axis / norm
        return dip_statistic(combined @ axis)

    def merge(a, b):
        total = size[a] + size[b]
        if recompute:
            cur[a] = (size[a] * cur[a] + size[b] * cur[b]) / total
        size[a] = total
        points[a] = np.vstack([points[a], points[b]])
        points[b] = points[b][:0]

    comp_map = _merge_loop(n_comp, k, recompute, score, merge, _all_pairs(n_comp))
    return _clustering_from_map(comp_map, assignments, k)


def kmeans_overcluster_merge(
    ps, n_components: int, k: int, recompute: bool = True, seed: int = 0
) -> Clustering:
    """k-means overclustering followed by Euclidean center merging."""
    X = ps.points if hasattr(ps, "points") else np.asarray(ps, dtype=float)
    if n_components > X.shape[0]:
        raise ValidationError("more k-means cells than points")
    labels, centers = kmeans(X, n_components, seed=seed)
    counts = np.bincount(labels, minlength=n_components)
    cur = {c: centers[c].astype(float) for c in range(n_components)}
    size = {c: float(counts[c]) for c in range(n_components)}

    def score(a, b):
        return float(np.linalg.norm(cur[a] - cur[b]))

    def merge(a, b):
        if recompute:
            total = size[a] + size[b]
            cur[a] = (size[a] * cur[a] + size[b] * cur[b]) / total
            size[a] = total

    comp_map = _merge_loop(n_components, k, recompute, score, merge, _all_pairs(n_components))
    return _clustering_from_map(comp_map, labels, k)


def _components_of(m, ps):
    """Centers, hard-assignment counts and assignments for a (filtered) model."""
    model = m.model if hasattr(m, "model") else m
    assignments = hard_assign(model, ps)
    counts = np.bincount(assignments, minlength=model.n_components)
    return model.means, counts, assignments


# ---------------------------------------------------------------------------
# Hartigan dip statistic

def dip_statistic(values) -> float:
    """Hartigan-Hartigan dip of a 1D sample.

    Distance (in sup norm) from the empirical CDF to the closest unimodal CDF,
    where the fit may jump at its mode; floored at 1/(2n), so n equal values
    give exactly 1/(2n) and two balanced point masses give the maximum 0.25.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValidationError("dip needs at least 2 values")
    if not np.all(np.isfinite(x)):
        raise ValidationError("dip input must be finite")
    u, counts = np.unique(x, return_counts=True)
    floor = 1.0 / (2.0 * n)
    if u.size == 1:
        return floor
    cdf = np.cumsum(counts) / n
    if u.size <= _DIP_EXACT_MAX_UNIQUE:
        return max(floor, _dip_exact(u, cdf))
    return max(floor, _dip_iterative(u, cdf, counts / n))


def _dip_exact(u, cdf) -> float:
    """Exact dip by bisection on the fit error delta.

    A unimodal CDF within delta of the ECDF decomposes into a convex
    increasing piece, an optional jump at the mode, and a concave increasing
    piece. Feasibility for a given delta is decided exactly by propagating,
    point by point, the full frontier of achievable (value, incoming slope)
    states of a convex increasing curve through the constraint boxes; the
    concave side reuses the same propagation on mirrored data.
    """
    lo_b = 0.0
    hi_b = 0.5
    for _ in range(60):
        mid = 0.5 * (lo_b + hi_b)
        if _dip_feasible(u, cdf, mid):
            hi_b = mid
        else:
            lo_b = mid
    return hi_b


class _ConvexFrontier:
    """Achievable (value g, minimal incoming slope) states of a convex
    increasing curve through interval constraints, as a piecewise-linear
    minimal-slope function sigma(g) over the achievable value range.

    Any state with a larger slope than sigma(g) is dominated: a smaller
    incoming slope never removes future options.
    """

    __slots__ = ("g", "s")

    def __init__(self, g, s):
        self.g = g  # breakpoint values, increasing
        self.s = s  # minimal incoming slope at each breakpoint

    @staticmethod
    def start(lo, hi):
        if lo > hi:
            return None
        return _ConvexFrontier(np.array([lo, hi]), np.array([0.0, 0.0]))

    def min_value(self):
        return self.g[0]

    def advance(self, dx, lo, hi):
        """Frontier at the next point, given spacing dx and its box."""
        # earliest value reachable from state (g, sigma(g)) is g + dx*sigma(g)
        psi = self.g + dx * self.s
        lo = max(lo, psi[0])
        if lo > hi:
            return None
        # sigma'(g') for g' in [psi[0], psi[-1]] interpolates sigma over psi;
        # beyond psi[-1] the best predecessor is pinned at max g: slope 1/dx
        bp_g = [lo]
        bp_s = [self._slope_at(psi, dx, lo)]
        for j in range(len(psi)):
            if lo < psi[j] < hi:
                bp_g.append(psi[j])
                bp_s.append(self.s[j])
        bp_g.append(hi)
        bp_s.append(self._slope_at(psi, dx, hi))
        return _ConvexFrontier(np.array(bp_g), np.array(bp_s))

    def _slope_at(self, psi, dx, target):
        if target >= psi[-1]:
            return (target - self.g[-1]) / dx
        return float(np.interp(target, psi, self.s))


def _forward_frontiers(u, lo, hi):
    """Frontier after each prefix 1..i (None once infeasible)."""
    m = u.size
    out = []
    state = _ConvexFrontier.start(lo[0], hi[0])
    out.append(state)
    for i in range(1, m):
        if state is not None:
            state = state.advance(u[i] - u[i - 1], lo[i], hi[i])
        out.append(state)
    return out


def _dip_feasible(u, cdf, delta) -> bool:
    m = u.size
    cdf_prev = np.concatenate([[0.0], cdf[:-1]])
    lo = np.maximum(cdf - delta, 0.0)
    hi = np.minimum(cdf_prev + delta, 1.0)

    fwd = _forward_frontiers(u, lo, hi)
    # concave increasing through boxes on the suffix == convex increasing on
    # mirrored data (x -> -x reversed, g -> 1-g flips lo/hi)
    bwd = _forward_frontiers(-u[::-1], (1.0 - hi)[::-1], (1.0 - lo)[::-1])
    bwd = bwd[::-1]  # bwd[i]: frontier of suffix i..m-1; min value = 1-max g_i

    def suffix_max(i):
        return 1.0 - bwd[i].min_value()

    if fwd[m - 1] is not None or bwd[0] is not None:
        return True
    for c in range(m - 1):  # mode strictly between u[c] and u[c+1]
        if fwd[c] is not None and bwd[c + 1] is not None:
            if fwd[c].min_value() <= suffix_max(c + 1):
                return True
    # mode at u[i] with a jump: the pre-jump value v sees only F(u_i-),
    # the post-jump value g_i only F(u_i)
    for i in range(m):
        lo_v = max(cdf_prev[i] - delta, 0.0)
        hi_v = min(cdf_prev[i] + delta, 1.0)
        if lo_v > hi_v:
            continue
        if i == 0:
            min_v = lo_v
        else:
            if fwd[i - 1] is None:
                continue
            ext = fwd[i - 1].advance(u[i] - u[i - 1], lo_v, hi_v)
            if ext is None:
                continue
            min_v = ext.min_value()
        lo_g = max(cdf[i] - delta, 0.0)
        hi_g = min(cdf[i] + delta, 1.0)
        if lo_g > hi_g:
            continue
        if i == m - 1:
            max_g = hi_g
        else:
            if bwd[i + 1] is None:
                continue
            ext = bwd[i + 1].advance(u[i + 1] - u[i], 1.0 - hi_g, 1.0 - lo_g)
            if ext is None:
                continue
            max_g = 1.0 - ext.min_value()
        if min_v <= max_g:
            return True
    return False


def _gcm_curve(vals, xs):
    """Greatest convex minorant curve and its touchpoints (min-slope scan)."""
    work = vals
    widx = xs
    curve = [float(work[0])]
    touch = [0]
    while len(work) > 1:
        dist = widx[1:] - widx[0]
        slopes = (work[1:] - work[0]) / dist
        minslope = slopes.min()
        j = int(np.nonzero(slopes == minslope)[0][0]) + 1
        curve.extend((work[0] + dist[:j] * minslope).tolist())
        touch.append(touch[-1] + j)
        work = work[j:]
        widx = widx[j:]
    return np.asarray(curve), np.asarray(touch)


def _lcm_curve(vals, xs):
    g, t = _gcm_curve(1.0 - vals[::-1], xs[-1] - xs[::-1])
    return 1.0 - g[::-1], len(vals) - 1 - t[::-1]


def _dip_iterative(u, cdf, hist) -> float:
    """Classic iterative minorant/majorant narrowing (large unique counts)."""
    work_u = u
    work_cdf = cdf
    work_hist = hist
    d_floor = 0.0
    left = [0.0]
    right = [1.0]

    while True:
        gcm, gcm_touch = _gcm_curve(work_cdf - work_hist, work_u)
        lcm, lcm_touch = _lcm_curve(work_cdf, work_u)

        gaps_at_gcm = np.abs(lcm[gcm_touch] - gcm[gcm_touch])
        gaps_at_lcm = np.abs(lcm[lcm_touch] - gcm[lcm_touch])
        d_left = gaps_at_gcm.max()
        d_right = gaps_at_lcm.max()

        if d_right > d_left:
            xr = int(lcm_touch[np.nonzero(gaps_at_lcm == d_right)[0][-1]])
            xl = int(gcm_touch[gcm_touch <= xr][-1])
            d = d_right
        else:
            xl = int(gcm_touch[np.nonzero(gaps_at_gcm == d_left)[0][0]])
            xr = int(lcm_touch[lcm_touch >= xl][0])
            d = d_left

        if d <= d_floor or xr == 0 or xl == len(work_cdf):
            left_arr = np.asarray(left)
            right_arr = np.asarray(right)
            the_dip = max(
                np.abs(cdf[: len(left_arr)] - left_arr).max(),
                np.abs(cdf[-len(right_arr) - 1 : -1] - right_arr).max(),
            )
            return 0.5 * float(the_dip)

        d_floor = max(
            d_floor,
            np.abs(gcm[: xl + 1] - work_cdf[: xl + 1]).max(),
            np.abs(lcm[xr:] - work_cdf[xr:] + work_hist[xr:]).max(),
        )

        left.extend(gcm[1 : xl + 1].tolist())
        right[:0] = lcm[xr:-1].tolist()
        work_cdf = work_cdf[xl : xr + 1]
        work_u = work_u[xl : xr + 1]
        work_hist = work_hist[xl : xr + 1]
