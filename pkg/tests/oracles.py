"""Independent brute-force references used to validate the implementations.

Everything in this module is deliberately written from first principles
(LP feasibility, exhaustive enumeration, pair counting) rather than sharing
code with the package.
"""

import numpy as np
from scipy.optimize import linprog


# ---------------------------------------------------------------------------
# dip: minimize the sup-distance to a unimodal CDF via one LP per mode layout

def dip_lp(values) -> float:
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    u, counts = np.unique(x, return_counts=True)
    m = u.size
    floor = 1.0 / (2.0 * n)
    if m == 1:
        return floor
    cdf = np.cumsum(counts) / n
    cdf_prev = np.concatenate([[0.0], cdf[:-1]])

    best = np.inf
    for c in range(m + 1):  # mode strictly between u[c-1] and u[c] (jump allowed)
        val = _lp_between(u, cdf, cdf_prev, c)
        if val is not None:
            best = min(best, val)
    for i in range(m):  # mode exactly at u[i], jump allowed at the mode
        val = _lp_at_point(u, cdf, cdf_prev, i)
        if val is not None:
            best = min(best, val)
    return max(floor, best)


def _solve(n_vars, rows, rhs, delta_idx):
    c = np.zeros(n_vars)
    c[delta_idx] = 1.0
    bounds = [(0.0, 1.0)] * n_vars
    bounds[delta_idx] = (0.0, 0.5)
    res = linprog(
        c,
        A_ub=np.array(rows) if rows else None,
        b_ub=np.array(rhs) if rhs else None,
        bounds=bounds,
        method="highs",
    )
    return float(res.fun) if res.success else None


def _box_rows(rows, rhs, var, lo_target, hi_target, delta_idx, n_vars):
    row = [0.0] * n_vars
    row[var] = -1.0
    row[delta_idx] = -1.0
    rows.append(row)
    rhs.append(-lo_target)  # g >= lo_target - delta
    row = [0.0] * n_vars
    row[var] = 1.0
    row[delta_idx] = -1.0
    rows.append(row)
    rhs.append(hi_target)  # g <= hi_target + delta


def _mono_row(rows, rhs, lo_var, hi_var, n_vars):
    row = [0.0] * n_vars
    row[lo_var] = 1.0
    row[hi_var] = -1.0
    rows.append(row)
    rhs.append(0.0)


def _slope_rows(rows, rhs, trip, n_vars, convex):
    (i0, x0), (i1, x1), (i2, x2) = trip
    # convex: (g1-g0)/(x1-x0) <= (g2-g1)/(x2-x1)
    a, b = 1.0 / (x1 - x0), 1.0 / (x2 - x1)
    row = [0.0] * n_vars
    row[i0] += -a
    row[i1] += a + b
    row[i2] += -b
    if not convex:
        row = [-v for v in row]
    rows.append(row)
    rhs.append(0.0)


def _lp_between(u, cdf, cdf_prev, c):
    m = u.size
    n_vars = m + 1
    delta = m
    rows, rhs = [], []
    for i in range(m):
        _box_rows(rows, rhs, i, cdf[i], cdf_prev[i], delta, n_vars)
    for i in range(m - 1):
        _mono_row(rows, rhs, i, i + 1, n_vars)
    for i in range(c - 2):  # convex on indices [0, c)
        trip = [(j, u[j]) for j in (i, i + 1, i + 2)]
        _slope_rows(rows, rhs, trip, n_vars, convex=True)
    for i in range(c, m - 2):  # concave on indices [c, m)
        trip = [(j, u[j]) for j in (i, i + 1, i + 2)]
        _slope_rows(rows, rhs, trip, n_vars, convex=False)
    return _solve(n_vars, rows, rhs, delta)


def _lp_at_point(u, cdf, cdf_prev, i):
    m = u.size
    # vars: g_0..g_{m-1}, v (pre-jump value at u[i]), delta
    n_vars = m + 2
    v_idx, delta = m, m + 1
    rows, rhs = [], []
    for j in range(m):
        if j == i:
            _box_rows(rows, rhs, j, cdf[j], cdf[j], delta, n_vars)
        else:
            _box_rows(rows, rhs, j, cdf[j], cdf_prev[j], delta, n_vars)
    _box_rows(rows, rhs, v_idx, cdf_prev[i], cdf_prev[i], delta, n_vars)
    for j in range(m - 1):
        if j == i - 1:
            _mono_row(rows, rhs, j, v_idx, n_vars)
        else:
            _mono_row(rows, rhs, j, j + 1, n_vars)
    _mono_row(rows, rhs, v_idx, i, n_vars)
    # convex side: indices 0..i-1 plus v at u[i]
    left = [(j, u[j]) for j in range(i)] + [(v_idx, u[i])]
    for t in range(len(left) - 2):
        _slope_rows(rows, rhs, left[t : t + 3], n_vars, convex=True)
    # concave side: indices i..m-1
    right = [(j, u[j]) for j in range(i, m)]
    for t in range(len(right) - 2):
        _slope_rows(rows, rhs, right[t : t + 3], n_vars, convex=False)
    return _solve(n_vars, rows, rhs, delta)


# ---------------------------------------------------------------------------
# ARI by explicit pair counting

def ari_pairs(a, b) -> float:
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    n = a.size
    n11 = n00 = n10 = n01 = 0
    for i in range(n):
        for j in range(i + 1, n):
            sa = a[i] == a[j]
            sb = b[i] == b[j]
            if sa and sb:
                n11 += 1
            elif sa and not sb:
                n10 += 1
            elif not sa and sb:
                n01 += 1
            else:
                n00 += 1
    num = 2 * (n00 * n11 - n01 * n10)
    den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11)
    if den == 0:
        return 1.0
    return num / den


# ---------------------------------------------------------------------------
# widest (maximin) paths by exhaustive simple-path enumeration

def exhaustive_widest(n_nodes, edges):
    """All-pairs maximin bottleneck over all simple paths; -inf if unreachable."""
    adj = {i: [] for i in range(n_nodes)}
    for a, b, w in edges:
        adj[a].append((b, w))
        adj[b].append((a, w))
    out = np.full((n_nodes, n_nodes), -np.inf)
    np.fill_diagonal(out, np.inf)

    def dfs(node, target, visited, bottleneck, best):
        if node == target:
            return max(best, bottleneck)
        for nxt, w in adj[node]:
            if nxt not in visited:
                visited.add(nxt)
                best = dfs(nxt, target, visited, min(bottleneck, w), best)
                visited.remove(nxt)
        return best

    for s in range(n_nodes):
        for t in range(s + 1, n_nodes):
            best = dfs(s, t, {s}, np.inf, -np.inf)
            out[s, t] = out[t, s] = best
    return out


# ---------------------------------------------------------------------------
# single linkage, naive O(K^3)

def naive_single_linkage(dist):
    """Merge sequence [(height, set, set)] plus the partition after each merge."""
    dist = np.asarray(dist, dtype=float)
    k = dist.shape[0]
    clusters = [frozenset([i]) for i in range(k)]
    merges = []
    partitions = []
    while len(clusters) > 1:
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                d = min(dist[a, b] for a in clusters[i] for b in clusters[j])
                if best is None or d < best[0]:
                    best = (d, i, j)
        d, i, j = best
        merged = clusters[i] | clusters[j]
        merges.append((d, clusters[i], clusters[j]))
        clusters = [c for t, c in enumerate(clusters) if t not in (i, j)] + [merged]
        partitions.append(frozenset(clusters))
    return merges, partitions


def replay_partitions(n_leaves, merge_pairs):
    """Partition sequence from a package dendrogram's (left, right) merge ids."""
    members = {i: frozenset([i]) for i in range(n_leaves)}
    next_id = n_leaves
    partitions = []
    for left, right in merge_pairs:
        members[next_id] = members.pop(left) | members.pop(right)
        next_id += 1
        partitions.append(frozenset(members.values()))
    return partitions


# ---------------------------------------------------------------------------
# grid-graph maximin bottleneck for a 2D density surface

def grid_widest_bottleneck(logdens, start_cell, goal_cell):
    """Maximin over 4-connected grid paths: activate cells by descending
    density, union neighbors, record the level at which start and goal join."""
    h, w = logdens.shape
    order = np.argsort(-logdens.ravel(), kind="stable")
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    active = np.zeros(h * w, dtype=bool)
    s = start_cell[0] * w + start_cell[1]
    t = goal_cell[0] * w + goal_cell[1]
    for idx in order:
        active[idx] = True
        r, c = divmod(int(idx), w)
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and active[rr * w + cc]:
                ra, rb = find(int(idx)), find(rr * w + cc)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
        if active[s] and active[t] and find(s) == find(t):
            return float(logdens.ravel()[idx])
    return -np.inf
