"""Maximum-density paths between component centers via elastic-band ascent.

A path starts as a straight line between two centers, discretized into a fixed
number of points. Each iteration takes one Adam ascent step on the mixture
log-density independently per interior point (endpoints stay clamped to the
centers) and then resamples the polyline to uniform arc-length spacing, which
plays the role of the spring force in classical formulations. The minimum
log-density along the best path seen is the bottleneck similarity.

Log-density rather than density is optimized: the argmin location is invariant
under the monotone transform and gradients stay well-scaled in high dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .mixture import MixtureModel, evaluator


@dataclass(frozen=True)
class NebConfig:
    n_path_points: int = 1024
    n_steps: int = 100
    step_size: float | None = None  # absolute; default scales with segment length
    step_size_scale: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    keep_best: bool = True

    def validate(self) -> "NebConfig":
        if self.n_path_points < 3:
            raise ValidationError("n_path_points must be >= 3")
        if self.n_steps < 1:
            raise ValidationError("n_steps must be >= 1")
        if self.step_size is not None and self.step_size < 0:
            raise ValidationError("step_size must be >= 0")
        if self.step_size_scale <= 0:
            raise ValidationError("step_size_scale must be > 0")
        return self

    def key(self) -> tuple:
        return (
            self.n_path_points,
            self.n_steps,
            self.step_size,
            self.step_size_scale,
            self.beta1,
            self.beta2,
            self.epsilon,
            self.keep_best,
        )


@dataclass
class DensityPath:
    """An optimized polyline between two component centers."""

    endpoints: tuple[int, int]
    points: np.ndarray
    log_densities: np.ndarray
    bottleneck_log_density: float
    argmin_index: int
    failed_at_step: int | None = None  # first step that went non-finite


def _model_of(m) -> MixtureModel:
    return m.model if hasattr(m, "model") else m


def respace_polyline(points: np.ndarray) -> np.ndarray:
    """Resample a polyline at uniform arc length (same endpoints, same count)."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0.0:
        return points.copy()
    targets = np.linspace(0.0, total, points.shape[0])
    out = np.empty_like(points)
    for j in range(points.shape[1]):
        out[:, j] = np.interp(targets, cum, points[:, j])
    out[0] = points[0]
    out[-1] = points[-1]
    return out


def optimize_paths(m, pairs, cfg: NebConfig = NebConfig()) -> list[DensityPath]:
    """Optimize several center-to-center paths in one batched run.

    Every pair is optimized in canonical (low index, high index) direction so
    results are exactly symmetric; the output order matches ``pairs``. Edges
    that hit non-finite values are returned with bottleneck -inf.
    """
    cfg = cfg.validate()
    model = _model_of(m)
    means = model.means
    n_nodes = means.shape[0]
    canon = []
    flips = []
    for a, b in pairs:
        if a == b:
            raise ValidationError("path endpoints must differ")
        if not (0 <= a < n_nodes and 0 <= b < n_nodes):
            raise ValidationError("component index out of range")
        canon.append((min(a, b), max(a, b)))
        flips.append(a > b)
    if not canon:
        return []

    n_edges = len(canon)
    P = cfg.n_path_points
    d = model.dim
    start = means[[a for a, _ in canon]]
    stop = means[[b for _, b in canon]]
    ts = np.linspace(0.0, 1.0, P)
    paths = start[:, None, :] + ts[None, :, None] * (stop - start)[:, None, :]

    seg_len = np.linalg.norm(stop - start, axis=1)
    if cfg.step_size is not None:
        alpha = np.full(n_edges, cfg.step_size)
    else:
        alpha = cfg.step_size_scale * seg_len
    alpha = alpha[:, None, None]

    ev = evaluator(model)

    def evaluate(p):
        logd, grad = ev.density_and_gradient(p.reshape(-1, d))
        return logd.reshape(n_edges, P), grad.reshape(n_edges, P, d)

    logd, grad = evaluate(paths)
    alive = np.all(np.isfinite(logd), axis=1) & np.all(np.isfinite(grad), axis=(1, 2))
    died_at = np.where(alive, -1, 0)
    best_logd = logd.copy()
    best_paths = paths.copy()
    best_bot = np.where(alive, logd.min(axis=1), -np.inf)

    m1 = np.zeros_like(paths)
    m2 = np.zeros_like(paths)
    scratch = np.empty_like(paths)
    for step in range(1, cfg.n_steps + 1):
        g = grad
        if not np.all(alive):
            g = np.where(alive[:, None, None], grad, 0.0)
        m1 *= cfg.beta1
        np.multiply(g, 1.0 - cfg.beta1, out=scratch)
        m1 += scratch
        m2 *= cfg.beta2
        np.multiply(g, g, out=scratch)
        scratch *= 1.0 - cfg.beta2
        m2 += scratch
        # fold both bias corrections into one scaled update
        np.divide(m2, 1.0 - cfg.beta2**step, out=scratch)
        np.sqrt(scratch, out=scratch)
        scratch += cfg.epsilon
        np.divide(m1, scratch, out=scratch)
        scratch *= alpha / (1.0 - cfg.beta1**step)
        paths[:, 1:-1] += scratch[:, 1:-1]
        for e in range(n_edges):
            if alive[e]:
                paths[e] = respace_polyline(paths[e])
        paths[:, 0] = start
        paths[:, -1] = stop
        logd, grad = evaluate(paths)
        finite = np.all(np.isfinite(logd), axis=1) & np.all(np.isfinite(grad), axis=(1, 2))
        died_at = np.where(alive & ~finite, step, died_at)
        alive &= finite
        bots = np.where(alive, logd.min(axis=1), -np.inf)
        improved = bots > best_bot
        if np.any(improved):
            best_bot = np.where(improved, bots, best_bot)
            best_paths[improved] = paths[improved]
            best_logd[improved] = logd[improved]

    results = []
    for e in range(n_edges):
        if cfg.keep_best:
            pts, ld, bot = best_paths[e], best_logd[e], best_bot[e]
        else:
            pts, ld = paths[e], logd[e]
            bot = float(ld.min()) if alive[e] else -np.inf
        if flips[e]:
            pts = pts[::-1].copy()
            ld = ld[::-1].copy()
        a, b = canon[e]
        ends = (b, a) if flips[e] else (a, b)
        results.append(
            DensityPath(
                endpoints=ends,
                points=pts,
                log_densities=ld,
                bottleneck_log_density=float(bot),
                argmin_index=int(np.argmin(ld)),
                failed_at_step=None if alive[e] or died_at[e] < 0 else int(died_at[e]),
            )
        )
    return results


def optimize_path(m, a: int, b: int, cfg: NebConfig = NebConfig()) -> DensityPath:
    """Optimize the maximum-density path between components a and b."""
    path = optimize_paths(m, [(a, b)], cfg)[0]
    if not np.isfinite(path.bottleneck_log_density):
        raise NumericalError(
            "path optimization produced non-finite values", step=path.failed_at_step
        )
    return path


def straight_line_bottleneck(m, a: int, b: int, n_points: int = 1024) -> float:
    """Minimum log-density over uniform samples of the straight segment."""
    model = _model_of(m)
    if a == b:
        raise ValidationError("endpoints must differ")
    if n_points < 2:
        raise ValidationError("need at least 2 sample points")
    ts = np.linspace(0.0, 1.0, n_points)
    line = model.means[a] + ts[:, None] * (model.means[b] - model.means[a])
    return float(np.min(evaluator(model).log_density(line)))


def path_to_csv(path: DensityPath, fh) -> None:
    """Write path points and per-point log density as CSV rows."""
    d = path.points.shape[1]
    fh.write(",".join([f"x{i}" for i in range(d)] + ["log_density"]) + "\n")
    for pt, ld in zip(path.points, path.log_densities):
        fh.write(",".join([repr(float(v)) for v in pt] + [repr(float(ld))]) + "\n")
