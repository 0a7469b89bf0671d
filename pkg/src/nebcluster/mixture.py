"""Gaussian and Student-t mixture models fitted by EM.

The Student-t family runs the classic ECM with fixed degrees of freedom: the
E-step augments responsibilities with per-point precision weights
u = (df + d) / (df + mahalanobis^2), the M-step reuses the Gaussian updates
with z*u weighting (covariance divisor stays sum(z)).  Covariances get a ridge
term every M-step and a small escalating diagonal jitter if Cholesky still
fails; a fit that produces non-finite log-likelihood is retried per the
configured schedule with a re-derived init seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import FitFailureError, ValidationError

GAUSSIAN = "gaussian"
STUDENT_T = "student_t"

_LOG_2PI = math.log(2.0 * math.pi)
_JITTER_SCALES = (1e-8, 1e-6, 1e-4)


@dataclass(frozen=True)
class FitConfig:
    n_components: int
    family: str = GAUSSIAN
    df: float = 1.0
    init: str = "kmeans"
    max_em_steps: int = 1000
    tolerance: float = 1e-5
    ridge: float = 1e-4
    ridge_on_gaussian: bool = True
    seed: int = 0
    retry_schedule: tuple[tuple[float, int], ...] = ((1e-3, 100000),)

    def validate(self) -> "FitConfig":
        if self.n_components < 1:
            raise ValidationError("n_components must be >= 1")
        if self.family not in (GAUSSIAN, STUDENT_T):
            raise ValidationError(f"unknown family {self.family!r}")
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be > 0")
        if self.ridge < 0:
            raise ValidationError("ridge must be >= 0")
        if self.family == STUDENT_T and self.df <= 0:
            raise ValidationError("df must be positive")
        if self.init != "kmeans":
            raise ValidationError(f"unknown init {self.init!r}")
        return self


@dataclass(frozen=True)
class MixtureModel:
    """Fitted mixture. Weights on the simplex, covariances SPD (full)."""

    family: str
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    df: float = 1.0
    fit_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "means", np.asarray(self.means, dtype=float))
        object.__setattr__(self, "covariances", np.asarray(self.covariances, dtype=float))
        if self.family not in (GAUSSIAN, STUDENT_T):
            raise ValidationError(f"unknown family {self.family!r}")
        k, d = self.means.shape
        if self.weights.shape != (k,) or self.covariances.shape != (k, d, d):
            raise ValidationError("inconsistent mixture parameter shapes")
        if abs(self.weights.sum() - 1.0) > 1e-12 or np.any(self.weights < 0):
            raise ValidationError("weights must form a simplex vector")
        if self.family == STUDENT_T and self.df <= 0:
            raise ValidationError("df must be positive")

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


class _FitDiverged(Exception):
    def __init__(self, reason, iteration):
        super().__init__(reason)
        self.reason = reason
        self.iteration = iteration


# ---------------------------------------------------------------------------
# k-means (used for EM initialization and as an overclustering backend)

def kmeans(X, n_clusters: int, seed=0, n_iter: int = 50):
    """k-means++ seeding followed by up to ``n_iter`` Lloyd iterations.

    Returns (labels, centers). Deterministic for a fixed seed; empty clusters
    are re-seeded with the point farthest from its assigned center.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n_clusters < 1 or n_clusters > n:
        raise ValidationError("need 1 <= n_clusters <= n")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    centers = np.empty((n_clusters, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, n_clusters):
        total = d2.sum()
        if total <= 0:
            centers[c] = X[rng.integers(n)]
        else:
            centers[c] = X[np.searchsorted(np.cumsum(d2), rng.uniform(0, total))]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(n_iter):
        dists = _sq_dists(X, centers)
        new_labels = np.argmin(dists, axis=1)
        for c in range(n_clusters):
            mask = new_labels == c
            if np.any(mask):
                centers[c] = X[mask].mean(axis=0)
            else:
                far = int(np.argmax(dists[np.arange(n), new_labels]))
                centers[c] = X[far]
                new_labels[far] = c
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return labels, centers


def _sq_dists(X, centers):
    return (
        np.sum(X**2, axis=1)[:, None]
        - 2.0 * X @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )


# ---------------------------------------------------------------------------
# density evaluation

_EVAL_CHUNK = 16384


def _cholesky_batch(covariances):
    return np.linalg.cholesky(covariances)


class _Evaluator:
    """Precomputed per-component precisions for fast batched evaluation.

    Mahalanobis distances come from the expanded quadratic form
    x'Px - 2 (P mu)'x + mu'P mu evaluated with one stacked GEMM, chunked over
    points to bound memory. Inputs are ridge-regularized SPD covariances, so
    the tiny cancellation error (order 1e-13) is far below every tolerance
    used downstream.
    """

    def __init__(self, family, df, weights, means, covariances):
        self.family = family
        self.df = df
        self.k, self.d = means.shape
        self.means = means
        chols = _cholesky_batch(covariances)
        eye = np.eye(self.d)
        precisions = np.empty_like(covariances)
        logdets = np.empty(self.k)
        for c in range(self.k):
            inv_l = solve_triangular(chols[c], eye, lower=True, check_finite=False)
            precisions[c] = inv_l.T @ inv_l
            logdets[c] = np.log(np.diag(chols[c])).sum()
        self.prec_stack = precisions.transpose(1, 0, 2).reshape(self.d, self.k * self.d)
        self.lin = np.einsum("kde,ke->kd", precisions, means)  # P_k mu_k
        self.quad = np.einsum("kd,kd->k", self.lin, means)     # mu'P mu
        self.log_weights = np.log(np.maximum(weights, 1e-300))
        if family == GAUSSIAN:
            self.log_norm = -0.5 * self.d * _LOG_2PI - logdets
        else:
            self.log_norm = (
                math.lgamma(0.5 * (df + self.d))
                - math.lgamma(0.5 * df)
                - 0.5 * self.d * math.log(df * math.pi)
                - logdets
            )

    @staticmethod
    def for_model(model: "MixtureModel") -> "_Evaluator":
        return _Evaluator(
            model.family, model.df, model.weights, model.means, model.covariances
        )

    def _maha_chunk(self, X):
        s = (X @ self.prec_stack).reshape(X.shape[0], self.k, self.d)
        maha = np.matmul(s, X[:, :, None])[:, :, 0]
        maha -= 2.0 * (X @ self.lin.T)
        maha += self.quad
        np.maximum(maha, 0.0, out=maha)
        return s, maha

    def _logf(self, maha):
        if self.family == GAUSSIAN:
            return self.log_norm - 0.5 * maha
        return self.log_norm - 0.5 * (self.df + self.d) * np.log1p(maha / self.df)

    def scores(self, X):
        """(per-component log densities, mahalanobis distances), shape (n, K)."""
        n = X.shape[0]
        logf = np.empty((n, self.k))
        maha = np.empty((n, self.k))
        for lo in range(0, n, _EVAL_CHUNK):
            sl = slice(lo, min(lo + _EVAL_CHUNK, n))
            _, m = self._maha_chunk(X[sl])
            maha[sl] = m
            logf[sl] = self._logf(m)
        return logf, maha

    def log_density(self, X):
        logf, _ = self.scores(X)
        return _logsumexp_rows(logf + self.log_weights[None, :])

    def density_and_gradient(self, X):
        n = X.shape[0]
        logp = np.empty(n)
        grad = np.empty((n, self.d))
        for lo in range(0, n, _EVAL_CHUNK):
            sl = slice(lo, min(lo + _EVAL_CHUNK, n))
            xc = X[sl]
            s, maha = self._maha_chunk(xc)
            joint = self._logf(maha) + self.log_weights[None, :]
            shift = np.max(joint, axis=1)
            with np.errstate(under="ignore"):
                resp = np.exp(joint - shift[:, None])
            total = resp.sum(axis=1)
            logp[sl] = shift + np.log(total)
            resp /= total[:, None]
            if self.family == STUDENT_T:
                resp *= (self.df + self.d) / (self.df + maha)
            # grad = -sum_k resp_k (P_k x - P_k mu_k)
            grad[sl] = resp @ self.lin - np.matmul(resp[:, None, :], s)[:, 0, :]
        return logp, grad


def _logsumexp_rows(a):
    m = np.max(a, axis=1)
    with np.errstate(under="ignore"):
        out = m + np.log(np.sum(np.exp(a - m[:, None]), axis=1))
    return out


def _as_points(model, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValidationError(
            f"expected points of dimension {model.dim}, got shape {x.shape}"
        )
    return X, single


def evaluator(model: MixtureModel) -> _Evaluator:
    """Reusable fast evaluator bound to a model's current parameters."""
    return _Evaluator.for_model(model)


def log_density(model: MixtureModel, x):
    """log sum_k w_k f_k(x), max-shifted. Accepts a point or an (n, d) array."""
    X, single = _as_points(model, x)
    out = _Evaluator.for_model(model).log_density(X)
    return float(out[0]) if single else out


def log_density_gradient(model: MixtureModel, x):
    """Analytic gradient of log_density at x (point or (n, d) array)."""
    X, single = _as_points(model, x)
    _, grad = _Evaluator.for_model(model).density_and_gradient(X)
    return grad[0] if single else grad


def density_and_gradient(model: MixtureModel, X):
    """Joint evaluation used by path optimization: (log density, gradient)."""
    return _Evaluator.for_model(model).density_and_gradient(np.asarray(X, dtype=float))


def responsibilities(model: MixtureModel, ps):
    """Posterior component probabilities, one simplex row per point."""
    X = ps.points if hasattr(ps, "points") else np.asarray(ps, dtype=float)
    X, _ = _as_points(model, X)
    ev = _Evaluator.for_model(model)
    logf, _ = ev.scores(X)
    joint = logf + ev.log_weights[None, :]
    with np.errstate(under="ignore"):
        return np.exp(joint - _logsumexp_rows(joint)[:, None])


def hard_assign(model: MixtureModel, ps):
    """Argmax responsibility per point; ties go to the lowest component index."""
    return np.argmax(responsibilities(model, ps), axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# fitting

def fit(ps, cfg: FitConfig) -> MixtureModel:
    """Fit a mixture by EM with k-means init and the configured retry schedule."""
    cfg = cfg.validate()
    X = ps.points if hasattr(ps, "points") else np.asarray(ps, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError("data must be an (n, d) array")
    n, d = X.shape
    if n < cfg.n_components:
        raise ValidationError(
            f"need at least as many points ({n}) as components ({cfg.n_components})"
        )
    if not np.all(np.isfinite(X)):
        raise ValidationError("data contains non-finite values")

    attempts = [(cfg.tolerance, cfg.max_em_steps)] + list(cfg.retry_schedule)
    diagnostics = []
    for attempt, (tol, max_steps) in enumerate(attempts):
        seed = cfg.seed if attempt == 0 else _derived_seed(cfg.seed, attempt)
        try:
            return _fit_once(X, cfg, tol, int(max_steps), seed, attempt)
        except _FitDiverged as exc:
            diagnostics.append(
                {
                    "attempt": attempt,
                    "seed": seed,
                    "tolerance": tol,
                    "max_em_steps": int(max_steps),
                    "reason": exc.reason,
                    "iteration": exc.iteration,
                }
            )
    raise FitFailureError(
        f"mixture fit failed after {len(attempts)} attempts", diagnostics=diagnostics
    )


def _derived_seed(seed: int, attempt: int) -> int:
    return (int(seed) * 1000003 + attempt * 7919 + 1) % (2**63)


def _fit_once(X, cfg, tol, max_steps, seed, attempt) -> MixtureModel:
    n, d = X.shape
    k = cfg.n_components
    rng = np.random.default_rng(seed)
    labels, _ = kmeans(X, k, rng)
    resp = np.zeros((n, k))
    resp[np.arange(n), labels] = 1.0
    u = np.ones((n, k))
    apply_ridge = cfg.family == STUDENT_T or cfg.ridge_on_gaussian
    ridge = cfg.ridge if apply_ridge else 0.0

    weights, means, covs = _m_step(X, resp, u, cfg.family, ridge)
    covs, _ = _ensure_pd(covs)

    def _evaluate():
        ev = _Evaluator(cfg.family, cfg.df, weights, means, covs)
        logf, maha = ev.scores(X)
        joint = logf + ev.log_weights[None, :]
        row_ll = _logsumexp_rows(joint)
        return joint, row_ll, maha, float(row_ll.sum())

    joint, row_ll, maha, loglik = _evaluate()
    if not math.isfinite(loglik):
        raise _FitDiverged("non-finite log-likelihood", 0)
    history = [loglik]
    converged = False
    for it in range(1, max_steps + 1):
        with np.errstate(under="ignore"):
            resp = np.exp(joint - row_ll[:, None])
        if cfg.family == STUDENT_T:
            u = (cfg.df + d) / (cfg.df + maha)
        weights, means, covs = _m_step(X, resp, u, cfg.family, ridge)
        covs, _ = _ensure_pd(covs)
        prev = loglik
        joint, row_ll, maha, loglik = _evaluate()
        if not math.isfinite(loglik):
            raise _FitDiverged("non-finite log-likelihood", it)
        history.append(loglik)
        if abs(loglik - prev) <= tol * abs(loglik):
            converged = True
            break

    fit_meta = {
        "seed": int(seed),
        "attempt": attempt,
        "iterations_run": len(history) - 1,
        "final_loglik": loglik,
        "converged": converged,
        "tolerance": tol,
        "max_em_steps": max_steps,
        "loglik_history": history,
    }
    return MixtureModel(
        family=cfg.family,
        weights=weights,
        means=means,
        covariances=covs,
        df=cfg.df,
        fit_meta=fit_meta,
    )


def _m_step(X, resp, u, family, ridge):
    n, d = X.shape
    k = resp.shape[1]
    zu = resp * u if family == STUDENT_T else resp
    nk = resp.sum(axis=0)
    zu_sum = zu.sum(axis=0)
    weights = nk / n
    weights = weights / weights.sum()
    means = (zu.T @ X) / np.maximum(zu_sum, 1e-300)[:, None]
    covs = np.empty((k, d, d))
    eye = np.eye(d)
    for c in range(k):
        dx = X - means[c]
        covs[c] = (dx * zu[:, c][:, None]).T @ dx / max(nk[c], 1e-300) + ridge * eye
    return weights, means, covs


def _ensure_pd(covs):
    """Cholesky with escalating diagonal jitter; raises _FitDiverged if hopeless."""
    try:
        return covs, _cholesky_batch(covs)
    except np.linalg.LinAlgError:
        pass
    covs = covs.copy()
    d = covs.shape[1]
    chols = np.empty_like(covs)
    for c in range(covs.shape[0]):
        if not np.all(np.isfinite(covs[c])):
            raise _FitDiverged("non-finite covariance", None)
        for level, scale in enumerate((0.0,) + _JITTER_SCALES):
            bump = scale * np.trace(covs[c]) / d
            try:
                chols[c] = np.linalg.cholesky(covs[c] + bump * np.eye(d))
                if level > 0:
                    covs[c] = covs[c] + bump * np.eye(d)
                break
            except np.linalg.LinAlgError:
                if scale == _JITTER_SCALES[-1]:
                    raise _FitDiverged("covariance not positive definite", None) from None
    return covs, chols


# ---------------------------------------------------------------------------
# serialization

def model_to_dict(model: MixtureModel) -> dict:
    return {
        "family": model.family,
        "df": model.df,
        "n_components": model.n_components,
        "dimension": model.dim,
        "weights": model.weights.tolist(),
        "means": model.means.tolist(),
        "covariances": model.covariances.tolist(),
        "fit_meta": model.fit_meta,
    }


def model_from_dict(data: dict) -> MixtureModel:
    return MixtureModel(
        family=data["family"],
        weights=np.asarray(data["weights"], dtype=float),
        means=np.asarray(data["means"], dtype=float),
        covariances=np.asarray(data["covariances"], dtype=float),
        df=float(data.get("df", 1.0)),
        fit_meta=dict(data.get("fit_meta", {})),
    )


def save_model(model: MixtureModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True, indent=1)


def load_model(path) -> MixtureModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
