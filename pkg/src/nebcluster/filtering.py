"""Removal of degenerate mixture components before graph construction.

Components with too few hard-assigned points act as noise; components with
highly elongated covariances act as spurious density bridges between distant
clusters. Both are dropped in a single pass and the surviving weights are
renormalized, which rescales the density by a constant and therefore leaves
all bottleneck comparisons unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FilterFailureError, ValidationError
from .mixture import MixtureModel, hard_assign

TOO_SMALL = "too_small"
TOO_ELONGATED = "too_elongated"


@dataclass(frozen=True)
class FilterConfig:
    min_points: int = 10
    elongation_factor: float = 500.0

    def validate(self) -> "FilterConfig":
        if self.min_points < 1:
            raise ValidationError("min_points must be >= 1")
        if self.elongation_factor <= 0:
            raise ValidationError("elongation_factor must be > 0")
        return self


@dataclass
class FilteredModel:
    """Surviving components with renormalized weights plus a removal report."""

    model: MixtureModel
    survivor_map: dict[int, int]
    removed: list[tuple[int, str]] = field(default_factory=list)
    assigned_counts: dict[int, int] = field(default_factory=dict)

    @property
    def n_components(self) -> int:
        return self.model.n_components

    def report(self) -> dict:
        return {
            "n_original": len(self.survivor_map) + len(self.removed),
            "n_surviving": self.model.n_components,
            "survivor_map": {str(k): v for k, v in self.survivor_map.items()},
            "removed": [{"component": c, "reason": r} for c, r in self.removed],
            "assigned_counts": {str(k): v for k, v in self.assigned_counts.items()},
        }


def component_elongations(model: MixtureModel) -> np.ndarray:
    """Covariance condition numbers (largest / smallest eigenvalue)."""
    eigs = np.linalg.eigvalsh(model.covariances)
    smallest = eigs[:, 0]
    ratios = np.where(smallest > 0, eigs[:, -1] / np.maximum(smallest, 1e-300), np.inf)
    return ratios


def filter_components(model: MixtureModel, ps, cfg: FilterConfig = FilterConfig()) -> FilteredModel:
    """Drop too-small and too-elongated components, renormalize the rest.

    Points of removed components re-assign themselves implicitly: downstream
    hard assignment under the renormalized survivor model picks the best
    surviving component for every point.
    """
    cfg = cfg.validate()
    X = ps.points if hasattr(ps, "points") else np.asarray(ps, dtype=float)
    if X.shape[1] != model.dim:
        raise ValidationError("model and data dimensions disagree")
    k = model.n_components
    assignments = hard_assign(model, X)
    counts = np.bincount(assignments, minlength=k)
    ratios = component_elongations(model)
    threshold = cfg.elongation_factor * model.dim

    removed: list[tuple[int, str]] = []
    survivors: list[int] = []
    for c in range(k):
        if counts[c] < cfg.min_points:
            removed.append((c, TOO_SMALL))
        elif ratios[c] > threshold:
            removed.append((c, TOO_ELONGATED))
        else:
            survivors.append(c)
    if not survivors:
        raise FilterFailureError(
            "filtering removed every component; refit or relax the filter"
        )

    weights = model.weights[survivors]
    weights = weights / weights.sum()
    sub = MixtureModel(
        family=model.family,
        weights=weights,
        means=model.means[survivors],
        covariances=model.covariances[survivors],
        df=model.df,
        fit_meta=dict(model.fit_meta),
    )
    survivor_map = {orig: new for new, orig in enumerate(survivors)}
    assigned = {c: int(counts[c]) for c in range(k)}
    return FilteredModel(
        model=sub, survivor_map=survivor_map, removed=removed, assigned_counts=assigned
    )
