"""Clustering agreement (adjusted Rand index) and stability protocols."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitFailureError, ValidationError


def ari(a, b) -> float:
    """Hubert-Arabie adjusted Rand index between two labelings.

    Computed from the contingency table in exact integer arithmetic with a
    single final division. The degenerate 0/0 case (both labelings constant,
    or both all-singletons) is defined as 1.0.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ValidationError("labelings must have equal length")
    n = a.size
    if n < 2:
        raise ValidationError("need at least 2 points")

    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka = int(ai.max()) + 1
    kb = int(bi.max()) + 1
    table = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(v):
        return int(v) * (int(v) - 1) // 2

    s = sum(comb2(v) for v in table.ravel().tolist() if v > 1)
    sum_a = sum(comb2(v) for v in table.sum(axis=1).tolist())
    sum_b = sum(comb2(v) for v in table.sum(axis=0).tolist())
    total = comb2(n)
    # ARI = (s - sum_a*sum_b/total) / ((sum_a+sum_b)/2 - sum_a*sum_b/total)
    num = 2 * (total * s - sum_a * sum_b)
    den = total * (sum_a + sum_b) - 2 * sum_a * sum_b
    if den == 0:
        return 1.0
    return num / den


@dataclass
class StabilityReport:
    """Pairwise-ARI agreement between repeated pipeline runs."""

    runs: list[dict]
    pairwise_ari: np.ndarray
    warnings: list[str] = field(default_factory=list)

    @property
    def offdiag(self) -> np.ndarray:
        n = self.pairwise_ari.shape[0]
        iu = np.triu_indices(n, k=1)
        return self.pairwise_ari[iu]

    def summary(self) -> dict:
        vals = self.offdiag
        if vals.size == 0:
            return {"n_runs": len(self.runs), "mean": None, "min": None, "std": None}
        return {
            "n_runs": len(self.runs),
            "mean": float(vals.mean()),
            "min": float(vals.min()),
            "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
        }

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "pairwise_ari": self.pairwise_ari.tolist(),
            "summary": self.summary(),
            "warnings": list(self.warnings),
        }


def _report_from_labelings(entries, warnings) -> StabilityReport:
    n = len(entries)
    matrix = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i, j] = matrix[j, i] = ari(entries[i][1], entries[j][1])
    runs = [meta for meta, _ in entries]
    return StabilityReport(runs=runs, pairwise_ari=matrix, warnings=warnings)


def seed_stability(config, seeds, jobs: int = 1) -> StabilityReport:
    """Run the full pipeline once per seed and report pairwise ARI."""
    from . import pipeline

    results = pipeline.run_seed_sweep(config, seeds, jobs=jobs)
    entries = []
    warnings = []
    for seed, outcome in zip(seeds, results):
        if isinstance(outcome, FitFailureError):
            warnings.append(f"seed {seed}: fit failed, excluded ({outcome})")
        else:
            entries.append(({"seed": int(seed), "k": int(outcome.k)}, outcome.point_labels))
    return _report_from_labelings(entries, warnings)


def overcluster_stability(config, n_components_list=None, jobs: int = 1) -> StabilityReport:
    """Sweep the initial component count and report pairwise ARI.

    The default sweep is ground-truth k + 5i for i in 2..9, so at least ten
    merges happen at the lowest setting.
    """
    from . import pipeline

    if n_components_list is None:
        k_true = pipeline.ground_truth_k(config)
        n_components_list = [k_true + 5 * i for i in range(2, 10)]
    results = pipeline.run_component_sweep(config, n_components_list, jobs=jobs)
    entries = []
    warnings = []
    for n_comp, outcome in zip(n_components_list, results):
        if isinstance(outcome, FitFailureError):
            warnings.append(f"n_components {n_comp}: fit failed, excluded ({outcome})")
        else:
            entries.append(
                ({"n_components": int(n_comp), "k": int(outcome.k)}, outcome.point_labels)
            )
    return _report_from_labelings(entries, warnings)
