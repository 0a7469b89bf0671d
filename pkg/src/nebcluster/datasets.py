"""Synthetic dataset generators and CSV ingestion.

The 2D generators reproduce the usual toy suite (blobs, anisotropic blobs,
varied-density blobs, two moons, concentric circles) plus a hierarchical
arrangement of six Gaussians grouped pairwise into three super-groups.  The
high-dimensional generators place class centers on a sphere and sample either
Gaussian or Student-t points with optional per-class random covariances, as a
stand-in for externally generated density-connected data (which can still be
ingested through :func:`load_csv`).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import IngestionError, ValidationError

KINDS_2D = (
    "noisy_circles",
    "noisy_moons",
    "varied_density",
    "anisotropic_blobs",
    "gaussian_blobs",
    "hierarchical_gaussians",
)
KINDS_HD = ("hd_gaussian_blobs", "hd_student_blobs")
ALL_KINDS = KINDS_2D + KINDS_HD

# Conventional toy-suite parameters; all overridable through DatasetSpec.
_BLOB_CENTERS = np.array([[-6.0, 2.0], [1.0, -7.0], [6.0, 4.0]])
_VARIED_CENTERS = np.array([[-8.0, -7.0], [0.0, 0.0], [8.0, 6.0]])
_VARIED_STDS = (1.0, 2.5, 0.5)
_ANISO_TRANSFORM = np.array([[0.6, -0.6], [-0.4, 0.8]])

_DEFAULT_CLASSES = {
    "noisy_circles": 2,
    "noisy_moons": 2,
    "varied_density": 3,
    "anisotropic_blobs": 3,
    "gaussian_blobs": 3,
    "hierarchical_gaussians": 6,
    "hd_gaussian_blobs": 6,
    "hd_student_blobs": 6,
}


@dataclass
class PointSet:
    """An n x d sample matrix with optional integer ground-truth labels."""

    points: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            raise ValidationError("points must be a 2D array")
        n, d = self.points.shape
        if n < 1 or d < 1:
            raise ValidationError("point set needs n >= 1 and d >= 1")
        if not np.all(np.isfinite(self.points)):
            raise ValidationError("points contain non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise ValidationError("labels must have length n")
            if np.any(self.labels < 0):
                raise ValidationError("labels must be nonnegative integers")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class DatasetSpec:
    """Recipe for a synthetic dataset.

    Kind-specific knobs: ``noise`` (moons/circles jitter), ``factor`` (circle
    radius ratio), ``spread`` (blob std), ``center_radius`` and ``anisotropy``
    (hd generators), ``df`` (hd_student_blobs tail weight), ``imbalance``
    (relative class weights).
    """

    kind: str
    n_points: int | None = None
    dimension: int | None = None
    n_classes: int | None = None
    seed: int = 0
    noise: float | None = None
    factor: float = 0.5
    spread: float = 1.0
    center_radius: float = 5.0
    anisotropy: float | None = None
    df: float = 4.0
    imbalance: tuple[float, ...] | None = None

    def resolved(self) -> "DatasetSpec":
        """Fill in kind-dependent defaults for unset fields."""
        if self.kind not in ALL_KINDS:
            raise ValidationError(f"unknown dataset kind {self.kind!r}")
        n_classes = self.n_classes
        if n_classes is None:
            n_classes = _DEFAULT_CLASSES[self.kind]
        dimension = self.dimension
        if dimension is None:
            dimension = 2 if self.kind in KINDS_2D else 8
        n_points = self.n_points
        if n_points is None:
            if self.kind in KINDS_HD:
                n_points = 10000
            elif self.kind == "hierarchical_gaussians":
                n_points = 1200
            else:
                n_points = 1000
        noise = self.noise
        if noise is None:
            noise = 0.05 if self.kind in ("noisy_circles", "noisy_moons") else 0.0
        anisotropy = self.anisotropy
        if anisotropy is None:
            anisotropy = 0.5 if self.kind == "hd_student_blobs" else 0.0
        return replace(
            self,
            n_points=n_points,
            dimension=dimension,
            n_classes=n_classes,
            noise=noise,
            anisotropy=anisotropy,
        )

    def validate(self) -> "DatasetSpec":
        spec = self.resolved()
        if spec.n_points < 1:
            raise ValidationError("n_points must be >= 1")
        if spec.kind in KINDS_2D and spec.dimension != 2:
            raise ValidationError(f"{spec.kind} requires dimension 2")
        if spec.kind in KINDS_HD and spec.dimension < 2:
            raise ValidationError("hd generators require dimension >= 2")
        if spec.n_classes < 1:
            raise ValidationError("n_classes must be >= 1")
        if spec.kind in ("noisy_circles", "noisy_moons") and spec.n_classes != 2:
            raise ValidationError(f"{spec.kind} has exactly 2 classes")
        if spec.kind == "hierarchical_gaussians" and spec.n_classes != 6:
            raise ValidationError("hierarchical_gaussians has exactly 6 classes")
        if spec.noise < 0:
            raise ValidationError("noise must be >= 0")
        if spec.imbalance is not None and len(spec.imbalance) != spec.n_classes:
            raise ValidationError("imbalance length must equal n_classes")
        if spec.kind == "hd_student_blobs" and spec.df <= 0:
            raise ValidationError("df must be positive")
        return spec

    def to_dict(self) -> dict:
        spec = self.resolved()
        out = {
            "kind": spec.kind,
            "n_points": spec.n_points,
            "dimension": spec.dimension,
            "n_classes": spec.n_classes,
            "seed": spec.seed,
            "noise": spec.noise,
            "factor": spec.factor,
            "spread": spec.spread,
            "center_radius": spec.center_radius,
            "anisotropy": spec.anisotropy,
            "df": spec.df,
        }
        if spec.imbalance is not None:
            out["imbalance"] = list(spec.imbalance)
        return out

    @staticmethod
    def from_dict(data: dict) -> "DatasetSpec":
        data = dict(data)
        if "imbalance" in data and data["imbalance"] is not None:
            data["imbalance"] = tuple(data["imbalance"])
        return DatasetSpec(**data)


def _class_counts(n: int, k: int, weights) -> np.ndarray:
    """Split n points over k classes (largest-remainder rounding)."""
    if weights is None:
        weights = np.full(k, 1.0 / k)
    else:
        weights = np.asarray(weights, dtype=float)
        weights = weights / weights.sum()
    raw = weights * n
    counts = np.floor(raw).astype(np.int64)
    order = np.argsort(-(raw - counts), kind="stable")
    for i in range(n - counts.sum()):
        counts[order[i % k]] += 1
    if np.any(counts < 1):
        raise ValidationError("each class needs at least one point")
    return counts


def _labels_from_counts(counts) -> np.ndarray:
    return np.repeat(np.arange(len(counts), dtype=np.int64), counts)


def _gaussian_blob_points(rng, counts, centers, stds) -> np.ndarray:
    parts = []
    for c, (center, std) in enumerate(zip(centers, stds)):
        parts.append(center + std * rng.standard_normal((counts[c], len(center))))
    return np.vstack(parts)


def _hd_centers_covs(rng, k, d, radius, spread, anisotropy):
    """Shared center/covariance pipeline for both hd generators.

    Consumes the RNG identically regardless of family so the Student-t
    generator reduces to the Gaussian one in the df -> infinity limit.
    """
    centers = np.empty((k, d))
    for c in range(k):
        for _ in range(100):
            v = rng.standard_normal(d)
            v *= radius / np.linalg.norm(v)
            # floor on pairwise separation: classes touch through their tails
            # but no pair collapses onto the same region of the sphere
            if c == 0 or np.linalg.norm(centers[:c] - v, axis=1).min() >= 1.1 * radius:
                break
        centers[c] = v
    chols = np.empty((k, d, d))
    for c in range(k):
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        q = q * np.sign(np.diag(r))
        scales = spread * np.exp(rng.uniform(-anisotropy, anisotropy, size=d))
        if anisotropy == 0.0:
            chols[c] = spread * np.eye(d)
        else:
            cov = (q * scales**2) @ q.T
            chols[c] = np.linalg.cholesky(cov)
    return centers, chols


def _generate_hd(spec: DatasetSpec, rng) -> np.ndarray:
    counts = _class_counts(spec.n_points, spec.n_classes, spec.imbalance)
    centers, chols = _hd_centers_covs(
        rng, spec.n_classes, spec.dimension, spec.center_radius, spec.spread, spec.anisotropy
    )
    z = rng.standard_normal((spec.n_points, spec.dimension))
    if spec.kind == "hd_student_blobs":
        w = rng.chisquare(spec.df, size=spec.n_points)
        z = z * np.sqrt(spec.df / w)[:, None]
    points = np.empty_like(z)
    start = 0
    for c in range(spec.n_classes):
        stop = start + counts[c]
        points[start:stop] = centers[c] + z[start:stop] @ chols[c].T
        start = stop
    return points


def _generate_moons(spec: DatasetSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    counts = _class_counts(spec.n_points, 2, spec.imbalance)
    t_out = np.linspace(0.0, math.pi, counts[0])
    t_in = np.linspace(0.0, math.pi, counts[1])
    outer = np.column_stack([np.cos(t_out), np.sin(t_out)])
    inner = np.column_stack([1.0 - np.cos(t_in), 1.0 - np.sin(t_in) - 0.5])
    points = np.vstack([outer, inner])
    points = points + spec.noise * rng.standard_normal(points.shape)
    return points, _labels_from_counts(counts)


def _generate_circles(spec: DatasetSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    counts = _class_counts(spec.n_points, 2, spec.imbalance)
    t_out = np.linspace(0.0, 2.0 * math.pi, counts[0], endpoint=False)
    t_in = np.linspace(0.0, 2.0 * math.pi, counts[1], endpoint=False)
    outer = np.column_stack([np.cos(t_out), np.sin(t_out)])
    inner = spec.factor * np.column_stack([np.cos(t_in), np.sin(t_in)])
    points = np.vstack([outer, inner])
    points = points + spec.noise * rng.standard_normal(points.shape)
    return points, _labels_from_counts(counts)


def _generate_hierarchical(spec: DatasetSpec, rng) -> tuple[np.ndarray, np.ndarray, dict]:
    counts = _class_counts(spec.n_points, 6, spec.imbalance)
    group_angles = np.deg2rad([90.0, 210.0, 330.0])
    group_centers = 8.0 * np.column_stack([np.cos(group_angles), np.sin(group_angles)])
    # pair members 8 sigma apart: clearly two modes, far closer than the
    # ~14-unit gap between groups, and essentially zero assignment overlap
    pair_sep = 4.0
    std = 0.5 * spec.spread
    centers = []
    for g, gc in enumerate(group_centers):
        # split each group along its tangential direction
        tangent = np.array([-math.sin(group_angles[g]), math.cos(group_angles[g])])
        centers.append(gc + 0.5 * pair_sep * tangent)
        centers.append(gc - 0.5 * pair_sep * tangent)
    points = _gaussian_blob_points(rng, counts, centers, [std] * 6)
    labels = _labels_from_counts(counts)
    group_map = {c: c // 2 for c in range(6)}
    meta = {
        "group_map": group_map,
        "group_labels": np.array([group_map[c] for c in labels], dtype=np.int64),
    }
    return points, labels, meta


def generate(spec: DatasetSpec) -> PointSet:
    """Generate a synthetic dataset. Deterministic for a fixed spec."""
    spec = spec.validate()
    rng = np.random.default_rng(spec.seed)
    metadata: dict = {"spec": spec.to_dict()}

    if spec.kind == "noisy_moons":
        points, labels = _generate_moons(spec, rng)
    elif spec.kind == "noisy_circles":
        points, labels = _generate_circles(spec, rng)
    elif spec.kind == "gaussian_blobs":
        counts = _class_counts(spec.n_points, spec.n_classes, spec.imbalance)
        centers = _default_2d_centers(spec.n_classes, rng)
        points = _gaussian_blob_points(rng, counts, centers, [spec.spread] * spec.n_classes)
        labels = _labels_from_counts(counts)
    elif spec.kind == "varied_density":
        counts = _class_counts(spec.n_points, spec.n_classes, spec.imbalance)
        if spec.n_classes == 3:
            centers, stds = _VARIED_CENTERS, [s * spec.spread for s in _VARIED_STDS]
        else:
            centers = _default_2d_centers(spec.n_classes, rng)
            stds = [spec.spread * (0.5 + c) for c in range(spec.n_classes)]
        points = _gaussian_blob_points(rng, counts, centers, stds)
        labels = _labels_from_counts(counts)
    elif spec.kind == "anisotropic_blobs":
        counts = _class_counts(spec.n_points, spec.n_classes, spec.imbalance)
        centers = _default_2d_centers(spec.n_classes, rng)
        points = _gaussian_blob_points(rng, counts, centers, [spec.spread] * spec.n_classes)
        points = points @ _ANISO_TRANSFORM
        labels = _labels_from_counts(counts)
    elif spec.kind == "hierarchical_gaussians":
        points, labels, meta = _generate_hierarchical(spec, rng)
        metadata.update(meta)
    else:
        points = _generate_hd(spec, rng)
        labels = _labels_from_counts(_class_counts(spec.n_points, spec.n_classes, spec.imbalance))

    name = f"{spec.kind}_n{spec.n_points}_d{spec.dimension}_s{spec.seed}"
    return PointSet(points=points, labels=labels, name=name, metadata=metadata)


def _default_2d_centers(k: int, rng) -> np.ndarray:
    if k == 3:
        return _BLOB_CENTERS.copy()
    # fall back to well-separated random centers for non-default class counts
    centers = []
    while len(centers) < k:
        c = rng.uniform(-10.0, 10.0, size=2)
        if all(np.linalg.norm(c - p) >= 5.0 for p in centers):
            centers.append(c)
    return np.array(centers)


def load_csv(path, label_column: str | None = "label") -> PointSet:
    """Read a PointSet from CSV (header row, numeric cells).

    A column whose header equals ``label_column`` becomes the labels; pass
    ``label_column=None`` to force every column to be read as a coordinate.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line.rstrip("\n") for line in fh]
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    lines = [line for line in lines if line.strip()]
    if len(lines) < 2:
        raise IngestionError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in lines[0].split(",")]
    label_idx = None
    if label_column is not None and label_column in header:
        label_idx = header.index(label_column)
    n_cols = len(header)
    rows = []
    labels = [] if label_idx is not None else None
    for r, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        if len(cells) != n_cols:
            raise IngestionError(f"{path}: expected {n_cols} columns, got {len(cells)}", row=r)
        values = []
        for c, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError as exc:
                raise IngestionError(f"{path}: cannot parse {cell!r}", row=r) from exc
            if not math.isfinite(v):
                raise IngestionError(f"{path}: non-finite value {cell!r}", row=r)
            if c == label_idx:
                if v != int(v) or v < 0:
                    raise IngestionError(f"{path}: label must be a nonnegative integer", row=r)
                labels.append(int(v))
            else:
                values.append(v)
        rows.append(values)
    points = np.asarray(rows, dtype=float)
    labels_arr = np.asarray(labels, dtype=np.int64) if labels is not None else None
    return PointSet(points=points, labels=labels_arr, name=os.path.basename(str(path)))


def save_csv(ps: PointSet, path) -> None:
    """Write a PointSet as CSV; round-trips bit-exactly through load_csv."""
    d = ps.dim
    header = [f"x{i}" for i in range(d)]
    if ps.labels is not None:
        header.append("label")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(ps.n):
            cells = [repr(float(v)) for v in ps.points[i]]
            if ps.labels is not None:
                cells.append(str(int(ps.labels[i])))
            fh.write(",".join(cells) + "\n")
