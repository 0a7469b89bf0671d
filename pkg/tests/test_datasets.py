import numpy as np
import pytest

from nebcluster import DatasetSpec, IngestionError, PointSet, ValidationError, generate, load_csv, save_csv


def test_gaussian_blobs_matches_defaults():
    ps = generate(DatasetSpec(kind="gaussian_blobs", n_points=1000, dimension=2, n_classes=3, seed=0))
    assert ps.points.shape == (1000, 2)
    assert sorted(np.unique(ps.labels).tolist()) == [0, 1, 2]


def test_hierarchical_six_gaussians_three_groups():
    ps = generate(DatasetSpec(kind="hierarchical_gaussians", n_points=1200, seed=1))
    assert sorted(np.unique(ps.labels).tolist()) == list(range(6))
    group_map = ps.metadata["group_map"]
    assert len(group_map) == 6
    assert sorted(set(group_map.values())) == [0, 1, 2]
    group_labels = ps.metadata["group_labels"]
    assert np.array_equal(group_labels, np.array([group_map[c] for c in ps.labels.tolist()]))


def test_zero_noise_moons_lie_on_arcs():
    ps = generate(DatasetSpec(kind="noisy_moons", n_points=1000, noise=0.0, seed=3))
    upper = ps.points[ps.labels == 0]
    lower = ps.points[ps.labels == 1]
    # outer arc: unit circle at origin; inner arc: radius-1 circle at (1, 0.5)
    assert np.allclose(np.linalg.norm(upper, axis=1), 1.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(lower - np.array([1.0, 0.5]), axis=1), 1.0, atol=1e-12)


def test_generation_deterministic():
    spec = DatasetSpec(kind="hd_student_blobs", n_points=500, dimension=8, seed=11)
    a = generate(spec)
    b = generate(spec)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.labels, b.labels)


def test_labels_match_generating_component():
    spec = DatasetSpec(kind="gaussian_blobs", n_points=900, seed=5, spread=0.5)
    ps = generate(spec)
    # blobs are far apart at spread 0.5: nearest fixed center == label
    centers = np.array([[-6.0, 2.0], [1.0, -7.0], [6.0, 4.0]])
    nearest = np.argmin(
        np.linalg.norm(ps.points[:, None, :] - centers[None], axis=2), axis=1
    )
    assert np.array_equal(nearest, ps.labels)


def test_student_blobs_df_limit_matches_gaussian():
    base = dict(n_points=10000, dimension=8, n_classes=6, seed=2, anisotropy=0.5)
    gauss = generate(DatasetSpec(kind="hd_gaussian_blobs", **base))
    student = generate(DatasetSpec(kind="hd_student_blobs", df=1000.0, **base))
    worst = 0.0
    for c in range(6):
        cg = np.cov(gauss.points[gauss.labels == c].T)
        cs = np.cov(student.points[student.labels == c].T)
        rel = np.linalg.norm(cs - cg) / np.linalg.norm(cg)
        worst = max(worst, rel)
    assert worst < 0.10


def test_invalid_specs_rejected():
    with pytest.raises(ValidationError):
        generate(DatasetSpec(kind="gaussian_blobs", n_points=0))
    with pytest.raises(ValidationError):
        generate(DatasetSpec(kind="noisy_moons", dimension=3))
    with pytest.raises(ValidationError):
        generate(DatasetSpec(kind="nope"))


def test_csv_round_trip(tmp_path):
    ps = generate(DatasetSpec(kind="gaussian_blobs", n_points=50, seed=9))
    path = tmp_path / "blobs.csv"
    save_csv(ps, path)
    back = load_csv(path)
    assert np.array_equal(back.points, ps.points)
    assert np.array_equal(back.labels, ps.labels)


def test_csv_no_labels(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("x0,x1\n0.0,1.0\n2.0,3.0\n4.0,5.0\n")
    ps = load_csv(path)
    assert ps.points.shape == (3, 2)
    assert ps.labels is None


def test_csv_label_column(tmp_path):
    path = tmp_path / "lab.csv"
    path.write_text("x0,label\n0.5,0\n1.5,1\n")
    ps = load_csv(path)
    assert np.array_equal(ps.labels, [0, 1])
    assert ps.points.shape == (2, 1)


def test_csv_rejects_nan_with_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x0,x1\n0.0,1.0\nNaN,2.0\n")
    with pytest.raises(IngestionError) as err:
        load_csv(path)
    assert err.value.row == 2


def test_csv_rejects_ragged_rows(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("x0,x1\n0.0,1.0\n2.0\n")
    with pytest.raises(IngestionError) as err:
        load_csv(path)
    assert err.value.row == 2


def test_save_to_unwritable_path_errors(tmp_path):
    ps = PointSet(points=np.zeros((2, 2)))
    with pytest.raises(OSError):
        save_csv(ps, tmp_path / "missing_dir" / "f.csv")


def test_pointset_validation():
    with pytest.raises(ValidationError):
        PointSet(points=np.array([[np.inf, 0.0]]))
    with pytest.raises(ValidationError):
        PointSet(points=np.zeros((3, 2)), labels=np.array([0, 1]))
    with pytest.raises(ValidationError):
        PointSet(points=np.zeros((2, 2)), labels=np.array([0, -1]))
