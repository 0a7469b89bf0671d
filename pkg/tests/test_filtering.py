import numpy as np
import pytest

from nebcluster import (
    FilterConfig,
    FilterFailureError,
    MixtureModel,
    PointSet,
    filter_components,
    log_density,
)
from nebcluster.filtering import TOO_ELONGATED, TOO_SMALL, component_elongations


def _model(weights, means, covs, family="gaussian"):
    return MixtureModel(family=family, weights=weights, means=means, covariances=covs)


def test_small_component_removed():
    rng = np.random.default_rng(0)
    # component 1 sits far away with nearly no mass assigned to it
    model = _model(
        [0.995, 0.005],
        [[0.0, 0.0], [50.0, 50.0]],
        [np.eye(2), np.eye(2)],
    )
    points = rng.standard_normal((200, 2))
    points = np.vstack([points, [[49.5, 50.0], [50.5, 50.0]]])  # 2 points < min_points
    out = filter_components(model, PointSet(points=points), FilterConfig(min_points=10))
    assert out.removed == [(1, TOO_SMALL)]
    assert out.survivor_map == {0: 0}
    assert out.model.n_components == 1
    assert out.model.weights[0] == pytest.approx(1.0)


def test_elongation_threshold_arithmetic():
    # d=8: eigenvalues (4000, 1, ...) -> ratio 4000 <= 500*8 -> kept
    d = 8
    cov_kept = np.diag([4000.0] + [1.0] * (d - 1))
    # d=2: eigenvalues (2000, 1) -> ratio 2000 > 1000 -> removed
    cov_gone = np.diag([2000.0, 1.0])

    rng = np.random.default_rng(1)
    model8 = _model([0.5, 0.5], np.zeros((2, d)) + [[0], [40]], [cov_kept, np.eye(d)])
    pts8 = np.vstack(
        [rng.standard_normal((100, d)) * 5, rng.standard_normal((100, d)) + 40]
    )
    out8 = filter_components(model8, PointSet(points=pts8), FilterConfig())
    assert out8.removed == []

    model2 = _model([0.5, 0.5], [[0.0, 0.0], [40.0, 40.0]], [cov_gone, np.eye(2)])
    pts2 = np.vstack(
        [rng.standard_normal((100, 2)) * [40, 1], rng.standard_normal((100, 2)) + 40]
    )
    out2 = filter_components(model2, PointSet(points=pts2), FilterConfig())
    assert out2.removed == [(0, TOO_ELONGATED)]
    assert out2.survivor_map == {1: 0}


def test_all_removed_is_an_error():
    model = _model([1.0], [[0.0, 0.0]], [np.eye(2)])
    ps = PointSet(points=np.zeros((3, 2)))
    with pytest.raises(FilterFailureError):
        filter_components(model, ps, FilterConfig(min_points=10))


def test_filtering_idempotent_and_reasons_reproducible():
    rng = np.random.default_rng(2)
    k = 6
    means = rng.uniform(-20, 20, size=(k, 2))
    covs = np.array([np.eye(2)] * k)
    covs[3] = np.diag([3000.0, 1.0])  # elongated
    w = np.full(k, 1.0 / k)
    model = _model(w, means, covs)
    points = np.vstack(
        [means[c] + rng.standard_normal((80, 2)) for c in range(k) if c != 5]
        + [means[5] + 0.01 * rng.standard_normal((3, 2))]
    )
    ps = PointSet(points=points)
    out = filter_components(model, ps, FilterConfig())
    reasons = dict(out.removed)
    assert reasons[3] == TOO_ELONGATED
    assert reasons[5] == TOO_SMALL
    again = filter_components(out.model, ps, FilterConfig())
    assert again.removed == []
    assert np.array_equal(again.model.means, out.model.means)


def test_density_renormalization_bound():
    rng = np.random.default_rng(3)
    means = np.array([[0.0, 0.0], [30.0, 0.0], [0.0, 30.0]])
    model = _model([0.5, 0.45, 0.05], means, [np.eye(2)] * 3)
    points = np.vstack(
        [
            means[0] + rng.standard_normal((100, 2)),
            means[1] + rng.standard_normal((100, 2)),
            means[2] + rng.standard_normal((5, 2)),
        ]
    )
    out = filter_components(model, PointSet(points=points), FilterConfig())
    surviving_mass = 0.95
    for x in rng.uniform(-5, 35, size=(50, 2)):
        before = np.exp(log_density(model, x))
        after = np.exp(log_density(out.model, x))
        assert after <= before / surviving_mass + 1e-12


def test_elongation_helper_matches_eigvals():
    cov = np.array([[4.0, 1.0], [1.0, 1.0]])
    model = _model([1.0], [[0.0, 0.0]], [cov])
    eigs = np.linalg.eigvalsh(cov)
    assert component_elongations(model)[0] == pytest.approx(eigs[1] / eigs[0])
