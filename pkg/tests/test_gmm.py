import numpy as np
import pytest

from vidseg.gmm import (
    COVARIANCE_FLOOR,
    GaussianMixture,
    fit_gmm,
    responsibilities,
    sample_training_sets,
)
from vidseg.proposals import ConfidenceField
from vidseg.video import SuperpixelStats

LOG_STANDARD_NORMAL_3D_PEAK = -2.756815599614018  # log((2*pi)**-1.5)
LOG_FLOOR = -27.631021115928547  # log(1e-12)


def _stats(colors):
    colors = np.asarray(colors, dtype=np.float64)
    n = len(colors)
    return SuperpixelStats(
        pixel_count=[np.ones(n, dtype=np.int64)],
        mean_color=[colors],
        centroid=[np.zeros((n, 2))],
    )


def _field(confidences):
    return ConfidenceField("c", [np.asarray(confidences, dtype=np.float64)], "adapted")


def test_training_sets_all_object_degenerate():
    with pytest.raises(ValueError, match="degenerate training set"):
        sample_training_sets(_field([1.0, 1.0]), _stats([[0, 0, 0], [1, 1, 1]]))


def test_training_sets_half_confidence():
    (oc, ow), (bc, bw) = sample_training_sets(
        _field([0.5, 0.5]), _stats([[0, 0, 0], [9, 9, 9]])
    )
    assert len(oc) == len(bc) == 2
    assert np.allclose(ow, 0.5) and np.allclose(bw, 0.5)


def test_training_sets_complement_weights():
    (oc, ow), (bc, bw) = sample_training_sets(
        _field([0.9, 0.1]), _stats([[0, 0, 0], [9, 9, 9]])
    )
    assert np.allclose(ow, [0.9, 0.1])
    assert np.allclose(bw, [0.1, 0.9])


def test_training_sets_weight_cutoff():
    (oc, ow), (bc, bw) = sample_training_sets(
        _field([1e-4, 0.8]), _stats([[0, 0, 0], [9, 9, 9]])
    )
    assert len(oc) == 1 and ow[0] == 0.8  # first superpixel dropped from object set
    assert len(bc) == 2


def test_fit_identical_colors_reduces_components():
    colors = np.tile([40.0, 80.0, 120.0], (30, 1))
    gmm = fit_gmm(colors, np.ones(30), n_components=5, seed=0)
    assert len(gmm.weights) == 1
    assert np.allclose(gmm.means[0], [40, 80, 120])
    assert np.allclose(gmm.covariances[0], np.eye(3) * COVARIANCE_FLOOR)


def _two_cluster_data(rng, n=100, spread=4.0):
    a = rng.normal(0, spread, size=(n, 3)) + np.array([0.0, 0.0, 0.0])
    b = rng.normal(0, spread, size=(n, 3)) + np.array([255.0, 255.0, 255.0])
    return np.clip(a, 0, 255), np.clip(b, 0, 255)


def test_fit_two_clusters(rng):
    a, b = _two_cluster_data(rng)
    colors = np.concatenate([a, b])
    gmm = fit_gmm(colors, np.ones(len(colors)), n_components=2, seed=3)
    order = np.argsort(gmm.means[:, 0])
    assert np.all(np.abs(gmm.means[order[0]] - a.mean(axis=0)) < 5.0)
    assert np.all(np.abs(gmm.means[order[1]] - b.mean(axis=0)) < 5.0)
    assert np.allclose(gmm.weights, 0.5, atol=0.05)


def test_fit_weighted_cluster_mass(rng):
    a, b = _two_cluster_data(rng, n=200)
    colors = np.concatenate([a, b])
    weights = np.concatenate([np.full(200, 0.9), np.full(200, 0.1)])
    gmm = fit_gmm(colors, weights, n_components=2, seed=5)
    heavy = np.argmin(np.linalg.norm(gmm.means - a.mean(axis=0), axis=1))
    assert gmm.weights[heavy] == pytest.approx(0.9, abs=0.05)


def test_log_likelihood_at_mean_identity_covariance():
    gmm = GaussianMixture(
        weights=np.array([1.0]),
        means=np.array([[10.0, 20.0, 30.0]]),
        covariances=np.array([np.eye(3)]),
    )
    assert gmm.log_likelihood([10.0, 20.0, 30.0]) == pytest.approx(
        LOG_STANDARD_NORMAL_3D_PEAK, abs=1e-12
    )


def test_log_likelihood_floor():
    gmm = GaussianMixture(
        weights=np.array([1.0]),
        means=np.array([[0.0, 0.0, 0.0]]),
        covariances=np.array([np.eye(3)]),
    )
    assert gmm.log_likelihood([255.0, 255.0, 255.0]) == pytest.approx(LOG_FLOOR)


def test_log_likelihood_duplicate_components_collapse():
    one = GaussianMixture(
        weights=np.array([1.0]),
        means=np.array([[5.0, 5.0, 5.0]]),
        covariances=np.array([np.eye(3) * 2]),
    )
    two = GaussianMixture(
        weights=np.array([0.5, 0.5]),
        means=np.array([[5.0, 5.0, 5.0], [5.0, 5.0, 5.0]]),
        covariances=np.array([np.eye(3) * 2, np.eye(3) * 2]),
    )
    color = [6.0, 4.0, 5.0]
    assert one.log_likelihood(color) == pytest.approx(two.log_likelihood(color), abs=1e-12)


def test_log_likelihood_permutation_invariant(rng):
    weights = np.array([0.2, 0.5, 0.3])
    means = rng.uniform(0, 255, size=(3, 3))
    covs = np.array([np.eye(3) * s for s in (2.0, 5.0, 9.0)])
    gmm = GaussianMixture(weights, means, covs)
    perm = np.array([2, 0, 1])
    gmm_p = GaussianMixture(weights[perm], means[perm], covs[perm])
    for color in rng.uniform(0, 255, size=(10, 3)):
        assert gmm.log_likelihood(color) == pytest.approx(
            gmm_p.log_likelihood(color), abs=1e-12
        )


def test_em_loglik_monotone(rng):
    a, b = _two_cluster_data(rng, n=80)
    colors = np.concatenate([a, b])
    weights = rng.uniform(0.2, 1.0, size=len(colors))
    for seed in range(5):
        history = []
        fit_gmm(colors, weights, n_components=3, seed=seed, history=history)
        diffs = np.diff(history)
        assert np.all(diffs >= -1e-9)


def test_fit_deterministic(rng):
    a, b = _two_cluster_data(rng)
    colors = np.concatenate([a, b])
    weights = np.ones(len(colors))
    g1 = fit_gmm(colors, weights, n_components=3, seed=11)
    g2 = fit_gmm(colors, weights, n_components=3, seed=11)
    assert np.array_equal(g1.weights, g2.weights)
    assert np.array_equal(g1.means, g2.means)
    assert np.array_equal(g1.covariances, g2.covariances)


def test_responsibilities_sum_to_one(rng):
    a, b = _two_cluster_data(rng, n=50)
    colors = np.concatenate([a, b])
    gmm = fit_gmm(colors, np.ones(len(colors)), n_components=3, seed=2)
    resp, _ = responsibilities(gmm, colors)
    assert np.allclose(resp.sum(axis=1), 1.0, atol=1e-12)


def test_json_round_trip(rng):
    a, b = _two_cluster_data(rng, n=30)
    gmm = fit_gmm(np.concatenate([a, b]), np.ones(60), n_components=2, seed=7)
    clone = GaussianMixture.from_json(gmm.to_json())
    assert np.array_equal(clone.weights, gmm.weights)
    assert np.array_equal(clone.means, gmm.means)
    assert np.array_equal(clone.covariances, gmm.covariances)


def test_fit_rejects_bad_weights():
    with pytest.raises(ValueError):
        fit_gmm(np.zeros((3, 3)), np.array([1.0, 0.0, 1.0]))
