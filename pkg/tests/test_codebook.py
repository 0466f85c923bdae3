import numpy as np
import pytest

from vlase import InputError, TrainingError, assign_nearest, train_codebook
from vlase.codebook import (
    DEFAULT_CLUSTERS,
    DEFAULT_CLUSTERS_SPARSE,
    Codebook,
    TrainConfig,
    assign_batch,
    kmeans_objective,
)

from oracles import lloyd_kmeans, nearest_scan


def _clouds(rng, centers, spread, per_cloud):
    pts = [c + spread * rng.standard_normal((per_cloud, len(c))) for c in centers]
    return np.concatenate(pts), [np.asarray(c, float) for c in centers]


def _as_batches(points, batch_size):
    return [points[i : i + batch_size] for i in range(0, len(points), batch_size)]


class TestTrainCodebook:
    def test_single_cluster_single_batch_is_mean(self, rng):
        batch = rng.random((37, 4))
        cb = train_codebook([batch], clusters=1, seed=3, max_epochs=1)
        assert np.allclose(cb.centers[0], batch.mean(axis=0), atol=1e-9)

    def test_single_cluster_stays_mean_across_epochs(self, rng):
        batch = rng.random((20, 2))
        cb = train_codebook([batch], clusters=1, seed=0, max_epochs=6)
        assert np.allclose(cb.centers[0], batch.mean(axis=0), atol=1e-9)

    def test_recovers_separated_clouds(self, rng):
        true = [(0.0, 0.0), (100.0, 0.0), (0.0, 100.0), (100.0, 100.0)]
        points, true_centers = _clouds(rng, true, spread=1.0, per_cloud=100)
        order = rng.permutation(len(points))
        batches = _as_batches(points[order], 40)
        cb = train_codebook(batches, clusters=4, seed=11, max_epochs=10)
        # cloud radius here: all samples within ~4 sigma of the centroid
        for c_true in true_centers:
            nearest = cb.centers[
                np.argmin(np.linalg.norm(cb.centers - c_true, axis=1))
            ]
            assert np.linalg.norm(nearest - c_true) < 4.0
        # independent full-batch oracle run to convergence from the same spots
        oracle = lloyd_kmeans(points, cb.centers)
        for learned in cb.centers:
            gap = min(np.linalg.norm(learned - oc) for oc in oracle)
            assert gap < 4.0

    def test_paper_cluster_defaults(self):
        assert DEFAULT_CLUSTERS == 64
        assert DEFAULT_CLUSTERS_SPARSE == 32

    def test_deterministic_given_seed(self, rng):
        batches = [rng.random((15, 3)) for _ in range(5)]
        a = train_codebook(batches, clusters=6, seed=42)
        b = train_codebook(batches, clusters=6, seed=42)
        assert np.array_equal(a.centers, b.centers)
        assert a == b

    def test_seed_changes_result(self, rng):
        batches = [rng.random((30, 3)) for _ in range(4)]
        a = train_codebook(batches, clusters=8, seed=1, max_epochs=1)
        b = train_codebook(batches, clusters=8, seed=2, max_epochs=1)
        assert not np.array_equal(a.centers, b.centers)

    def test_centers_stay_inside_bounding_box(self, rng):
        batches = [1.0 + 2.0 * rng.random((25, 3)) for _ in range(6)]
        cb = train_codebook(batches, clusters=5, seed=7)
        stacked = np.concatenate(batches)
        lo, hi = stacked.min(axis=0), stacked.max(axis=0)
        assert (cb.centers >= lo - 1e-9).all()
        assert (cb.centers <= hi + 1e-9).all()

    def test_objective_not_worse_than_init(self, rng):
        batches = [rng.random((30, 4)) for _ in range(5)]
        stacked = np.concatenate(batches)
        seed = 19
        # reproduce the seeded initial centers: distinct sample of the stream
        init_rng = np.random.default_rng(seed)
        order = init_rng.permutation(len(stacked))
        init = stacked[order[:6]]
        cb = train_codebook(batches, clusters=6, seed=seed)
        assert kmeans_objective(stacked, cb.centers) <= kmeans_objective(
            stacked, init
        ) + 1e-9

    def test_distinct_centers_on_distinct_data(self, rng):
        batches = [rng.random((40, 2))]
        cb = train_codebook(batches, clusters=5, seed=0)
        for i in range(5):
            for j in range(i + 1, 5):
                assert not np.array_equal(cb.centers[i], cb.centers[j])

    def test_too_few_features_raises(self, rng):
        with pytest.raises(TrainingError):
            train_codebook([rng.random((3, 2))], clusters=4, seed=0)

    def test_dimension_mismatch_raises(self, rng):
        with pytest.raises(InputError):
            train_codebook([rng.random((5, 2)), rng.random((5, 3))], clusters=2, seed=0)

    def test_too_few_distinct_features_raises(self):
        same = np.tile([1.0, 2.0], (10, 1))
        with pytest.raises(TrainingError):
            train_codebook([same], clusters=2, seed=0)

    def test_empty_batches_are_skipped(self, rng):
        batches = [np.zeros((0, 3)), rng.random((12, 3)), np.zeros((0, 3))]
        cb = train_codebook(batches, clusters=3, seed=5)
        assert cb.num_clusters == 3

    def test_starved_center_is_reseeded(self, rng):
        # two tight blobs + one extreme outlier; with M=3 some center usually
        # starves in epoch one and must land on a data point afterwards
        blob_a = rng.normal(0.0, 0.01, (30, 2))
        blob_b = rng.normal(5.0, 0.01, (30, 2))
        outlier = np.array([[500.0, 500.0]])
        points = np.concatenate([blob_a, blob_b, outlier])
        cb = train_codebook(_as_batches(points, 10), clusters=3, seed=2, max_epochs=5)
        box_lo, box_hi = points.min(axis=0), points.max(axis=0)
        assert (cb.centers >= box_lo - 1e-9).all()
        assert (cb.centers <= box_hi + 1e-9).all()
        # all three groups get a center once the starved one is reseeded
        assigns = {assign_nearest(p, cb) for p in [blob_a[0], blob_b[0], outlier[0]]}
        assert len(assigns) == 3


class TestAssignNearest:
    def test_exact_center_match(self, rng):
        centers = rng.random((5, 3))
        cb = Codebook(centers, TrainConfig(seed=0))
        assert assign_nearest(centers[3], cb) == 3

    def test_tie_breaks_to_lowest_index(self):
        cb = Codebook(np.array([[0.0], [10.0]]), TrainConfig(seed=0))
        assert assign_nearest(np.array([5.0]), cb) == 0

    def test_matches_exhaustive_scan(self, rng):
        centers = rng.random((8, 4))
        cb = Codebook(centers, TrainConfig(seed=0))
        feats = rng.random((100, 4))
        for feat in feats:
            assert assign_nearest(feat, cb) == nearest_scan(feat, centers)
        batch = assign_batch(feats, centers)
        assert batch.tolist() == [nearest_scan(f, centers) for f in feats]

    def test_dimension_mismatch(self, rng):
        cb = Codebook(rng.random((4, 3)), TrainConfig(seed=0))
        with pytest.raises(InputError):
            assign_nearest(np.array([1.0, 2.0]), cb)

    def test_invariant_under_farther_centers(self, rng):
        centers = rng.random((4, 3))
        cb = Codebook(centers, TrainConfig(seed=0))
        feat = rng.random(3)
        base = assign_nearest(feat, cb)
        far = np.vstack([centers, feat + 100.0, feat - 50.0])
        cb_far = Codebook(far, TrainConfig(seed=0))
        assert assign_nearest(feat, cb_far) == base
