"""Sequential (mini-batch) k-means codebook training and nearest-center
assignment.

Training is a single logical stream by contract: batches are consumed in
order and updates applied sequentially, so results are bit-reproducible for
a fixed seed. ``assign_nearest``/``assign_batch`` are pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError, TrainingError
from .features import AugmentConfig

DEFAULT_CLUSTERS = 64
DEFAULT_CLUSTERS_SPARSE = 32  # 128-dim sparse descriptors (e.g. SIFT-style)
DEFAULT_MAX_EPOCHS = 10
DEFAULT_TOL = 1e-4

_ASSIGN_CHUNK = 4096


@dataclass(frozen=True)
class TrainConfig:
    """Everything that determined a codebook: seed, schedule, and the
    feature-extraction config the training batches were produced with."""

    seed: int
    max_epochs: int = DEFAULT_MAX_EPOCHS
    tol: float = DEFAULT_TOL
    augment: AugmentConfig | None = None
    batch_rule: str = "per-image"


@dataclass(eq=False)
class Codebook:
    """M cluster centers in D dimensions plus the config that produced them."""

    centers: np.ndarray
    config: TrainConfig
    epochs_run: int = 0

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise InputError("codebook centers must be a non-empty (M, D) array")
        if not np.isfinite(centers).all():
            raise InputError("codebook centers must be finite")
        centers = centers.copy()
        centers.flags.writeable = False
        object.__setattr__(self, "centers", centers)

    @property
    def num_clusters(self) -> int:
        return int(self.centers.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centers.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            np.array_equal(self.centers, other.centers)
            and self.config == other.config
            and self.epochs_run == other.epochs_run
        )


def _sq_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, M), computed from explicit
    differences (no dot-product expansion) for stable tie behavior."""
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def assign_batch(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Nearest-center index for each row of ``points``; ties go to the
    lowest index."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != centers.shape[1]:
        raise InputError(
            f"feature dim {points.shape[-1] if points.ndim else '?'} does not "
            f"match codebook dim {centers.shape[1]}"
        )
    out = np.empty(points.shape[0], dtype=np.int64)
    for lo in range(0, points.shape[0], _ASSIGN_CHUNK):
        chunk = points[lo : lo + _ASSIGN_CHUNK]
        out[lo : lo + chunk.shape[0]] = _sq_distances(chunk, centers).argmin(axis=1)
    return out


def assign_nearest(feature: np.ndarray, codebook: Codebook) -> int:
    """Index of the center minimizing squared Euclidean distance to
    ``feature``; ties break to the lowest index."""
    feat = np.asarray(feature, dtype=np.float64)
    if feat.ndim != 1 or feat.shape[0] != codebook.dim:
        raise InputError(
            f"feature dim {feat.shape} does not match codebook dim {codebook.dim}"
        )
    return int(((codebook.centers - feat) ** 2).sum(axis=1).argmin())


def kmeans_objective(features: np.ndarray, centers: np.ndarray) -> float:
    """Full-batch objective: sum of squared distances to assigned centers."""
    features = np.asarray(features, dtype=np.float64)
    total = 0.0
    for lo in range(0, features.shape[0], _ASSIGN_CHUNK):
        chunk = features[lo : lo + _ASSIGN_CHUNK]
        total += _sq_distances(chunk, centers).min(axis=1).sum()
    return float(total)


def _normalize_batches(
    batches: Sequence[np.ndarray],
) -> tuple[list[np.ndarray], int, int]:
    """Coerce batches to float64 2-D arrays; returns (batches, total, dim)."""
    clean: list[np.ndarray] = []
    dim = -1
    total = 0
    for i, batch in enumerate(batches):
        arr = np.asarray(batch, dtype=np.float64)
        if arr.size == 0:
            clean.append(arr.reshape(0, max(dim, 0)))
            continue
        if arr.ndim != 2:
            raise InputError(f"batch {i} is not a 2-D feature array")
        if dim == -1:
            dim = arr.shape[1]
        elif arr.shape[1] != dim:
            raise InputError(
                f"batch {i} has dimension {arr.shape[1]}, expected {dim}"
            )
        if not np.isfinite(arr).all():
            raise InputError(f"batch {i} contains non-finite features")
        total += arr.shape[0]
        clean.append(arr)
    return clean, total, dim


def _init_centers(all_feats: np.ndarray, m: int, seed: int) -> np.ndarray:
    """Sample M pairwise-distinct features uniformly from the stream."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(all_feats.shape[0])
    chosen: list[np.ndarray] = []
    for idx in order:
        cand = all_feats[idx]
        if any(np.array_equal(cand, c) for c in chosen):
            continue
        chosen.append(cand)
        if len(chosen) == m:
            return np.stack(chosen)
    raise TrainingError(
        f"training data has only {len(chosen)} distinct features, need {m}"
    )


def _reseed_starved(
    centers: np.ndarray,
    counts: np.ndarray,
    starved: np.ndarray,
    all_feats: np.ndarray,
) -> None:
    """Move each starved center onto the feature currently farthest from its
    assigned center (successive starved centers take successive features)."""
    assign = assign_batch(all_feats, centers)
    dists = ((all_feats - centers[assign]) ** 2).sum(axis=1)
    order = np.argsort(-dists, kind="stable")
    cursor = 0
    for m in np.flatnonzero(starved):
        while cursor < order.size:
            cand = all_feats[order[cursor]]
            cursor += 1
            if not any(np.array_equal(cand, c) for c in centers):
                centers[m] = cand
                counts[m] = 1
                break


def train_codebook(
    image_feature_batches: Sequence[np.ndarray],
    clusters: int,
    seed: int,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    tol: float = DEFAULT_TOL,
    augment: AugmentConfig | None = None,
) -> Codebook:
    """Train an M-center codebook over per-image feature batches.

    Centers are initialized from M distinct features sampled by ``seed``
    from the first epoch's stream. Each epoch consumes every batch in
    order: batch points are assigned to the current centers, then each
    center moves with per-point learning rate 1/n (n = cumulative
    assignment count), applied in the closed form
    ``(n_old * c + sum(batch points)) / n_new`` which is valid because
    assignments within a batch are computed before any update. A center
    assigned nothing for a whole epoch is reseeded to the feature farthest
    from its assigned center. Training stops when the largest relative
    per-center movement over an epoch drops below ``tol``, or after
    ``max_epochs``.

    Deterministic: identical inputs and seed give a bit-identical codebook.
    """
    if clusters < 1:
        raise TrainingError(f"cluster count must be >= 1, got {clusters}")
    if max_epochs < 1:
        raise TrainingError(f"max_epochs must be >= 1, got {max_epochs}")
    batches, total, dim = _normalize_batches(image_feature_batches)
    if total < clusters:
        raise TrainingError(
            f"{total} training features for {clusters} clusters; need at least "
            "one feature per cluster"
        )
    all_feats = np.concatenate([b for b in batches if b.shape[0]])
    centers = _init_centers(all_feats, clusters, seed)
    counts = np.zeros(clusters, dtype=np.int64)
    epochs_run = 0
    for _ in range(max_epochs):
        start = centers.copy()
        epoch_assigned = np.zeros(clusters, dtype=np.int64)
        for batch in batches:
            if not batch.shape[0]:
                continue
            assign = assign_batch(batch, centers)
            batch_counts = np.bincount(assign, minlength=clusters)
            sums = np.zeros_like(centers)
            np.add.at(sums, assign, batch)
            new_counts = counts + batch_counts
            hit = batch_counts > 0
            centers[hit] = (
                counts[hit, None] * centers[hit] + sums[hit]
            ) / new_counts[hit, None]
            counts = new_counts
            epoch_assigned += batch_counts
        epochs_run += 1
        starved = epoch_assigned == 0
        if starved.any():
            _reseed_starved(centers, counts, starved, all_feats)
            continue  # reseeded centers need at least one refinement epoch
        movement = np.linalg.norm(centers - start, axis=1)
        scale = np.maximum(np.linalg.norm(start, axis=1), 1e-12)
        if (movement / scale).max() < tol:
            break
    return Codebook(
        centers,
        TrainConfig(seed=seed, max_epochs=max_epochs, tol=tol, augment=augment),
        epochs_run,
    )
