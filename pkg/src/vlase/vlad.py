"""VLAD descriptor aggregation: residual accumulation per cluster followed
by power normalization and global L2 normalization.

Pure functions; descriptors for different images can be computed in
parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebook import Codebook, assign_batch
from .errors import InputError

DEFAULT_POWER_EXPONENT = 0.5
L2_EPS = 1e-12


@dataclass(eq=False)
class VladDescriptor:
    """Normalized (M, D) aggregated descriptor for one image.

    ``is_empty`` marks images that produced no edge features; their values
    are all zero and retrieval ranks them last.
    """

    values: np.ndarray = field(repr=False)
    image_id: str = ""
    is_empty: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InputError("descriptor values must be an (M, D) array")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def num_clusters(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VladDescriptor):
            return NotImplemented
        return (
            self.image_id == other.image_id
            and self.is_empty == other.is_empty
            and np.array_equal(self.values, other.values)
        )


def power_normalize(
    v: np.ndarray, exponent: float = DEFAULT_POWER_EXPONENT
) -> np.ndarray:
    """Elementwise signed power: sign(v) * |v| ** exponent."""
    v = np.asarray(v, dtype=np.float64)
    mag = np.sqrt(np.abs(v)) if exponent == 0.5 else np.abs(v) ** exponent
    return np.sign(v) * mag


def l2_normalize(v: np.ndarray, eps: float = L2_EPS) -> np.ndarray:
    """Scale to unit L2 norm; vectors with norm <= eps pass through
    unchanged (zero stays zero)."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v.ravel()))
    return v.copy() if norm <= eps else v / norm


def aggregate_residuals(
    features: np.ndarray, codebook: Codebook
) -> tuple[np.ndarray, np.ndarray]:
    """Raw VLAD accumulation.

    Returns (rows, counts): rows[m] is the sum of (x - C_m) over features
    assigned to center m, accumulated per feature in input order; counts[m]
    the number of features assigned to m. Unassigned rows stay zero.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.size == 0:
        feats = feats.reshape(0, codebook.dim)
    if feats.ndim != 2 or feats.shape[1] != codebook.dim:
        raise InputError(
            f"feature dim {feats.shape} does not match codebook dim "
            f"({codebook.num_clusters}, {codebook.dim})"
        )
    rows = np.zeros((codebook.num_clusters, codebook.dim), dtype=np.float64)
    counts = np.zeros(codebook.num_clusters, dtype=np.int64)
    if feats.shape[0]:
        assign = assign_batch(feats, codebook.centers)
        np.add.at(rows, assign, feats - codebook.centers[assign])
        counts += np.bincount(assign, minlength=codebook.num_clusters)
    return rows, counts


def vlad_aggregate(
    features: np.ndarray,
    codebook: Codebook,
    image_id: str = "",
    power_exponent: float = DEFAULT_POWER_EXPONENT,
) -> VladDescriptor:
    """Aggregate an image's features into a normalized VLAD descriptor.

    Accumulates per-cluster residuals, applies the signed power transform
    elementwise, then L2-normalizes the full flattened matrix. An empty
    feature list yields an all-zero descriptor flagged ``is_empty``.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.size == 0:
        return VladDescriptor(
            np.zeros((codebook.num_clusters, codebook.dim)), image_id, is_empty=True
        )
    rows, _ = aggregate_residuals(feats, codebook)
    return VladDescriptor(
        l2_normalize(power_normalize(rows, power_exponent)), image_id, is_empty=False
    )
