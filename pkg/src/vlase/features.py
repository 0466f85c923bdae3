"""Semantic edge feature maps and spatial feature augmentation.

An edge feature map holds, for the edge pixels of one image, a per-pixel
vector of class boundary probabilities. Feature extraction selects pixels
whose strongest kept-class probability clears a threshold, appends
normalized pixel coordinates, and optionally reweights the class block
against the spatial block.

All operations here are pure functions over effectively immutable inputs
(pixel arrays are marked read-only), so they are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InputError

# Cityscapes-19 class ordering; indices 0-10 are the static scene classes,
# 11-18 the movable-object classes.
CITYSCAPES_CLASSES: tuple[str, ...] = (
    "road",
    "sidewalk",
    "building",
    "wall",
    "fence",
    "pole",
    "light",
    "sign",
    "vegetation",
    "terrain",
    "sky",
    "person",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
)

STATIC_CLASS_COUNT = 11

_CLASS_ALIASES = {
    "veg": "vegetation",
    "traffic light": "light",
    "traffic sign": "sign",
    "motorbike": "motorcycle",
}


def class_index(name: str) -> int:
    """Index of a Cityscapes-19 class from its (case-insensitive) name."""
    key = name.strip().lower()
    key = _CLASS_ALIASES.get(key, key)
    try:
        return CITYSCAPES_CLASSES.index(key)
    except ValueError:
        raise ConfigError(f"unknown class name {name!r}") from None


@dataclass(frozen=True)
class ClassMask:
    """Ordered subset of class indices kept in the feature vector."""

    keep: tuple[int, ...]

    def __post_init__(self):
        keep = tuple(int(i) for i in self.keep)
        if not keep:
            raise ConfigError("class mask must keep at least one class")
        if any(i < 0 for i in keep):
            raise ConfigError(f"class mask has negative index: {keep}")
        if len(set(keep)) != len(keep):
            raise ConfigError(f"class mask has duplicate indices: {keep}")
        object.__setattr__(self, "keep", tuple(sorted(keep)))

    def __len__(self) -> int:
        return len(self.keep)

    @property
    def num_kept(self) -> int:
        return len(self.keep)

    def check_against(self, num_classes: int) -> None:
        """Raise ConfigError if the mask references a class index >= K."""
        if self.keep[-1] >= num_classes:
            raise ConfigError(
                f"class mask keeps index {self.keep[-1]} but the map has only "
                f"{num_classes} classes"
            )

    # -- presets ------------------------------------------------------------

    @classmethod
    def all_classes(cls, num_classes: int = 19) -> "ClassMask":
        if num_classes < 1:
            raise ConfigError("num_classes must be positive")
        return cls(tuple(range(num_classes)))

    @classmethod
    def static(cls) -> "ClassMask":
        return cls(tuple(range(STATIC_CLASS_COUNT)))

    @classmethod
    def building_sky(cls) -> "ClassMask":
        return cls((class_index("building"), class_index("sky")))

    @classmethod
    def vegetation_sky(cls) -> "ClassMask":
        return cls((class_index("vegetation"), class_index("sky")))

    @classmethod
    def vegetation_building_sky(cls) -> "ClassMask":
        return cls(
            (class_index("building"), class_index("vegetation"), class_index("sky"))
        )

    @classmethod
    def remove(cls, clazz: int | str, num_classes: int = 19) -> "ClassMask":
        """Keep every class except one (ablation 'Removed' rows)."""
        idx = class_index(clazz) if isinstance(clazz, str) else int(clazz)
        if not 0 <= idx < num_classes:
            raise ConfigError(f"cannot remove class {clazz!r}: index out of range")
        if num_classes < 2:
            raise ConfigError("cannot remove the only class")
        return cls(tuple(i for i in range(num_classes) if i != idx))

    @classmethod
    def parse(cls, spec: str, num_classes: int = 19) -> "ClassMask":
        """Build a mask from a textual spec.

        Accepts the preset names ``all``, ``static``, ``bld-sky``,
        ``veg-sky``, ``veg-bld-sky``, a removal spec ``remove:<class>``
        (name or index), or an explicit index list such as ``0,5,7``
        (``+`` also accepted as separator).
        """
        text = spec.strip().lower().replace("_", "-")
        if text == "all":
            return cls.all_classes(num_classes)
        if text == "static":
            return cls.static()
        if text == "bld-sky":
            return cls.building_sky()
        if text == "veg-sky":
            return cls.vegetation_sky()
        if text == "veg-bld-sky":
            return cls.vegetation_building_sky()
        if text.startswith("remove:"):
            target = text.split(":", 1)[1]
            clazz: int | str = int(target) if target.isdigit() else target
            return cls.remove(clazz, num_classes)
        parts = [p for p in text.replace("+", ",").split(",") if p]
        if parts and all(p.strip().isdigit() for p in parts):
            return cls(tuple(int(p) for p in parts))
        raise ConfigError(f"unrecognized mask spec {spec!r}")


@dataclass(frozen=True)
class AugmentConfig:
    """Feature extraction settings: threshold, class/spatial weighting, mask.

    ``alpha`` scales the class block while ``1 - alpha`` scales the two
    normalized-coordinate components; it only applies when
    ``spatial_enabled`` is true.
    """

    mask: ClassMask
    threshold: float = 0.5
    alpha: float = 0.1
    spatial_enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in (0, 1], got {self.threshold}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")

    @property
    def feature_dim(self) -> int:
        return self.mask.num_kept + (2 if self.spatial_enabled else 0)


@dataclass(eq=False)
class EdgeFeatureMap:
    """Sparse per-pixel multi-label edge probabilities for one image.

    Pixels are kept in canonical (row, column) order and arrays are
    read-only after construction; probabilities are 32-bit floats so maps
    round-trip bit-exactly through the file format.
    """

    image_id: str
    width: int
    height: int
    num_classes: int
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.num_classes <= 0:
            raise InputError(
                f"{self.image_id!r}: W, H and K must be positive, got "
                f"{self.width}x{self.height}, K={self.num_classes}"
            )
        xs = np.asarray(self.xs, dtype=np.int64)
        ys = np.asarray(self.ys, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float32)
        if probs.ndim == 1 and probs.size == 0:
            probs = probs.reshape(0, self.num_classes)
        if xs.ndim != 1 or ys.ndim != 1 or probs.ndim != 2:
            raise InputError(f"{self.image_id!r}: malformed pixel arrays")
        n = xs.shape[0]
        if ys.shape[0] != n or probs.shape[0] != n:
            raise InputError(f"{self.image_id!r}: pixel array lengths disagree")
        if probs.shape[1] != self.num_classes:
            raise InputError(
                f"{self.image_id!r}: probs have {probs.shape[1]} classes, "
                f"expected {self.num_classes}"
            )
        if n:
            if xs.min() < 0 or xs.max() >= self.width:
                raise InputError(f"{self.image_id!r}: pixel x out of [0, {self.width})")
            if ys.min() < 0 or ys.max() >= self.height:
                raise InputError(f"{self.image_id!r}: pixel y out of [0, {self.height})")
            if not np.isfinite(probs).all():
                raise InputError(f"{self.image_id!r}: non-finite probability")
            if probs.min() < 0.0 or probs.max() > 1.0:
                raise InputError(f"{self.image_id!r}: probability outside [0, 1]")
            keys = ys * self.width + xs
            if np.unique(keys).size != n:
                raise InputError(f"{self.image_id!r}: duplicate (x, y) pixel entries")
            order = np.argsort(keys, kind="stable")
            xs, ys, probs = xs[order], ys[order], probs[order]
        xs = xs.astype(np.uint32)
        ys = ys.astype(np.uint32)
        for arr in (xs, ys, probs):
            arr.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return int(self.xs.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EdgeFeatureMap):
            return NotImplemented
        return (
            self.image_id == other.image_id
            and self.width == other.width
            and self.height == other.height
            and self.num_classes == other.num_classes
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
            and np.array_equal(self.probs, other.probs)
        )

    @classmethod
    def from_pixels(
        cls,
        image_id: str,
        width: int,
        height: int,
        num_classes: int,
        pixels: Iterable[tuple[int, int, Sequence[float]]],
    ) -> "EdgeFeatureMap":
        """Build a map from (x, y, probs) tuples."""
        pixels = list(pixels)
        xs = np.array([p[0] for p in pixels], dtype=np.int64)
        ys = np.array([p[1] for p in pixels], dtype=np.int64)
        probs = (
            np.array([p[2] for p in pixels], dtype=np.float32)
            if pixels
            else np.zeros((0, num_classes), dtype=np.float32)
        )
        return cls(image_id, width, height, num_classes, xs, ys, probs)

    @classmethod
    def from_dense(
        cls, image_id: str, probs_hwk: np.ndarray, min_prob: float = 0.0
    ) -> "EdgeFeatureMap":
        """Ingest a dense (H, W, K) probability volume, keeping pixels whose
        strongest class probability exceeds ``min_prob``."""
        dense = np.asarray(probs_hwk)
        if dense.ndim != 3:
            raise InputError(f"{image_id!r}: dense map must be (H, W, K)")
        h, w, k = dense.shape
        ys, xs = np.nonzero(dense.max(axis=2) > min_prob)
        return cls(image_id, w, h, k, xs, ys, dense[ys, xs].astype(np.float32))


def apply_mask(fmap: EdgeFeatureMap, mask: ClassMask) -> EdgeFeatureMap:
    """Project every pixel's probabilities onto the kept classes.

    Pixels are retained even when their strongest kept probability drops
    below any threshold; thresholding happens in ``select_edge_pixels``.
    """
    mask.check_against(fmap.num_classes)
    return EdgeFeatureMap(
        fmap.image_id,
        fmap.width,
        fmap.height,
        mask.num_kept,
        fmap.xs,
        fmap.ys,
        fmap.probs[:, list(mask.keep)],
    )


def select_edge_pixels(fmap: EdgeFeatureMap, cfg: AugmentConfig) -> np.ndarray:
    """Select edge pixels and build unweighted augmented features.

    A pixel qualifies when its maximum probability over the kept classes is
    >= ``cfg.threshold``. Each qualifying pixel yields the kept class
    probabilities followed, when ``cfg.spatial_enabled``, by its normalized
    coordinates (x / W, y / H). Rows preserve the map's pixel order.
    Alpha weighting is applied separately by ``apply_alpha``.

    Returns an (N, D) float64 array, D = kept classes (+2 with spatial).
    """
    cfg.mask.check_against(fmap.num_classes)
    kept = fmap.probs[:, list(cfg.mask.keep)].astype(np.float64)
    selected = kept.max(axis=1) >= cfg.threshold if len(fmap) else np.zeros(0, bool)
    feats = kept[selected]
    if not cfg.spatial_enabled:
        return feats
    coords = np.column_stack(
        (
            fmap.xs[selected].astype(np.float64) / fmap.width,
            fmap.ys[selected].astype(np.float64) / fmap.height,
        )
    )
    return np.hstack((feats, coords))


def apply_alpha(features: np.ndarray, alpha: float) -> np.ndarray:
    """Reweight features: class block scaled by alpha, the trailing two
    spatial components by (1 - alpha).

    Accepts a single (D,) feature or an (N, D) batch; the last two columns
    must be the spatial components.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.shape[-1] < 2:
        raise InputError("apply_alpha requires features with spatial components")
    scale = np.full(feats.shape[-1], alpha, dtype=np.float64)
    scale[-2:] = 1.0 - alpha
    return feats * scale


def extract_features(fmap: EdgeFeatureMap, cfg: AugmentConfig) -> np.ndarray:
    """Full per-image extraction: select, augment, and alpha-weight."""
    feats = select_edge_pixels(fmap, cfg)
    if cfg.spatial_enabled:
        feats = apply_alpha(feats, cfg.alpha)
    return feats
