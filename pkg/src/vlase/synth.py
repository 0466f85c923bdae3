"""Deterministic synthetic route and edge-feature generation.

Stands in for real capture passes at desk scale: each location has a base
pixel layout derived only from (seed, location), and each pass perturbs
probabilities, pixel positions, and geotags by configurable noise. All
randomness flows through counter-based Philox streams keyed by hashing
(seed, location, pass), so output is bit-identical across runs and
platforms. Generation is pure given the config; locations may be produced
in parallel.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, VlaseError
from .features import EdgeFeatureMap
from .geoeval import EARTH_RADIUS_M
from .index import GeoTag
from .vlad import l2_normalize, power_normalize

# Minimum pairwise distance between per-location signature descriptors in the
# generic scenario, checked at generation time.
DISTINCTNESS_FLOOR = 1e-3


class Scenario(str, Enum):
    GENERIC = "generic"
    SPATIAL_TWIN = "spatial-twin"


@dataclass(frozen=True)
class CaptureNoise:
    """Per-pass capture jitter: probability sigma, pixel sigma (pixels),
    GPS sigma (meters)."""

    prob_sigma: float = 0.0
    pixel_sigma: float = 0.0
    gps_sigma_m: float = 0.0

    def __post_init__(self):
        if min(self.prob_sigma, self.pixel_sigma, self.gps_sigma_m) < 0:
            raise ConfigError("noise sigmas must be >= 0")


@dataclass(frozen=True)
class RouteSpec:
    """Straight route: start point plus constant bearing and step length."""

    start: GeoTag = GeoTag(40.7608, -111.8910)
    bearing_deg: float = 45.0
    step_m: float = 10.0

    def __post_init__(self):
        if self.step_m <= 0:
            raise ConfigError("route step length must be positive")


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    num_locations: int
    route: RouteSpec = RouteSpec()
    width: int = 640
    height: int = 360
    num_classes: int = 19
    edge_density: float = 60.0
    noise: CaptureNoise = CaptureNoise()
    scenario: Scenario = Scenario.GENERIC

    def __post_init__(self):
        if self.num_locations < 2:
            raise ConfigError("need at least 2 locations")
        if self.width < 4 or self.height < 1 or self.num_classes < 1:
            raise ConfigError("degenerate image geometry")
        if self.edge_density <= 0:
            raise ConfigError("edge density must be positive")


def _rng(*parts: object) -> np.random.Generator:
    """Philox generator keyed by a hash of the given parts."""
    digest = hashlib.sha256("/".join(map(str, parts)).encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _destination(tag: GeoTag, bearing_deg: float, dist_m: float) -> GeoTag:
    """Point reached from ``tag`` after ``dist_m`` meters along a bearing."""
    delta = dist_m / EARTH_RADIUS_M
    theta = math.radians(bearing_deg)
    lat1 = math.radians(tag.latitude)
    lon1 = math.radians(tag.longitude)
    lat2 = math.asin(
        math.sin(lat1) * math.cos(delta)
        + math.cos(lat1) * math.sin(delta) * math.cos(theta)
    )
    lon2 = lon1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(lat1),
        math.cos(delta) - math.sin(lat1) * math.sin(lat2),
    )
    lon2 = (lon2 + math.pi) % (2.0 * math.pi) - math.pi
    return GeoTag(math.degrees(lat2), math.degrees(lon2))


def route_point(cfg: SynthConfig, location: int) -> GeoTag:
    """Noise-free geotag of a location along the configured route."""
    return _destination(
        cfg.route.start, cfg.route.bearing_deg, location * cfg.route.step_m
    )


def twin_locations(cfg: SynthConfig) -> tuple[int, int]:
    """The two designated twin locations in the spatial-twin scenario."""
    return 0, cfg.num_locations - 1


def _canonical_order(xs: np.ndarray, ys: np.ndarray, width: int) -> np.ndarray:
    return np.argsort(ys.astype(np.int64) * width + xs, kind="stable")


def _generic_layout(
    cfg: SynthConfig, location: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Base (xs, ys, probs) for one location, canonical (y, x) order."""
    rng = _rng(cfg.seed, "base", location)
    grid = cfg.width * cfg.height
    count = int(min(max(1, rng.poisson(cfg.edge_density)), grid))
    linear = rng.choice(grid, size=count, replace=False)
    xs = (linear % cfg.width).astype(np.int64)
    ys = (linear // cfg.width).astype(np.int64)
    probs = rng.random((count, cfg.num_classes)).astype(np.float32)
    order = _canonical_order(xs, ys, cfg.width)
    return xs[order], ys[order], probs[order]


def _twin_layouts(
    cfg: SynthConfig,
) -> tuple[
    tuple[np.ndarray, np.ndarray, np.ndarray],
    tuple[np.ndarray, np.ndarray, np.ndarray],
]:
    """Two layouts with identical probability sequences (in canonical pixel
    order) but horizontally mirrored pixel positions.

    The first twin occupies the left quarter of the image, the second the
    mirrored right quarter, so spatially augmented features separate them
    while class probabilities alone cannot.
    """
    rng = _rng(cfg.seed, "twin")
    quarter = max(1, cfg.width // 4)
    grid = quarter * cfg.height
    count = int(min(max(2, rng.poisson(cfg.edge_density)), grid))
    linear = rng.choice(grid, size=count, replace=False)
    xs_a = (linear % quarter).astype(np.int64)
    ys = (linear // quarter).astype(np.int64)
    probs = rng.random((count, cfg.num_classes)).astype(np.float32)
    order_a = _canonical_order(xs_a, ys, cfg.width)
    xs_a, ys_a, probs_a = xs_a[order_a], ys[order_a], probs[order_a]
    # Mirror the position set; re-pair the canonical probability sequence
    # with the mirrored positions in their own canonical order, so both twins
    # present bit-identical probability rows when spatial features are off.
    xs_b = cfg.width - 1 - xs_a
    order_b = _canonical_order(xs_b, ys_a, cfg.width)
    return (xs_a, ys_a, probs_a), (xs_b[order_b], ys_a[order_b], probs_a)


def _base_layout(
    cfg: SynthConfig, location: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if cfg.scenario is Scenario.SPATIAL_TWIN:
        first, last = twin_locations(cfg)
        if location == first:
            return _twin_layouts(cfg)[0]
        if location == last:
            return _twin_layouts(cfg)[1]
    return _generic_layout(cfg, location)


def _signature(cfg: SynthConfig, xs, ys, probs) -> np.ndarray:
    """Cheap per-location descriptor: single-zero-center VLAD of the
    unweighted augmented features."""
    feats = np.hstack(
        (
            probs.astype(np.float64),
            np.column_stack((xs / cfg.width, ys / cfg.height)),
        )
    )
    return l2_normalize(power_normalize(feats.sum(axis=0)))


def _check_distinct(cfg: SynthConfig, layouts) -> None:
    sigs = np.stack([_signature(cfg, *layout) for layout in layouts])
    gram = sigs @ sigs.T
    sq = np.diag(gram)[:, None] + np.diag(gram)[None, :] - 2.0 * gram
    np.fill_diagonal(sq, np.inf)
    nearest = float(np.sqrt(max(sq.min(), 0.0)))
    if nearest <= DISTINCTNESS_FLOOR:
        raise VlaseError(
            f"synthetic location layouts are not pairwise distinct "
            f"(min signature distance {nearest:.2g}); change the seed"
        )


def generate_pass(
    cfg: SynthConfig, pass_id: int
) -> list[tuple[EdgeFeatureMap, GeoTag]]:
    """Generate one capture pass: a feature map and geotag per location.

    Base layouts depend only on (seed, location); ``pass_id`` seeds the
    noise streams that jitter probabilities (clamped to [0, 1]), pixel
    positions (clamped to bounds; colliding pixels drop, first in canonical
    order wins), and geotags. With all sigmas zero, every pass is
    bit-identical.
    """
    layouts = [_base_layout(cfg, loc) for loc in range(cfg.num_locations)]
    if cfg.scenario is Scenario.GENERIC:
        _check_distinct(cfg, layouts)
    noise = cfg.noise
    out: list[tuple[EdgeFeatureMap, GeoTag]] = []
    for loc, (xs, ys, probs) in enumerate(layouts):
        rng = _rng(cfg.seed, "noise", loc, pass_id)
        jittered = probs.astype(np.float64) + noise.prob_sigma * rng.standard_normal(
            probs.shape
        )
        probs_p = np.clip(jittered, 0.0, 1.0).astype(np.float32)
        shift = noise.pixel_sigma * rng.standard_normal((xs.shape[0], 2))
        xs_p = np.clip(np.rint(xs + shift[:, 0]), 0, cfg.width - 1).astype(np.int64)
        ys_p = np.clip(np.rint(ys + shift[:, 1]), 0, cfg.height - 1).astype(np.int64)
        _, first = np.unique(ys_p * cfg.width + xs_p, return_index=True)
        keep = np.sort(first)
        fmap = EdgeFeatureMap(
            image_id=f"loc{loc:05d}",
            width=cfg.width,
            height=cfg.height,
            num_classes=cfg.num_classes,
            xs=xs_p[keep],
            ys=ys_p[keep],
            probs=probs_p[keep],
        )
        base_tag = route_point(cfg, loc)
        dn, de = noise.gps_sigma_m * rng.standard_normal(2)
        lat = base_tag.latitude + math.degrees(dn / EARTH_RADIUS_M)
        lon = base_tag.longitude + math.degrees(
            de / (EARTH_RADIUS_M * math.cos(math.radians(base_tag.latitude)))
        )
        out.append((fmap, GeoTag(lat, lon)))
    return out
