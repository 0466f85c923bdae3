"""Independent reference implementations used to check the library.

Everything here is written as plain loops or textbook formulas, on purpose:
these must not share code paths with the package under test.
"""

from __future__ import annotations

import math

import numpy as np


def select_oracle(fmap, cfg) -> list[list[float]]:
    """Per-pixel enumeration of edge selection and augmentation."""
    out = []
    keep = list(cfg.mask.keep)
    for x, y, probs in zip(fmap.xs, fmap.ys, fmap.probs):
        kept = [float(probs[i]) for i in keep]
        if max(kept) >= cfg.threshold:
            row = kept
            if cfg.spatial_enabled:
                row = kept + [float(x) / fmap.width, float(y) / fmap.height]
            out.append(row)
    return out


def mask_oracle(fmap, keep) -> list[list[float]]:
    """Index-by-index projection of every pixel's probabilities."""
    return [[float(probs[i]) for i in keep] for probs in fmap.probs]


def nearest_scan(feature, centers) -> int:
    """Exhaustive linear scan for the nearest center."""
    best, best_d = 0, math.inf
    for m, center in enumerate(centers):
        d = sum((float(f) - float(c)) ** 2 for f, c in zip(feature, center))
        if d < best_d:
            best, best_d = m, d
    return best


def lloyd_kmeans(points: np.ndarray, init: np.ndarray, max_iters: int = 200):
    """Full-batch k-means run to convergence from the given centers."""
    centers = np.array(init, dtype=float)
    for _ in range(max_iters):
        assign = np.array([nearest_scan(p, centers) for p in points])
        new = centers.copy()
        for m in range(len(centers)):
            members = points[assign == m]
            if len(members):
                new[m] = members.mean(axis=0)
        if np.allclose(new, centers, atol=1e-12):
            break
        centers = new
    return centers


def vlad_oracle(features, centers, exponent: float = 0.5) -> np.ndarray:
    """Naive three-step VLAD: accumulate residuals, signed power, L2."""
    m, d = centers.shape
    rows = np.zeros((m, d))
    for feat in features:
        j = nearest_scan(feat, centers)
        for col in range(d):
            rows[j, col] += float(feat[col]) - float(centers[j, col])
    powered = np.zeros_like(rows)
    for i in range(m):
        for col in range(d):
            v = rows[i, col]
            powered[i, col] = math.copysign(abs(v) ** exponent, v) if v else 0.0
    norm = math.sqrt(sum(v * v for v in powered.ravel()))
    return powered if norm <= 1e-12 else powered / norm


def cosine_oracle(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine distance via compensated sums."""
    av, bv = a.ravel(), b.ravel()
    dot = math.fsum(x * y for x, y in zip(av, bv))
    na = math.sqrt(math.fsum(x * x for x in av))
    nb = math.sqrt(math.fsum(y * y for y in bv))
    if na <= 1e-12 or nb <= 1e-12:
        return 2.0
    return 1.0 - dot / (na * nb)


def great_circle_chord_m(a, b, radius: float) -> float:
    """Great-circle distance from the 3-D chord between unit vectors."""

    def unit(tag):
        lat, lon = math.radians(tag.latitude), math.radians(tag.longitude)
        return (
            math.cos(lat) * math.cos(lon),
            math.cos(lat) * math.sin(lon),
            math.sin(lat),
        )

    ua, ub = unit(a), unit(b)
    chord = math.sqrt(sum((p - q) ** 2 for p, q in zip(ua, ub)))
    return 2.0 * radius * math.asin(min(1.0, chord / 2.0))
