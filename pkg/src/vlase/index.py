"""Geo-tagged descriptor database with exact cosine top-N search.

The index is immutable after construction; queries are pure reads and may
run concurrently. Search is an exact linear scan, sized for databases of a
few thousand images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigError, InputError
from .vlad import VladDescriptor

# Distance assigned to any pair involving an empty/zero descriptor: strictly
# beyond the [0, 2] cosine range, so such records always rank last.
EMPTY_DISTANCE = 2.0


@dataclass(frozen=True)
class GeoTag:
    """Latitude/longitude in degrees."""

    latitude: float
    longitude: float

    def __post_init__(self):
        if not (math.isfinite(self.latitude) and math.isfinite(self.longitude)):
            raise InputError("geotag coordinates must be finite")
        if not -90.0 <= self.latitude <= 90.0:
            raise InputError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise InputError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class IndexRecord:
    image_id: str
    descriptor: VladDescriptor
    tag: GeoTag


class GeoIndex:
    """Ordered collection of (image id, descriptor, geotag) records bound to
    the codebook that produced the descriptors via a fingerprint."""

    def __init__(self, records: Iterable[IndexRecord], codebook_fingerprint: bytes):
        self.records: tuple[IndexRecord, ...] = tuple(records)
        self.codebook_fingerprint = bytes(codebook_fingerprint)
        if not self.records:
            raise InputError("an index needs at least one record")
        shape = self.records[0].descriptor.values.shape
        ids = set()
        for rec in self.records:
            if rec.descriptor.values.shape != shape:
                raise InputError(
                    f"record {rec.image_id!r} descriptor shape "
                    f"{rec.descriptor.values.shape} != {shape}"
                )
            if rec.image_id in ids:
                raise InputError(f"duplicate image id {rec.image_id!r} in index")
            ids.add(rec.image_id)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def descriptor_shape(self) -> tuple[int, int]:
        return self.records[0].descriptor.values.shape  # type: ignore[return-value]


def cosine_distance(a: VladDescriptor, b: VladDescriptor) -> float:
    """1 - cos(a, b); pairs involving an empty or zero descriptor get the
    sentinel maximum of 2.0."""
    if a.values.shape != b.values.shape:
        raise InputError(
            f"descriptor shapes differ: {a.values.shape} vs {b.values.shape}"
        )
    if a.is_empty or b.is_empty:
        return EMPTY_DISTANCE
    va, vb = a.values.ravel(), b.values.ravel()
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na <= 1e-12 or nb <= 1e-12:
        return EMPTY_DISTANCE
    return 1.0 - float(np.dot(va, vb)) / (na * nb)


def query_top_n(
    index: GeoIndex,
    query: VladDescriptor,
    n: int,
    fingerprint: bytes | None = None,
) -> list[tuple[str, float, GeoTag]]:
    """The n database records closest to ``query`` by cosine distance, in
    nondecreasing order with ties broken by insertion order.

    When ``fingerprint`` is given it must match the index's stored codebook
    fingerprint; a mismatch means the query descriptor was computed with a
    different codebook/config pairing.
    """
    if n < 1:
        raise ConfigError(f"top-N count must be >= 1, got {n}")
    if fingerprint is not None and bytes(fingerprint) != index.codebook_fingerprint:
        raise ConfigError(
            "codebook fingerprint does not match the index; the index must be "
            "queried with descriptors from the codebook that built it"
        )
    distances = [cosine_distance(rec.descriptor, query) for rec in index.records]
    order = sorted(range(len(distances)), key=lambda i: distances[i])
    return [
        (index.records[i].image_id, distances[i], index.records[i].tag)
        for i in order[:n]
    ]
