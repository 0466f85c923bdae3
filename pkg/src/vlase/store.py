"""Bit-exact file formats: feature maps, codebooks, geo indexes, geotag CSV.

All binary numerics are little-endian and fixed-width, so files are
platform-independent and byte-diffable. Every binary file carries a CRC-32
of its body right after the magic/version prelude; readers verify it, so
any byte-level corruption surfaces as a diagnostic error instead of
undefined behavior. Feature pixels are written in canonical (y, x) order,
making file equality equivalent to map equality.

Readers are thread-safe; writers expect exclusive access to their path.
"""

from __future__ import annotations

import csv
import hashlib
import struct
import zlib
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codebook import Codebook, TrainConfig
from .errors import ConfigError, CorruptionError, FormatError, InputError
from .features import AugmentConfig, ClassMask, EdgeFeatureMap
from .index import GeoIndex, GeoTag, IndexRecord
from .vlad import VladDescriptor

MAGIC_FEATURES = b"VLASEFTR"
MAGIC_CODEBOOK = b"VLASECBK"
MAGIC_INDEX = b"VLASEIDX"
FORMAT_VERSION = 1

_PRELUDE = struct.Struct("<8sII")  # magic, version, crc32 of body
_HASH_LEN = 32

GEOTAG_COLUMNS = ("image_id", "lat", "lon")
FEATURE_SUFFIX = ".ftr"


# -- config hashing ----------------------------------------------------------


def config_bytes(augment: AugmentConfig | None) -> bytes:
    """Canonical serialization of an augment config, used for hashing."""
    if augment is None:
        return b"VLASE-NOCFG"
    keep = augment.mask.keep
    return (
        struct.pack("<ddB", augment.threshold, augment.alpha, augment.spatial_enabled)
        + struct.pack("<I", len(keep))
        + struct.pack(f"<{len(keep)}H", *keep)
    )


def config_hash(augment: AugmentConfig | None) -> bytes:
    """32-byte digest binding files to one feature-extraction config."""
    return hashlib.sha256(config_bytes(augment)).digest()


def codebook_fingerprint(codebook: Codebook) -> bytes:
    """Stable digest of (center bytes, augment config) pairing an index with
    the codebook that produced its descriptors."""
    centers = np.ascontiguousarray(codebook.centers, dtype="<f8")
    return hashlib.sha256(
        centers.tobytes() + b"\x00" + config_bytes(codebook.config.augment)
    ).digest()


# -- low-level helpers -------------------------------------------------------


class _Reader:
    """Cursor over file bytes; raises CorruptionError with the byte offset
    on any truncated read."""

    def __init__(self, data: bytes, path: str, start: int = 0, crc: int = 0):
        self.data = data
        self.path = path
        self.pos = start
        self.body_start = start
        self.declared_crc = crc

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptionError(
                f"{self.path}: truncated payload, needed {n} more bytes",
                offset=len(self.data),
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str) -> tuple:
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def u8(self) -> int:
        return self.unpack("<B")[0]

    def u32(self) -> int:
        return self.unpack("<I")[0]

    def i64(self) -> int:
        return self.unpack("<q")[0]

    def f64(self) -> float:
        return self.unpack("<d")[0]

    def array(self, dtype: str, count: int) -> np.ndarray:
        item = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(item * count), dtype=dtype).copy()

    def text(self) -> str:
        n = self.u32()
        raw = self.take(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptionError(
                f"{self.path}: undecodable text field ({exc})", offset=self.pos - n
            ) from None

    def finish(self) -> None:
        """Verify the body was consumed exactly and its checksum holds."""
        if self.pos != len(self.data):
            raise CorruptionError(
                f"{self.path}: {len(self.data) - self.pos} trailing bytes",
                offset=self.pos,
            )
        if zlib.crc32(self.data[self.body_start :]) & 0xFFFFFFFF != self.declared_crc:
            raise CorruptionError(f"{self.path}: body checksum mismatch")


def _text(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _write(path: str | Path, magic: bytes, body: bytes) -> None:
    crc = zlib.crc32(body) & 0xFFFFFFFF
    Path(path).write_bytes(_PRELUDE.pack(magic, FORMAT_VERSION, crc) + body)


def _open(path: str | Path, magic: bytes) -> _Reader:
    data = Path(path).read_bytes()
    name = str(path)
    if len(data) < _PRELUDE.size:
        raise CorruptionError(f"{name}: file shorter than header", offset=len(data))
    got_magic, version, crc = _PRELUDE.unpack_from(data)
    if got_magic != magic:
        raise FormatError(
            f"{name}: bad magic {got_magic!r}, expected {magic.decode()!r}"
        )
    if version != FORMAT_VERSION:
        raise FormatError(f"{name}: unsupported format version {version}")
    return _Reader(data, name, start=_PRELUDE.size, crc=crc)


# -- feature maps ------------------------------------------------------------


def write_feature_map(path: str | Path, fmap: EdgeFeatureMap) -> None:
    """Serialize a map; pixels go out as (u32 x, u32 y, K float32) records
    in canonical (y, x) order."""
    parts = [
        struct.pack(
            "<IIII", fmap.width, fmap.height, fmap.num_classes, len(fmap)
        ),
        bytes(_HASH_LEN),  # feature maps are raw data: no config binding
        _text(fmap.image_id),
    ]
    pixels = np.empty((len(fmap), 2 + fmap.num_classes), dtype="<u4")
    pixels[:, 0] = fmap.xs
    pixels[:, 1] = fmap.ys
    pixels[:, 2:] = fmap.probs.astype("<f4").view("<u4")
    parts.append(pixels.tobytes())
    _write(path, MAGIC_FEATURES, b"".join(parts))


def read_feature_map(path: str | Path) -> EdgeFeatureMap:
    r = _open(path, MAGIC_FEATURES)
    width, height, num_classes, npix = r.unpack("<IIII")
    r.take(_HASH_LEN)
    image_id = r.text()
    raw = r.array("<u4", npix * (2 + num_classes)).reshape(npix, 2 + num_classes)
    r.finish()
    try:
        return EdgeFeatureMap(
            image_id=image_id,
            width=width,
            height=height,
            num_classes=num_classes,
            xs=raw[:, 0].astype(np.int64),
            ys=raw[:, 1].astype(np.int64),
            probs=raw[:, 2:].copy().view("<f4").astype(np.float32),
        )
    except InputError as exc:
        raise FormatError(f"{r.path}: invalid feature map content: {exc}") from None


# -- codebooks ---------------------------------------------------------------


def _augment_bytes(augment: AugmentConfig | None) -> bytes:
    if augment is None:
        return struct.pack("<B", 0)
    keep = augment.mask.keep
    return (
        struct.pack("<B", 1)
        + struct.pack(
            "<ddBI", augment.threshold, augment.alpha, augment.spatial_enabled, len(keep)
        )
        + struct.pack(f"<{len(keep)}H", *keep)
    )


def _read_augment(r: _Reader) -> AugmentConfig | None:
    if not r.u8():
        return None
    threshold, alpha, spatial, n_keep = r.unpack("<ddBI")
    keep = r.unpack(f"<{n_keep}H") if n_keep else ()
    try:
        return AugmentConfig(
            mask=ClassMask(tuple(keep)),
            threshold=threshold,
            alpha=alpha,
            spatial_enabled=bool(spatial),
        )
    except ConfigError as exc:
        raise FormatError(f"{r.path}: invalid embedded config: {exc}") from None


def write_codebook(path: str | Path, codebook: Codebook) -> None:
    cfg = codebook.config
    rule = cfg.batch_rule.encode("ascii")
    body = b"".join(
        (
            struct.pack("<II", codebook.num_clusters, codebook.dim),
            config_hash(cfg.augment),
            struct.pack("<qId", cfg.seed, cfg.max_epochs, cfg.tol),
            struct.pack("<B", len(rule)),
            rule,
            struct.pack("<I", codebook.epochs_run),
            _augment_bytes(cfg.augment),
            np.ascontiguousarray(codebook.centers, dtype="<f8").tobytes(),
        )
    )
    _write(path, MAGIC_CODEBOOK, body)


def read_codebook(
    path: str | Path, expected_augment: AugmentConfig | None = ...
) -> Codebook:
    """Load a codebook. Pass ``expected_augment`` to enforce that the file
    was trained under a specific feature-extraction config; a hash mismatch
    raises ConfigError (descriptors would be incompatible)."""
    r = _open(path, MAGIC_CODEBOOK)
    m, d = r.unpack("<II")
    stored_hash = r.take(_HASH_LEN)
    seed, max_epochs, tol = r.unpack("<qId")
    rule = r.take(r.u8()).decode("ascii")
    epochs_run = r.u32()
    augment = _read_augment(r)
    centers = r.array("<f8", m * d).reshape(m, d)
    r.finish()
    if config_hash(augment) != stored_hash:
        raise FormatError(f"{r.path}: embedded config does not match its hash")
    if expected_augment is not ... and config_hash(expected_augment) != stored_hash:
        raise ConfigError(
            f"{r.path}: codebook was trained under a different augment config; "
            "retrain before changing mask/alpha/threshold/spatial settings"
        )
    try:
        return Codebook(
            centers,
            TrainConfig(
                seed=seed,
                max_epochs=max_epochs,
                tol=tol,
                augment=augment,
                batch_rule=rule,
            ),
            epochs_run,
        )
    except InputError as exc:
        raise FormatError(f"{r.path}: invalid codebook content: {exc}") from None


# -- geo indexes --------------------------------------------------------------


def write_index(path: str | Path, index: GeoIndex) -> None:
    m, d = index.descriptor_shape
    parts = [
        struct.pack("<III", len(index), m, d),
        bytes(index.codebook_fingerprint),
    ]
    for rec in index.records:
        parts.append(_text(rec.image_id))
        parts.append(
            struct.pack(
                "<Bdd", rec.descriptor.is_empty, rec.tag.latitude, rec.tag.longitude
            )
        )
        parts.append(
            np.ascontiguousarray(rec.descriptor.values, dtype="<f8").tobytes()
        )
    _write(path, MAGIC_INDEX, b"".join(parts))


def read_index(path: str | Path) -> GeoIndex:
    r = _open(path, MAGIC_INDEX)
    count, m, d = r.unpack("<III")
    fingerprint = r.take(_HASH_LEN)
    records = []
    try:
        for _ in range(count):
            image_id = r.text()
            is_empty, lat, lon = r.unpack("<Bdd")
            values = r.array("<f8", m * d).reshape(m, d)
            records.append(
                IndexRecord(
                    image_id,
                    VladDescriptor(values, image_id, is_empty=bool(is_empty)),
                    GeoTag(lat, lon),
                )
            )
        r.finish()
        return GeoIndex(records, fingerprint)
    except InputError as exc:
        raise FormatError(f"{r.path}: invalid index content: {exc}") from None


# -- geotag CSV ----------------------------------------------------------------


def write_geotags(path: str | Path, records: Iterable[tuple[str, GeoTag]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GEOTAG_COLUMNS)
        for image_id, tag in records:
            writer.writerow([image_id, repr(tag.latitude), repr(tag.longitude)])


def read_geotags(path: str | Path) -> list[tuple[str, GeoTag]]:
    """Parse an image_id,lat,lon CSV; errors name the offending line."""
    name = str(path)
    out: list[tuple[str, GeoTag]] = []
    seen: set[str] = set()
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or [c.strip() for c in header] != list(GEOTAG_COLUMNS):
            raise FormatError(
                f"{name}: line 1: expected header {','.join(GEOTAG_COLUMNS)!r}"
            )
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{name}: line {lineno}: expected 3 fields")
            image_id = row[0].strip()
            if not image_id:
                raise FormatError(f"{name}: line {lineno}: empty image id")
            if image_id in seen:
                raise FormatError(
                    f"{name}: line {lineno}: duplicate image id {image_id!r}"
                )
            try:
                tag = GeoTag(float(row[1]), float(row[2]))
            except (ValueError, InputError) as exc:
                raise FormatError(f"{name}: line {lineno}: {exc}") from None
            seen.add(image_id)
            out.append((image_id, tag))
    return out


def geotag_dict(records: Sequence[tuple[str, GeoTag]]) -> dict[str, GeoTag]:
    return dict(records)
