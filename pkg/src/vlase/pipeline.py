"""End-to-end orchestration: feature directories in, codebooks, indexes,
query results and ablation sweeps out.

These helpers glue the core modules together for the service handlers and
CLI; per-image descriptor computation is pure and independent per image.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import store
from .codebook import Codebook, train_codebook
from .errors import ConfigError, FormatError
from .features import AugmentConfig, ClassMask, EdgeFeatureMap, extract_features
from .geoeval import AccuracyReport, evaluate
from .index import GeoIndex, GeoTag, IndexRecord, query_top_n
from .vlad import VladDescriptor, vlad_aggregate

RESULTS_CSV_COLUMNS = (
    "query_id",
    "rank",
    "match_id",
    "cosine_distance",
    "match_lat",
    "match_lon",
)


def load_feature_maps(directory: str | Path) -> list[EdgeFeatureMap]:
    """Read every feature file in a directory, sorted by filename."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"feature directory {directory} does not exist")
    paths = sorted(directory.glob(f"*{store.FEATURE_SUFFIX}"))
    if not paths:
        raise ConfigError(f"no {store.FEATURE_SUFFIX} files in {directory}")
    return [store.read_feature_map(p) for p in paths]


def image_batches(
    maps: Sequence[EdgeFeatureMap], cfg: AugmentConfig
) -> list[np.ndarray]:
    """One extracted feature batch per image, in map order."""
    return [extract_features(m, cfg) for m in maps]


def train_from_maps(
    maps: Sequence[EdgeFeatureMap],
    cfg: AugmentConfig,
    clusters: int,
    seed: int,
    max_epochs: int,
    tol: float,
) -> Codebook:
    return train_codebook(
        image_batches(maps, cfg), clusters, seed, max_epochs, tol, augment=cfg
    )


def _require_augment(codebook: Codebook) -> AugmentConfig:
    if codebook.config.augment is None:
        raise ConfigError(
            "codebook carries no augment config; it cannot drive feature extraction"
        )
    return codebook.config.augment


def descriptors_for_maps(
    maps: Sequence[EdgeFeatureMap], codebook: Codebook
) -> list[VladDescriptor]:
    """VLAD descriptor per image under the codebook's own augment config."""
    cfg = _require_augment(codebook)
    return [
        vlad_aggregate(extract_features(m, cfg), codebook, image_id=m.image_id)
        for m in maps
    ]


def build_geo_index(
    maps: Sequence[EdgeFeatureMap],
    geotags: Mapping[str, GeoTag],
    codebook: Codebook,
) -> GeoIndex:
    """Index the mapping pass: one geo-tagged descriptor per image."""
    missing = [m.image_id for m in maps if m.image_id not in geotags]
    if missing:
        raise ConfigError(f"no geotag for image(s): {', '.join(sorted(missing))}")
    records = [
        IndexRecord(desc.image_id, desc, geotags[desc.image_id])
        for desc in descriptors_for_maps(maps, codebook)
    ]
    return GeoIndex(records, store.codebook_fingerprint(codebook))


@dataclass(frozen=True)
class QueryRow:
    query_id: str
    rank: int
    match_id: str
    distance: float
    latitude: float
    longitude: float


def query_maps(
    index: GeoIndex,
    codebook: Codebook,
    maps: Sequence[EdgeFeatureMap],
    top_n: int,
) -> list[QueryRow]:
    """Run every query map through descriptor computation and top-N search."""
    fingerprint = store.codebook_fingerprint(codebook)
    rows: list[QueryRow] = []
    for desc in descriptors_for_maps(maps, codebook):
        hits = query_top_n(index, desc, top_n, fingerprint=fingerprint)
        rows.extend(
            QueryRow(desc.image_id, rank, hit_id, dist, tag.latitude, tag.longitude)
            for rank, (hit_id, dist, tag) in enumerate(hits, start=1)
        )
    return rows


def write_results_csv(path: str | Path, rows: Sequence[QueryRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.query_id,
                    row.rank,
                    row.match_id,
                    repr(row.distance),
                    repr(row.latitude),
                    repr(row.longitude),
                ]
            )


def read_results_csv(path: str | Path) -> dict[str, list[GeoTag]]:
    """Load ranked retrieval results grouped per query, preserving rank order."""
    name = str(path)
    results: dict[str, list[GeoTag]] = {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot open results file: {exc}") from None
    with fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or [c.strip() for c in header] != list(RESULTS_CSV_COLUMNS):
            raise FormatError(
                f"{name}: line 1: expected header {','.join(RESULTS_CSV_COLUMNS)!r}"
            )
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != len(RESULTS_CSV_COLUMNS):
                raise FormatError(
                    f"{name}: line {lineno}: expected "
                    f"{len(RESULTS_CSV_COLUMNS)} fields"
                )
            try:
                rank = int(row[1])
                tag = GeoTag(float(row[4]), float(row[5]))
            except Exception as exc:
                raise FormatError(f"{name}: line {lineno}: {exc}") from None
            ranked = results.setdefault(row[0], [])
            if rank != len(ranked) + 1:
                raise FormatError(
                    f"{name}: line {lineno}: rank {rank} out of sequence for "
                    f"query {row[0]!r}"
                )
            ranked.append(tag)
    if not results:
        raise FormatError(f"{name}: no result rows")
    return results


# -- ablation -----------------------------------------------------------------


@dataclass(frozen=True)
class AblationCell:
    mask: str
    alpha: float
    k: int
    threshold_m: float
    successes: int
    total: int
    accuracy: float


@dataclass(frozen=True)
class AblationRun:
    mask: str
    alpha: float
    report: AccuracyReport


def run_ablation(
    db_maps: Sequence[EdgeFeatureMap],
    db_tags: Mapping[str, GeoTag],
    query_maps_seq: Sequence[EdgeFeatureMap],
    query_tags: Mapping[str, GeoTag],
    mask_specs: Sequence[str],
    alphas: Sequence[float],
    clusters: int,
    seed: int,
    max_epochs: int,
    tol: float,
    threshold: float,
    top_n: int,
    ks: Sequence[int],
    thresholds_m: Sequence[float],
    spatial_enabled: bool = True,
) -> list[AblationRun]:
    """Retrain, index, query, and score once per (mask, alpha) combination.

    The codebook is retrained for every combination: descriptors are only
    comparable under the vocabulary built for their own config.
    """
    num_classes = db_maps[0].num_classes
    runs: list[AblationRun] = []
    for mask_spec in mask_specs:
        mask = ClassMask.parse(mask_spec, num_classes)
        for alpha in alphas:
            cfg = AugmentConfig(
                mask=mask,
                threshold=threshold,
                alpha=float(alpha),
                spatial_enabled=spatial_enabled,
            )
            codebook = train_from_maps(db_maps, cfg, clusters, seed, max_epochs, tol)
            index = build_geo_index(db_maps, db_tags, codebook)
            rows = query_maps(index, codebook, query_maps_seq, top_n)
            per_query: dict[str, list[GeoTag]] = {}
            for row in rows:
                per_query.setdefault(row.query_id, []).append(
                    GeoTag(row.latitude, row.longitude)
                )
            report = evaluate(per_query, query_tags, ks, thresholds_m)
            runs.append(AblationRun(mask_spec, float(alpha), report))
    return runs


def ablation_cells(runs: Sequence[AblationRun]) -> list[AblationCell]:
    return [
        AblationCell(run.mask, run.alpha, k, t, succ, total, acc)
        for run in runs
        for k, t, succ, total, acc in run.report.rows()
    ]


def write_ablation_csv(path: str | Path, runs: Sequence[AblationRun]) -> None:
    """Long-form sweep results; rows double as per-threshold plot data
    (x = threshold_m, y = accuracy, one series per mask/alpha/k)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ("mask", "alpha", "k", "threshold_m", "successes", "total", "accuracy")
        )
        for cell in ablation_cells(runs):
            writer.writerow(
                [
                    cell.mask,
                    repr(cell.alpha),
                    cell.k,
                    repr(cell.threshold_m),
                    cell.successes,
                    cell.total,
                    repr(cell.accuracy),
                ]
            )


def format_ablation_table(runs: Sequence[AblationRun]) -> str:
    """Pivoted text table: one row per (mask, alpha), k x threshold columns."""
    if not runs:
        return ""
    ks = runs[0].report.ks
    thresholds = runs[0].report.thresholds_m
    header = ["mask", "alpha"] + [f"top-{k}@{t:g}m" for k in ks for t in thresholds]
    body = [
        [run.mask, f"{run.alpha:g}"]
        + [f"{run.report.accuracy(k, t):.4f}" for k in ks for t in thresholds]
        for run in runs
    ]
    widths = [
        max(len(row[i]) for row in [header] + body) for i in range(len(header))
    ]
    fmt = "  ".join(f"{{:>{w}}}" for w in widths)
    return "\n".join(fmt.format(*row) for row in [header] + body)
