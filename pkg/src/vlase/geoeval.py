"""Great-circle geodesy and the retrieval accuracy protocol.

A query counts as a success at (k, t) when any of its first k retrieved
records lies within t meters of the query's true position. All functions
are pure and thread-safe.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import EvaluationError
from .index import GeoTag

# Mean Earth radius, meters (IUGG R1).
EARTH_RADIUS_M = 6371008.8

DEFAULT_KS = (1, 5)
DEFAULT_THRESHOLDS_M = (5.0, 10.0, 20.0)

REPORT_CSV_COLUMNS = ("k", "threshold_m", "successes", "total", "accuracy")


def haversine_m(a: GeoTag, b: GeoTag) -> float:
    """Great-circle distance in meters on a spherical Earth."""
    lat1, lon1 = math.radians(a.latitude), math.radians(a.longitude)
    lat2, lon2 = math.radians(b.latitude), math.radians(b.longitude)
    sin_dlat = math.sin((lat2 - lat1) / 2.0)
    sin_dlon = math.sin((lon2 - lon1) / 2.0)
    h = sin_dlat * sin_dlat + math.cos(lat1) * math.cos(lat2) * sin_dlon * sin_dlon
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class AccuracyReport:
    """Success fractions per (top-k, distance threshold) cell."""

    ks: tuple[int, ...]
    thresholds_m: tuple[float, ...]
    cells: Mapping[tuple[int, float], tuple[int, int]]  # (k, t) -> (successes, total)

    def successes(self, k: int, threshold_m: float) -> int:
        return self.cells[(k, float(threshold_m))][0]

    def total(self, k: int, threshold_m: float) -> int:
        return self.cells[(k, float(threshold_m))][1]

    def accuracy(self, k: int, threshold_m: float) -> float:
        succ, total = self.cells[(k, float(threshold_m))]
        return succ / total if total else 0.0

    def rows(self) -> list[tuple[int, float, int, int, float]]:
        """(k, threshold_m, successes, total, accuracy) rows in axis order."""
        return [
            (k, t, *self.cells[(k, t)], self.accuracy(k, t))
            for k in self.ks
            for t in self.thresholds_m
        ]

    def format_table(self) -> str:
        """Aligned text table: one row per k, one column per threshold."""
        header = ["top-k \\ t(m)"] + [f"{t:g}" for t in self.thresholds_m]
        lines = [[f"top-{k}"] + [f"{self.accuracy(k, t):.4f}" for t in self.thresholds_m]
                 for k in self.ks]
        widths = [max(len(row[i]) for row in [header] + lines) for i in range(len(header))]
        fmt = "  ".join(f"{{:>{w}}}" for w in widths)
        return "\n".join(fmt.format(*row) for row in [header] + lines)


def evaluate(
    query_results: Mapping[str, Sequence[GeoTag]],
    query_truth: Mapping[str, GeoTag],
    ks: Sequence[int] = DEFAULT_KS,
    thresholds_m: Sequence[float] = DEFAULT_THRESHOLDS_M,
) -> AccuracyReport:
    """Score per-query ranked geotag lists against ground-truth positions.

    ``query_results`` maps each query id to its retrieved geotags in rank
    order; queries returning fewer than max(ks) records are treated as
    failures at the missing ranks. Every query id must appear in
    ``query_truth``.
    """
    ks = tuple(sorted({int(k) for k in ks}))
    thresholds = tuple(sorted({float(t) for t in thresholds_m}))
    if not ks or ks[0] < 1:
        raise EvaluationError(f"top-k values must be >= 1, got {ks}")
    if not thresholds or thresholds[0] < 0:
        raise EvaluationError(f"thresholds must be >= 0 m, got {thresholds}")
    total = len(query_results)
    cells = {(k, t): 0 for k in ks for t in thresholds}
    for qid, ranked in query_results.items():
        if qid not in query_truth:
            raise EvaluationError(f"missing ground truth for query {qid!r}")
        truth = query_truth[qid]
        dists = [haversine_m(tag, truth) for tag in ranked]
        for k in ks:
            best = min(dists[:k], default=math.inf)
            for t in thresholds:
                if best <= t:
                    cells[(k, t)] += 1
    return AccuracyReport(
        ks, thresholds, {key: (succ, total) for key, succ in cells.items()}
    )


def write_report_csv(report: AccuracyReport, path: str | Path) -> None:
    """Write the report as CSV with columns k,threshold_m,successes,total,accuracy."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_CSV_COLUMNS)
        for k, t, succ, total, acc in report.rows():
            writer.writerow([k, repr(float(t)), succ, total, repr(acc)])
