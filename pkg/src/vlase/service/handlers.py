"""Request handlers: one function per pipeline operation.

The FastAPI routes and the CLI both call these directly; all filesystem
paths are interpreted on the machine running the handler. Every handler
logs its full resolved request before doing any work.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .. import pipeline, store
from ..errors import ConfigError
from ..features import AugmentConfig, ClassMask, EdgeFeatureMap, extract_features
from ..geoeval import evaluate, write_report_csv
from ..index import GeoTag, query_top_n
from ..synth import CaptureNoise, RouteSpec, Scenario, SynthConfig, generate_pass
from ..vlad import vlad_aggregate
from . import models

log = logging.getLogger("vlase")


def _log_request(name: str, request) -> None:
    log.info("%s: resolved config %s", name, request.model_dump())


def handle_synth(req: models.SynthRequest) -> models.SynthResponse:
    _log_request("synth", req)
    cfg = SynthConfig(
        seed=req.seed,
        num_locations=req.locations,
        route=RouteSpec(
            start=GeoTag(req.start_lat, req.start_lon),
            bearing_deg=req.bearing_deg,
            step_m=req.step_m,
        ),
        width=req.width,
        height=req.height,
        num_classes=req.classes,
        edge_density=req.density,
        noise=CaptureNoise(req.noise.prob_sigma, req.noise.pixel_sigma, req.noise.gps_sigma_m),
        scenario=Scenario(req.scenario),
    )
    out_root = Path(req.out_dir)
    summaries = []
    for pass_id in range(req.passes):
        pass_dir = out_root / f"pass{pass_id}"
        features_dir = pass_dir / "features"
        features_dir.mkdir(parents=True, exist_ok=True)
        records = generate_pass(cfg, pass_id)
        for fmap, _ in records:
            store.write_feature_map(
                features_dir / f"{fmap.image_id}{store.FEATURE_SUFFIX}", fmap
            )
        geotags_csv = pass_dir / "geotags.csv"
        store.write_geotags(geotags_csv, [(m.image_id, tag) for m, tag in records])
        summaries.append(
            models.PassSummary(
                pass_id=pass_id,
                features_dir=str(features_dir),
                geotags_csv=str(geotags_csv),
                num_images=len(records),
            )
        )
    return models.SynthResponse(passes=summaries)


def handle_train(req: models.TrainRequest) -> models.TrainResponse:
    _log_request("train", req)
    maps = pipeline.load_feature_maps(req.features_dir)
    cfg = AugmentConfig(
        mask=ClassMask.parse(req.mask, maps[0].num_classes),
        threshold=req.threshold,
        alpha=req.alpha,
        spatial_enabled=req.spatial,
    )
    batches = pipeline.image_batches(maps, cfg)
    codebook = pipeline.train_from_maps(
        maps, cfg, req.clusters, req.seed, req.epochs, req.tol
    )
    store.write_codebook(req.out_path, codebook)
    return models.TrainResponse(
        out_path=req.out_path,
        clusters=codebook.num_clusters,
        dim=codebook.dim,
        epochs_run=codebook.epochs_run,
        num_images=len(maps),
        num_features=sum(len(b) for b in batches),
    )


def handle_index(req: models.IndexRequest) -> models.IndexResponse:
    _log_request("index", req)
    codebook = store.read_codebook(req.codebook_path)
    maps = pipeline.load_feature_maps(req.features_dir)
    geotags = store.geotag_dict(store.read_geotags(req.geotags_csv))
    index = pipeline.build_geo_index(maps, geotags, codebook)
    store.write_index(req.out_path, index)
    empty = sum(1 for rec in index.records if rec.descriptor.is_empty)
    return models.IndexResponse(
        out_path=req.out_path, num_records=len(index), num_empty=empty
    )


def handle_query(req: models.QueryRequest) -> models.QueryResponse:
    _log_request("query", req)
    codebook = store.read_codebook(req.codebook_path)
    index = store.read_index(req.index_path)
    maps = pipeline.load_feature_maps(req.features_dir)
    rows = pipeline.query_maps(index, codebook, maps, req.top_n)
    if req.out_path:
        pipeline.write_results_csv(req.out_path, rows)
    matches = [
        models.QueryMatch(
            query_id=r.query_id,
            rank=r.rank,
            match_id=r.match_id,
            distance=r.distance,
            lat=r.latitude,
            lon=r.longitude,
        )
        for r in rows
    ]
    return models.QueryResponse(
        num_queries=len(maps), matches=matches, out_path=req.out_path
    )


def handle_eval(req: models.EvalRequest) -> models.EvalResponse:
    _log_request("eval", req)
    results = pipeline.read_results_csv(req.results_csv)
    truth = store.geotag_dict(store.read_geotags(req.truth_csv))
    report = evaluate(results, truth, req.ks, req.thresholds_m)
    if req.out_path:
        write_report_csv(report, req.out_path)
    cells = [
        models.EvalCell(k=k, threshold_m=t, successes=s, total=n, accuracy=a)
        for k, t, s, n, a in report.rows()
    ]
    return models.EvalResponse(
        cells=cells, table=report.format_table(), out_path=req.out_path
    )


def handle_ablate(req: models.AblateRequest) -> models.AblateResponse:
    _log_request("ablate", req)
    db_maps = pipeline.load_feature_maps(req.features_dir)
    db_tags = store.geotag_dict(store.read_geotags(req.geotags_csv))
    q_maps = pipeline.load_feature_maps(req.query_features_dir)
    q_tags = store.geotag_dict(store.read_geotags(req.query_geotags_csv))
    if req.top_n < max(req.ks):
        raise ConfigError(
            f"top_n={req.top_n} is smaller than the largest requested k "
            f"({max(req.ks)})"
        )
    runs = pipeline.run_ablation(
        db_maps,
        db_tags,
        q_maps,
        q_tags,
        req.masks,
        req.alphas,
        req.clusters,
        req.seed,
        req.epochs,
        req.tol,
        req.threshold,
        req.top_n,
        req.ks,
        req.thresholds_m,
    )
    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "ablation.csv"
    table_path = out_dir / "ablation_table.txt"
    pipeline.write_ablation_csv(csv_path, runs)
    table_path.write_text(pipeline.format_ablation_table(runs) + "\n")
    cells = [
        models.AblationCellModel(**cell.__dict__)
        for cell in pipeline.ablation_cells(runs)
    ]
    return models.AblateResponse(
        cells=cells, csv_path=str(csv_path), table_path=str(table_path)
    )


def handle_localize(req: models.LocalizeRequest) -> models.LocalizeResponse:
    """Single-image localization against a stored index: the long-running
    service path."""
    _log_request("localize", req)
    codebook = store.read_codebook(req.codebook_path)
    index = store.read_index(req.index_path)
    fmap = EdgeFeatureMap.from_pixels(
        req.map.image_id,
        req.map.width,
        req.map.height,
        req.map.num_classes,
        [(p.x, p.y, p.probs) for p in req.map.pixels],
    )
    cfg = codebook.config.augment
    if cfg is None:
        raise ConfigError("codebook carries no augment config")
    desc = vlad_aggregate(extract_features(fmap, cfg), codebook, fmap.image_id)
    hits = query_top_n(
        index, desc, req.top_n, fingerprint=store.codebook_fingerprint(codebook)
    )
    return models.LocalizeResponse(
        query_id=fmap.image_id,
        matches=[
            models.LocalizeMatch(
                match_id=hit_id, distance=dist, lat=tag.latitude, lon=tag.longitude
            )
            for hit_id, dist, tag in hits
        ],
    )
