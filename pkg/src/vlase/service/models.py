"""Pydantic request/response models for the service surface.

The CLI builds these same models from its flags, so the HTTP API and the
command line stay one interface.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class NoiseModel(BaseModel):
    prob_sigma: float = Field(default=0.0, ge=0)
    pixel_sigma: float = Field(default=0.0, ge=0)
    gps_sigma_m: float = Field(default=0.0, ge=0)


class SynthRequest(BaseModel):
    out_dir: str
    seed: int = 0
    locations: int = Field(default=50, ge=2)
    passes: int = Field(default=2, ge=1)
    scenario: Literal["generic", "spatial-twin"] = "generic"
    noise: NoiseModel = NoiseModel()
    width: int = Field(default=640, ge=4)
    height: int = Field(default=360, ge=1)
    classes: int = Field(default=19, ge=1)
    density: float = Field(default=60.0, gt=0)
    step_m: float = Field(default=10.0, gt=0)
    bearing_deg: float = 45.0
    start_lat: float = 40.7608
    start_lon: float = -111.8910


class PassSummary(BaseModel):
    pass_id: int
    features_dir: str
    geotags_csv: str
    num_images: int


class SynthResponse(BaseModel):
    passes: list[PassSummary]


class TrainRequest(BaseModel):
    features_dir: str
    out_path: str
    clusters: int = Field(default=64, ge=1)
    alpha: float = Field(default=0.1, ge=0, le=1)
    threshold: float = Field(default=0.5, gt=0, le=1)
    mask: str = "all"
    spatial: bool = True
    seed: int = 0
    epochs: int = Field(default=10, ge=1)
    tol: float = Field(default=1e-4, gt=0)


class TrainResponse(BaseModel):
    out_path: str
    clusters: int
    dim: int
    epochs_run: int
    num_images: int
    num_features: int


class IndexRequest(BaseModel):
    features_dir: str
    geotags_csv: str
    codebook_path: str
    out_path: str


class IndexResponse(BaseModel):
    out_path: str
    num_records: int
    num_empty: int


class QueryMatch(BaseModel):
    query_id: str
    rank: int
    match_id: str
    distance: float
    lat: float
    lon: float


class QueryRequest(BaseModel):
    index_path: str
    codebook_path: str
    features_dir: str
    top_n: int = Field(default=5, ge=1)
    out_path: str | None = None


class QueryResponse(BaseModel):
    num_queries: int
    matches: list[QueryMatch]
    out_path: str | None = None


class EvalRequest(BaseModel):
    results_csv: str
    truth_csv: str
    ks: list[int] = [1, 5]
    thresholds_m: list[float] = [5.0, 10.0, 20.0]
    out_path: str | None = None


class EvalCell(BaseModel):
    k: int
    threshold_m: float
    successes: int
    total: int
    accuracy: float


class EvalResponse(BaseModel):
    cells: list[EvalCell]
    table: str
    out_path: str | None = None


class AblateRequest(BaseModel):
    features_dir: str
    geotags_csv: str
    query_features_dir: str
    query_geotags_csv: str
    out_dir: str
    masks: list[str] = ["all"]
    alphas: list[float] = [0.1]
    clusters: int = Field(default=64, ge=1)
    threshold: float = Field(default=0.5, gt=0, le=1)
    seed: int = 0
    epochs: int = Field(default=10, ge=1)
    tol: float = Field(default=1e-4, gt=0)
    top_n: int = Field(default=5, ge=1)
    ks: list[int] = [1, 5]
    thresholds_m: list[float] = [5.0, 10.0, 20.0]


class AblationCellModel(BaseModel):
    mask: str
    alpha: float
    k: int
    threshold_m: float
    successes: int
    total: int
    accuracy: float


class AblateResponse(BaseModel):
    cells: list[AblationCellModel]
    csv_path: str
    table_path: str


class PixelModel(BaseModel):
    x: int = Field(ge=0)
    y: int = Field(ge=0)
    probs: list[float]


class InlineFeatureMap(BaseModel):
    image_id: str = "query"
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    num_classes: int = Field(ge=1)
    pixels: list[PixelModel]


class LocalizeRequest(BaseModel):
    codebook_path: str
    index_path: str
    map: InlineFeatureMap
    top_n: int = Field(default=5, ge=1)


class LocalizeMatch(BaseModel):
    match_id: str
    distance: float
    lat: float
    lon: float


class LocalizeResponse(BaseModel):
    query_id: str
    matches: list[LocalizeMatch]


class HealthResponse(BaseModel):
    status: str
    version: str
