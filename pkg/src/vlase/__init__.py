"""Semantic-edge VLAD localization: features, codebook, descriptors,
geo-tagged retrieval, evaluation, synthesis, and persistence."""

__version__ = "0.1.0"

from .codebook import Codebook, TrainConfig, assign_nearest, train_codebook
from .errors import (
    ConfigError,
    CorruptionError,
    EvaluationError,
    FormatError,
    InputError,
    TrainingError,
    VlaseError,
)
from .features import (
    CITYSCAPES_CLASSES,
    AugmentConfig,
    ClassMask,
    EdgeFeatureMap,
    apply_alpha,
    apply_mask,
    extract_features,
    select_edge_pixels,
)
from .geoeval import AccuracyReport, evaluate, haversine_m
from .index import GeoIndex, GeoTag, IndexRecord, cosine_distance, query_top_n
from .synth import CaptureNoise, RouteSpec, Scenario, SynthConfig, generate_pass
from .vlad import VladDescriptor, l2_normalize, power_normalize, vlad_aggregate

__all__ = [
    "__version__",
    "AccuracyReport",
    "AugmentConfig",
    "CITYSCAPES_CLASSES",
    "CaptureNoise",
    "ClassMask",
    "Codebook",
    "ConfigError",
    "CorruptionError",
    "EdgeFeatureMap",
    "EvaluationError",
    "FormatError",
    "GeoIndex",
    "GeoTag",
    "IndexRecord",
    "InputError",
    "RouteSpec",
    "Scenario",
    "SynthConfig",
    "TrainConfig",
    "TrainingError",
    "VladDescriptor",
    "VlaseError",
    "apply_alpha",
    "apply_mask",
    "assign_nearest",
    "cosine_distance",
    "evaluate",
    "extract_features",
    "generate_pass",
    "haversine_m",
    "l2_normalize",
    "power_normalize",
    "query_top_n",
    "select_edge_pixels",
    "train_codebook",
    "vlad_aggregate",
]
