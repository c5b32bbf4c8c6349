"""Track association for anonymous AIS position reports."""
from __future__ import annotations

from .ais_data import Dataset, Node, load_dataset, write_associated
from .associator import AssociationResult, Thresholds, TrackState, run_online
from .merger import RegionConfig, load_region, posthoc_merge, region_from_dataset
from .metrics import EvaluationReport, TrackSetView, evaluate

__version__ = "0.1.0"

__all__ = [
    "AssociationResult",
    "Dataset",
    "EvaluationReport",
    "Node",
    "RegionConfig",
    "Thresholds",
    "TrackSetView",
    "TrackState",
    "evaluate",
    "load_dataset",
    "load_region",
    "posthoc_merge",
    "region_from_dataset",
    "run_online",
    "write_associated",
]
