"""Track-association scoring: error counts, continuity and completeness.

All comparisons are by node identity. Both the true and the associated track
sets must partition the same set of node indices.
"""
from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .errors import PartitionMismatch
from .geodesy import GeoPoint, haversine_distance


@dataclass(frozen=True)
class TrackSetView:
    """Tracks as (id, time-ordered node indices) pairs."""

    tracks: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self) -> None:
        ids = [tid for tid, _ in self.tracks]
        if len(ids) != len(set(ids)):
            raise PartitionMismatch("duplicate track ids")

    @classmethod
    def from_lists(cls, tracks: Iterable[tuple[int, Sequence[int]]]) -> "TrackSetView":
        return cls(tuple((tid, tuple(nodes)) for tid, nodes in tracks))

    @classmethod
    def from_labels(cls, labels: Mapping[int, Hashable], order: Iterable[int]) -> "TrackSetView":
        """Group node indices by label, keeping the given (chronological) order.

        Track ids are 1, 2, ... by first appearance along ``order``.
        """
        groups: dict[Hashable, list[int]] = {}
        for idx in order:
            groups.setdefault(labels[idx], []).append(idx)
        return cls(tuple((i, tuple(nodes)) for i, nodes in enumerate(groups.values(), start=1)))

    def node_set(self) -> set[int]:
        return {idx for _, nodes in self.tracks for idx in nodes}

    def node_count(self) -> int:
        return sum(len(nodes) for _, nodes in self.tracks)

    def segments(self) -> list[frozenset[int]]:
        return [frozenset(pair) for _, nodes in self.tracks for pair in zip(nodes, nodes[1:])]

    def starts(self) -> set[int]:
        return {nodes[0] for _, nodes in self.tracks if nodes}

    def ends(self) -> set[int]:
        return {nodes[-1] for _, nodes in self.tracks if nodes}


@dataclass(frozen=True)
class ErrorCounts:
    missed: int = 0
    extra: int = 0
    merged: int = 0
    broken: int = 0
    swapped: int = 0


@dataclass
class EvaluationReport:
    errors: ErrorCounts
    continuity: float
    completeness_per_true_track: dict[int, float]
    completeness_mean: float
    completeness_median: float
    matching: dict[int, int]
    true_track_count: int = 0
    associated_track_count: int = 0
    true_labels: dict[int, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": "aistrack.evaluation/1",
            "track_counts": {"true": self.true_track_count,
                             "associated": self.associated_track_count},
            "errors": asdict(self.errors),
            "continuity": self.continuity,
            "completeness": {
                "mean": self.completeness_mean,
                "median": self.completeness_median,
                "per_true_track": [
                    {"true_track": tid, "label": self.true_labels.get(tid, str(tid)),
                     "score": score, "matched_track": self.matching[tid]}
                    for tid, score in self.completeness_per_true_track.items()
                ],
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvaluationReport":
        per = data["completeness"]["per_true_track"]
        return cls(
            errors=ErrorCounts(**{k: int(v) for k, v in data["errors"].items()}),
            continuity=float(data["continuity"]),
            completeness_per_true_track={int(e["true_track"]): float(e["score"]) for e in per},
            completeness_mean=float(data["completeness"]["mean"]),
            completeness_median=float(data["completeness"]["median"]),
            matching={int(e["true_track"]): int(e["matched_track"]) for e in per},
            true_track_count=int(data["track_counts"]["true"]),
            associated_track_count=int(data["track_counts"]["associated"]),
            true_labels={int(e["true_track"]): str(e.get("label", e["true_track"])) for e in per},
        )

    def to_text(self) -> str:
        e = self.errors
        values = {
            "true_tracks": self.true_track_count,
            "associated_tracks": self.associated_track_count,
            "missed": e.missed,
            "extra": e.extra,
            "merged": e.merged,
            "broken": e.broken,
            "swapped": e.swapped,
            "continuity": f"{self.continuity:.6f}",
            "completeness_mean": f"{self.completeness_mean:.6f}",
            "completeness_median": f"{self.completeness_median:.6f}",
        }
        return "".join(f"{k}={v}\n" for k, v in values.items())


def _check_partition(truth: TrackSetView, assoc: TrackSetView) -> None:
    for name, view in (("true", truth), ("associated", assoc)):
        if view.node_count() != len(view.node_set()):
            raise PartitionMismatch(f"{name} tracks share a node")
    if truth.node_set() != assoc.node_set():
        raise PartitionMismatch("true and associated tracks cover different nodes")


def count_errors(truth: TrackSetView, assoc: TrackSetView) -> ErrorCounts:
    _check_partition(truth, assoc)
    t_starts, a_starts = truth.starts(), assoc.starts()
    t_ends, a_ends = truth.ends(), assoc.ends()
    true_segments = truth.segments()
    assoc_segments = set(assoc.segments())
    return ErrorCounts(
        missed=len(t_starts - a_starts),
        extra=len(a_starts - t_starts),
        merged=len(t_ends - a_ends),
        broken=len(a_ends - t_ends),
        swapped=sum(1 for seg in true_segments if seg not in assoc_segments),
    )


def continuity_score(truth: TrackSetView, assoc: TrackSetView,
                     positions: Mapping[int, GeoPoint] | Sequence[GeoPoint],
                     distance: Callable[[GeoPoint, GeoPoint], float] = haversine_distance,
                     ) -> float:
    """Length of correctly associated segments over the length of all true segments.

    ``distance`` is called with the two endpoint positions of a segment; pass
    a constant function to score by segment count. With no true segments at
    all the score is 1.0.
    """
    _check_partition(truth, assoc)

    def seg_len(seg: frozenset[int]) -> float:
        a, b = sorted(seg)
        return distance(positions[a], positions[b])

    true_segments = truth.segments()
    if not true_segments:
        return 1.0
    assoc_set = set(assoc.segments())
    lengths = [seg_len(s) for s in true_segments]
    # same summation order on both sides, so a perfect match is exactly 1.0
    denominator = sum(lengths)
    numerator = sum(ln for s, ln in zip(true_segments, lengths) if s in assoc_set)
    if denominator == 0.0:
        # every true segment has zero length; fall back to counting
        return sum(1 for s in true_segments if s in assoc_set) / len(true_segments)
    return numerator / denominator


def completeness_scores(truth: TrackSetView, assoc: TrackSetView
                        ) -> tuple[dict[int, float], float, float, dict[int, int]]:
    """Best single-track coverage of each true track.

    Returns (per-true-track scores, mean, median, matching). The matching maps
    each true track to the associated track holding most of its nodes; ties go
    to the associated track that holds the earliest of the tied nodes.
    """
    _check_partition(truth, assoc)
    owner = {idx: tid for tid, nodes in assoc.tracks for idx in nodes}
    scores: dict[int, float] = {}
    matching: dict[int, int] = {}
    for tid, nodes in truth.tracks:
        if not nodes:
            continue
        shared = Counter(owner[idx] for idx in nodes)
        first_seen: dict[int, int] = {}
        for pos, idx in enumerate(nodes):
            first_seen.setdefault(owner[idx], pos)
        best = max(shared, key=lambda j: (shared[j], -first_seen[j]))
        scores[tid] = shared[best] / len(nodes)
        matching[tid] = best
    values = list(scores.values())
    mean = statistics.fmean(values) if values else 1.0
    median = statistics.median(values) if values else 1.0
    return scores, mean, median, matching


def evaluate(truth: TrackSetView, assoc: TrackSetView,
             positions: Mapping[int, GeoPoint] | Sequence[GeoPoint],
             true_labels: Mapping[int, str] | None = None) -> EvaluationReport:
    errors = count_errors(truth, assoc)
    continuity = continuity_score(truth, assoc, positions)
    scores, mean, median, matching = completeness_scores(truth, assoc)
    return EvaluationReport(
        errors=errors,
        continuity=continuity,
        completeness_per_true_track=scores,
        completeness_mean=mean,
        completeness_median=median,
        matching=matching,
        true_track_count=len(truth.tracks),
        associated_track_count=len(assoc.tracks),
        true_labels=dict(true_labels or {}),
    )
