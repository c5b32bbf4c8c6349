"""Online track association.

Each incoming report is scored against the predicted next position of every
open track. The score is the haversine miss distance (meters) plus the course
change rate (degrees/second). A layered threshold policy then either extends
the best track or opens a new one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping

from .ais_data import Dataset, Node
from .config import read_key_values
from .errors import EmptyDataset, InvalidConfig, NoOpenTracks
from .geodesy import (
    GeoPoint,
    angular_change_rate,
    destination_point,
    estimated_travel_distance,
    haversine_distance,
)


@dataclass(frozen=True)
class Thresholds:
    """Tuning constants for both stages.

    beta_small / beta_large bound the score (meters + degrees/second); mu is
    the travelled-distance cut used between them; alpha caps the course change
    rate (degrees/second). tau (seconds), gamma and eta (meters) drive the
    post-hoc merge.
    """

    beta_small: float = 40.0
    beta_large: float = 550.0
    mu: float = 20.0
    alpha: float = 25.0
    tau: float = 300.0
    gamma: float = 3000.0
    eta: float = 20.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidConfig(f"{f.name} must be a positive number, got {value!r}")
        if not self.beta_small < self.beta_large:
            raise InvalidConfig("beta_small must be smaller than beta_large")

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_mapping(cls, values: Mapping[str, str | float]) -> "Thresholds":
        """Build from a complete mapping; every key must be present, none extra."""
        expected = set(cls.keys())
        unknown = sorted(set(values) - expected)
        if unknown:
            raise InvalidConfig(f"unknown threshold keys: {', '.join(unknown)}")
        missing = [k for k in cls.keys() if k not in values]
        if missing:
            raise InvalidConfig(f"missing threshold keys: {', '.join(missing)}")
        parsed = {}
        for key in cls.keys():
            try:
                parsed[key] = float(values[key])
            except (TypeError, ValueError):
                raise InvalidConfig(f"{key} is not a number: {values[key]!r}") from None
        return cls(**parsed)

    @classmethod
    def from_file(cls, path: str | Path) -> "Thresholds":
        return cls.from_mapping(read_key_values(path))

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass
class TrackState:
    id: int
    node_indices: list[int]
    first: Node
    last: Node
    closed: bool = False

    @classmethod
    def open(cls, track_id: int, node: Node) -> "TrackState":
        return cls(track_id, [node.index], node, node)

    def append(self, node: Node) -> None:
        self.node_indices.append(node.index)
        self.last = node

    @property
    def start_time(self) -> float:
        return self.first.t

    @property
    def end_time(self) -> float:
        return self.last.t


@dataclass(frozen=True)
class ScoreBreakdown:
    s_jk: float
    c_dist: float
    c_ang: float
    d_jk: float
    predicted: GeoPoint


@dataclass
class AssociationResult:
    assignment: dict[int, int] = field(default_factory=dict)
    tracks: list[TrackState] = field(default_factory=list)

    def track(self, track_id: int) -> TrackState:
        for tr in self.tracks:
            if tr.id == track_id:
                return tr
        raise KeyError(track_id)

    def track_lists(self) -> list[tuple[int, list[int]]]:
        return [(tr.id, list(tr.node_indices)) for tr in self.tracks]


class Decision(enum.Enum):
    OPEN_NEW = "open_new"
    ASSIGN = "assign"


def predict_next_position(track: TrackState, node: Node) -> tuple[GeoPoint, float]:
    """Dead-reckon the track's last report forward to ``node.t``.

    Returns the predicted position and the estimated travel distance.
    """
    last = track.last
    d_jk = estimated_travel_distance(node.speed, last.speed, node.t, last.t)
    return destination_point(last.pos, last.course, d_jk), d_jk


def dissimilarity(track: TrackState, node: Node) -> ScoreBreakdown:
    predicted, d_jk = predict_next_position(track, node)
    c_dist = haversine_distance(node.pos, predicted)
    c_ang = angular_change_rate(node.course, track.last.course, node.t, track.last.t)
    return ScoreBreakdown(c_dist + c_ang, c_dist, c_ang, d_jk, predicted)


def best_match(tracks: Iterable[TrackState], node: Node) -> tuple[int, float, ScoreBreakdown]:
    """Lowest-scoring open track for ``node``; ties go to the lowest track id."""
    best: tuple[float, int, ScoreBreakdown] | None = None
    for tr in tracks:
        if tr.closed:
            continue
        bd = dissimilarity(tr, node)
        if best is None or bd.s_jk < best[0] or (bd.s_jk == best[0] and tr.id < best[1]):
            best = (bd.s_jk, tr.id, bd)
    if best is None:
        raise NoOpenTracks("no open track to score against")
    return best[1], best[0], best[2]


def decide(s_k: float, c_ang_z: float, d_zk: float, th: Thresholds) -> Decision:
    mid_band_short_hop = th.beta_small < s_k <= th.beta_large and d_zk <= th.mu
    if mid_band_short_hop or s_k > th.beta_large or c_ang_z > th.alpha:
        return Decision.OPEN_NEW
    return Decision.ASSIGN


def step(state: AssociationResult, node: Node, th: Thresholds) -> AssociationResult:
    """Associate one node, updating ``state`` in place."""
    if state.tracks:
        z, s_k, bd = best_match(state.tracks, node)
        if decide(s_k, bd.c_ang, bd.d_jk, th) is Decision.ASSIGN:
            # ids are dense 1..M during the online pass
            state.tracks[z - 1].append(node)
            state.assignment[node.index] = z
            return state
    new_id = len(state.tracks) + 1
    state.tracks.append(TrackState.open(new_id, node))
    state.assignment[node.index] = new_id
    return state


def run_online(dataset: Dataset, th: Thresholds | None = None) -> AssociationResult:
    """Run the online pass over a dataset in chronological order."""
    if not dataset.nodes:
        raise EmptyDataset("cannot associate an empty dataset")
    th = th or Thresholds()
    state = AssociationResult()
    for node in dataset.nodes:
        step(state, node, th)
    return state
