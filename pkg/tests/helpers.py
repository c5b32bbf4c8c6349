"""Shared fixtures: the four-vessel worked example and a naive baseline tracker."""
from __future__ import annotations

import random

from aistrack.ais_data import Dataset
from aistrack.geodesy import GeoPoint, haversine_distance
from aistrack.metrics import TrackSetView

# Node labels in report-time order; the list position is the node index.
WORKED_ORDER = ["C1", "A1", "D1", "B1", "A2", "D2", "B2", "A3", "B3", "D3", "C2", "C3", "B4", "C4"]
WORKED_TRUE = {
    1: ["A1", "A2", "A3"],
    2: ["B1", "B2", "B3", "B4"],
    3: ["C1", "C2", "C3", "C4"],
    4: ["D1", "D2", "D3"],
}
# associated tracks rebuilt from the segment list below
WORKED_ASSOC = {
    1: ["A1", "A2", "B2"],
    2: ["D1", "D2", "A3", "D3"],
    3: ["C1", "B1", "B3", "B4"],
    4: ["C2", "C3", "C4"],
}
WORKED_TRUE_SEGMENTS = ["A1-A2", "A2-A3", "B1-B2", "B2-B3", "B3-B4",
                      "C1-C2", "C2-C3", "C3-C4", "D1-D2", "D2-D3"]
WORKED_ASSOC_SEGMENTS = ["A1-A2", "A2-B2", "D1-D2", "D2-A3", "A3-D3",
                       "C1-B1", "B1-B3", "B3-B4", "C2-C3", "C3-C4"]


def _idx(label: str) -> int:
    return WORKED_ORDER.index(label)


def worked_views() -> tuple[TrackSetView, TrackSetView]:
    truth = TrackSetView.from_lists((tid, [_idx(n) for n in nodes]) for tid, nodes in WORKED_TRUE.items())
    assoc = TrackSetView.from_lists((tid, [_idx(n) for n in nodes]) for tid, nodes in WORKED_ASSOC.items())
    return truth, assoc


def worked_positions() -> list[GeoPoint]:
    """Each vessel on its own meridian, consecutive reports 0.01 deg apart."""
    lon = {"A": -76.30, "B": -76.25, "C": -76.20, "D": -76.15}
    return [GeoPoint(36.90 + 0.01 * int(label[1]), lon[label[0]]) for label in WORKED_ORDER]


def worked_csv_texts() -> tuple[str, str]:
    """(truth CSV with VID, associated CSV with TRACK_ID) for the worked example."""
    pos = worked_positions()
    vessel_of = {n: tid for tid, nodes in WORKED_TRUE.items() for n in nodes}
    track_of = {n: tid for tid, nodes in WORKED_ASSOC.items() for n in nodes}
    truth = ["VID,TIME,LAT,LON,SPEED,COURSE"]
    assoc = ["TIME,LAT,LON,SPEED,COURSE,TRACK_ID"]
    for i, label in enumerate(WORKED_ORDER):
        common = f"00:00:{i:02d},{pos[i].lat:.6f},{pos[i].lon:.6f},50,0"
        truth.append(f"{100000 + vessel_of[label]},{common}")
        assoc.append(f"{common},{track_of[label]}")
    return "\n".join(truth) + "\n", "\n".join(assoc) + "\n"


def random_partition(rng: random.Random, n_nodes: int, max_tracks: int) -> TrackSetView:
    labels = {i: rng.randrange(max_tracks) for i in range(n_nodes)}
    return TrackSetView.from_labels(labels, range(n_nodes))


def nearest_neighbor_baseline(dataset: Dataset, gate_m: float = 500.0) -> dict[int, int]:
    """Nearest last-report association with a fixed distance gate, no prediction."""
    last = {}
    assignment = {}
    for node in dataset.nodes:
        best = min(((haversine_distance(prev.pos, node.pos), tid) for tid, prev in last.items()),
                   default=None)
        tid = best[1] if best is not None and best[0] <= gate_m else len(last) + 1
        last[tid] = node
        assignment[node.index] = tid
    return assignment


def chronological(dataset: Dataset) -> list[int]:
    return [n.index for n in dataset.nodes]
