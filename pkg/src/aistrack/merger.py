"""Post-hoc merging of over-segmented tracks.

The online pass tends to open a fresh track after a reporting gap or a sharp
turn. This pass walks the tracks by start time and folds a track into an
earlier one that ended shortly before it started nearby, unless the track
began somewhere a vessel can legitimately appear (the sea boundary of the
monitored area, or a parking area early in the observation window).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

from shapely.geometry import Point, Polygon

from .ais_data import Dataset
from .associator import AssociationResult, Thresholds, TrackState
from .errors import InvalidRegionConfig
from .geodesy import EARTH_RADIUS_M, GeoPoint, haversine_distance


class RegionClass(enum.Enum):
    BOUNDARY = "boundary"
    MIDDLE = "middle"
    PARKING = "parking"


class _LocalProjection:
    """Equirectangular projection to meters around a reference point.

    Good to well under a percent over the few tens of kilometres a monitored
    harbour area spans.
    """

    def __init__(self, ref: GeoPoint) -> None:
        self.lat0 = ref.lat
        self.lon0 = ref.lon
        self.kx = math.radians(1.0) * EARTH_RADIUS_M * math.cos(math.radians(ref.lat))
        self.ky = math.radians(1.0) * EARTH_RADIUS_M

    def __call__(self, p: GeoPoint) -> tuple[float, float]:
        return ((p.lon - self.lon0) * self.kx, (p.lat - self.lat0) * self.ky)

    def inverse(self, x: float, y: float) -> GeoPoint:
        return GeoPoint(self.lat0 + y / self.ky, self.lon0 + x / self.kx)


def _ring(vertices: Sequence[GeoPoint]) -> tuple[GeoPoint, ...]:
    ring = tuple(vertices)
    if len(ring) > 1 and ring[0] == ring[-1]:
        ring = ring[:-1]
    return ring


@dataclass(frozen=True)
class RegionConfig:
    monitored_boundary: tuple[GeoPoint, ...]
    parking_zones: tuple[tuple[GeoPoint, ...], ...] = ()
    boundary_band_m: float = 500.0
    parking_window_s: float = 1800.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "monitored_boundary", _ring(self.monitored_boundary))
        object.__setattr__(self, "parking_zones", tuple(_ring(z) for z in self.parking_zones))
        if not self.boundary_band_m > 0:
            raise InvalidRegionConfig("boundary_band_m must be positive")
        if not self.parking_window_s >= 0:
            raise InvalidRegionConfig("parking_window_s must be non-negative")
        for name, poly in [("BOUNDARY", self._boundary_poly)] + [
            ("PARKING", p) for p in self._parking_polys
        ]:
            if not poly.is_valid or poly.area <= 0:
                raise InvalidRegionConfig(f"{name} polygon is degenerate or self-intersecting")

    @cached_property
    def _proj(self) -> _LocalProjection:
        if len(self.monitored_boundary) < 3:
            raise InvalidRegionConfig("BOUNDARY polygon needs at least 3 vertices")
        lat = sum(p.lat for p in self.monitored_boundary) / len(self.monitored_boundary)
        lon = sum(p.lon for p in self.monitored_boundary) / len(self.monitored_boundary)
        return _LocalProjection(GeoPoint(lat, lon))

    def _polygon(self, ring: Sequence[GeoPoint]) -> Polygon:
        if len(ring) < 3:
            raise InvalidRegionConfig("polygon needs at least 3 vertices")
        return Polygon([self._proj(p) for p in ring])

    @cached_property
    def _boundary_poly(self) -> Polygon:
        return self._polygon(self.monitored_boundary)

    @cached_property
    def _parking_polys(self) -> list[Polygon]:
        return [self._polygon(z) for z in self.parking_zones]

    def project(self, p: GeoPoint) -> tuple[float, float]:
        """Local planar coordinates in meters (x east, y north)."""
        return self._proj(p)

    def unproject(self, x: float, y: float) -> GeoPoint:
        return self._proj.inverse(x, y)

    @property
    def boundary_polygon(self) -> Polygon:
        """The monitored area in projected meters."""
        return self._boundary_poly

    @property
    def parking_polygons(self) -> list[Polygon]:
        return list(self._parking_polys)

    def contains(self, p: GeoPoint) -> bool:
        return self._boundary_poly.covers(Point(self._proj(p)))

    def in_parking(self, p: GeoPoint) -> bool:
        pt = Point(self._proj(p))
        return any(poly.covers(pt) for poly in self._parking_polys)

    def distance_to_edge(self, p: GeoPoint) -> float:
        """Meters from ``p`` to the monitored boundary; 0 outside the area."""
        pt = Point(self._proj(p))
        if not self._boundary_poly.covers(pt):
            return 0.0
        return self._boundary_poly.exterior.distance(pt)

    def classify(self, p: GeoPoint) -> RegionClass:
        if self.in_parking(p):
            return RegionClass.PARKING
        if self.distance_to_edge(p) <= self.boundary_band_m:
            return RegionClass.BOUNDARY
        return RegionClass.MIDDLE


def region_from_dataset(dataset: Dataset, boundary_band_m: float = 500.0,
                        parking_window_s: float = 1800.0) -> RegionConfig:
    """Default region: the bounding box of every report, no parking areas."""
    lats = [n.pos.lat for n in dataset.nodes]
    lons = [n.pos.lon for n in dataset.nodes]
    lo_lat, hi_lat, lo_lon, hi_lon = min(lats), max(lats), min(lons), max(lons)
    # a degenerate box (single report, or one straight meridian) still needs area
    pad = 1e-6
    if hi_lat - lo_lat < pad:
        lo_lat, hi_lat = lo_lat - pad, hi_lat + pad
    if hi_lon - lo_lon < pad:
        lo_lon, hi_lon = lo_lon - pad, hi_lon + pad
    box = (GeoPoint(lo_lat, lo_lon), GeoPoint(lo_lat, hi_lon),
           GeoPoint(hi_lat, hi_lon), GeoPoint(hi_lat, lo_lon))
    return RegionConfig(box, (), boundary_band_m, parking_window_s)


def parse_region_text(text: str) -> RegionConfig:
    """Parse the region geometry format.

    ::

        # optional settings
        band_m = 500
        parking_window_s = 1800
        BOUNDARY
        36.80,-76.45
        ...
        PARKING
        36.95,-76.33
        ...

    Exactly one BOUNDARY block; any number of PARKING blocks.
    """
    settings: dict[str, float] = {}
    blocks: list[tuple[str, list[GeoPoint]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag = line.upper()
        if tag in ("BOUNDARY", "PARKING"):
            blocks.append((tag, []))
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if key not in ("band_m", "parking_window_s"):
                raise InvalidRegionConfig(f"line {line_no}: unknown setting {key!r}")
            try:
                settings[key] = float(value)
            except ValueError:
                raise InvalidRegionConfig(f"line {line_no}: bad number {value.strip()!r}") from None
            continue
        if not blocks:
            raise InvalidRegionConfig(f"line {line_no}: vertex outside a BOUNDARY/PARKING block")
        try:
            lat_s, lon_s = line.split(",")
            blocks[-1][1].append(GeoPoint(float(lat_s), float(lon_s)))
        except ValueError as exc:
            raise InvalidRegionConfig(f"line {line_no}: bad vertex {line!r} ({exc})") from None

    boundaries = [pts for tag, pts in blocks if tag == "BOUNDARY"]
    if len(boundaries) != 1:
        raise InvalidRegionConfig(f"expected one BOUNDARY block, found {len(boundaries)}")
    return RegionConfig(
        monitored_boundary=tuple(boundaries[0]),
        parking_zones=tuple(tuple(pts) for tag, pts in blocks if tag == "PARKING"),
        boundary_band_m=settings.get("band_m", 500.0),
        parking_window_s=settings.get("parking_window_s", 1800.0),
    )


def load_region(path: str | Path) -> RegionConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidRegionConfig(f"cannot read {path}: {exc}") from None
    return parse_region_text(text)


def format_region(cfg: RegionConfig) -> str:
    lines = [f"band_m = {cfg.boundary_band_m:g}", f"parking_window_s = {cfg.parking_window_s:g}",
             "BOUNDARY"]
    lines += [f"{p.lat:.6f},{p.lon:.6f}" for p in cfg.monitored_boundary]
    for zone in cfg.parking_zones:
        lines.append("PARKING")
        lines += [f"{p.lat:.6f},{p.lon:.6f}" for p in zone]
    return "\n".join(lines) + "\n"


def classify_origin(track: TrackState, cfg: RegionConfig) -> RegionClass:
    return cfg.classify(track.first.pos)


def candidate_set(j: TrackState, tracks: Sequence[TrackState]) -> list[TrackState]:
    """Tracks other than ``j`` whose last report is strictly before ``j`` starts."""
    return [a for a in tracks if a is not j and a.id != j.id and j.start_time > a.end_time]


def link_distance(j: TrackState, a: TrackState) -> float:
    """Haversine distance from the end of ``a`` to the start of ``j``."""
    return haversine_distance(j.first.pos, a.last.pos)


def merge_condition(j: TrackState, a: TrackState, th: Thresholds) -> bool:
    dist = link_distance(j, a)
    gap = j.start_time - a.end_time
    return (gap >= th.tau and dist <= th.gamma) or dist <= th.eta


def _skip(track: TrackState, cfg: RegionConfig) -> bool:
    origin = classify_origin(track, cfg)
    if origin is RegionClass.BOUNDARY:
        return True
    return origin is RegionClass.PARKING and track.start_time < cfg.parking_window_s


def posthoc_merge(result: AssociationResult, cfg: RegionConfig,
                  th: Thresholds | None = None) -> AssociationResult:
    """Single pass over tracks by start time, merging each into its nearest candidate.

    The input is left untouched. Track ids in the output are renumbered
    1..M' by start time.
    """
    th = th or Thresholds()
    pool = [
        TrackState(tr.id, list(tr.node_indices), tr.first, tr.last, tr.closed)
        for tr in sorted(result.tracks, key=lambda tr: (tr.start_time, tr.first.index, tr.id))
    ]
    alive = {tr.id: tr for tr in pool}

    for j in pool:
        if j.id not in alive or _skip(j, cfg):
            continue
        qualifying = [
            (link_distance(j, a), a.id, a)
            for a in candidate_set(j, list(alive.values()))
            if merge_condition(j, a, th)
        ]
        if not qualifying:
            continue
        _, _, target = min(qualifying, key=lambda q: (q[0], q[1]))
        target.node_indices.extend(j.node_indices)
        target.last = j.last
        del alive[j.id]

    survivors = sorted(alive.values(), key=lambda tr: (tr.start_time, tr.first.index))
    out = AssociationResult()
    for new_id, tr in enumerate(survivors, start=1):
        out.tracks.append(TrackState(new_id, tr.node_indices, tr.first, tr.last, closed=True))
        for idx in tr.node_indices:
            out.assignment[idx] = new_id
    return out

