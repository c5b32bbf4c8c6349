"""Synthetic AIS scenarios with ground truth.

Vessels steer between random waypoints with bounded turn rate and
acceleration, occasionally stopping. Some start parked, some enter through
the sea boundary part way through, some leave through it. Positions are
advanced once per second with the same destination-point formula the
associator uses for prediction, and reports are emitted at jittered
intervals, quantized exactly as an AIS CSV file stores them.

This is test scaffolding; it makes no claim to hydrodynamic realism.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from shapely.geometry import Point
from shapely.ops import nearest_points

from .ais_data import (
    HEADER_WITH_VID,
    KNOT_MS,
    Dataset,
    dataset_from_rows,
    format_clock,
    seconds_of_day,
)
from .config import read_key_values
from .errors import GapSwallowsTrack, InvalidConfig, InvalidRegionConfig, MalformedRow
from .geodesy import GeoPoint, destination_point, haversine_distance, initial_bearing
from .merger import RegionConfig, load_region
from .metrics import TrackSetView

GAP_MODES = ("none", "global", "per_track")
LAYOUTS = ("shared", "separated")

VID_BASE = 100001


@dataclass(frozen=True)
class GapSpec:
    """Where reports are deleted.

    ``global``: every vessel is silent during each (start, length) window.
    ``per_track``: a ``fraction`` of the vessels each lose one window whose
    length is drawn from ``length_range``.
    """

    mode: str = "none"
    windows: tuple[tuple[float, float], ...] = ()
    fraction: float = 0.0
    length_range: tuple[float, float] = (300.0, 900.0)

    def __post_init__(self) -> None:
        if self.mode not in GAP_MODES:
            raise InvalidConfig(f"gap mode must be one of {GAP_MODES}, got {self.mode!r}")
        for start, length in self.windows:
            if start < 0 or length <= 0:
                raise InvalidConfig(f"bad gap window ({start}, {length})")
        if not 0.0 <= self.fraction <= 1.0:
            raise InvalidConfig("gap fraction must be within [0, 1]")
        lo, hi = self.length_range
        if not 0 < lo <= hi:
            raise InvalidConfig("gap length range must satisfy 0 < min <= max")

    def check_within(self, duration_s: float) -> None:
        for start, length in self.windows:
            if start + length > duration_s:
                raise InvalidConfig(f"gap window ({start}, {length}) runs past the scenario end")
        if self.mode == "per_track" and self.length_range[1] * 3 > duration_s:
            raise InvalidConfig("per-track gap lengths too long for the scenario duration")


def default_region() -> RegionConfig:
    """A harbour-sized box (about 33 x 36 km) with two parking areas on its west side."""
    box = (GeoPoint(36.85, -76.45), GeoPoint(36.85, -76.05),
           GeoPoint(37.15, -76.05), GeoPoint(37.15, -76.45))
    parking = (
        (GeoPoint(36.90, -76.43), GeoPoint(36.90, -76.41),
         GeoPoint(36.915, -76.41), GeoPoint(36.915, -76.43)),
        (GeoPoint(37.05, -76.43), GeoPoint(37.05, -76.41),
         GeoPoint(37.065, -76.41), GeoPoint(37.065, -76.43)),
    )
    return RegionConfig(box, parking)


@dataclass(frozen=True)
class ScenarioConfig:
    vessel_count: int
    duration_s: float = 4 * 3600.0
    sample_period_s: float = 15.0
    jitter: float = 0.3
    region: RegionConfig | None = None
    gap_spec: GapSpec = field(default_factory=GapSpec)
    seed: int = 0
    layout: str = "shared"
    min_separation_m: float = 10_000.0
    straight: bool = False
    speed_range: tuple[float, float] = (1.0, 9.0)
    max_turn_rate: float = 1.0
    max_accel: float = 0.05
    entry_fraction: float = 0.2
    exit_fraction: float = 0.2
    parking_fraction: float = 0.1
    dwell_probability: float = 0.15
    start_clock_s: int = 8 * 3600

    def __post_init__(self) -> None:
        if not isinstance(self.vessel_count, int) or self.vessel_count < 1:
            raise InvalidConfig("vessel_count must be a positive integer")
        if not self.duration_s > 0:
            raise InvalidConfig("duration_s must be positive")
        if not self.sample_period_s > 0:
            raise InvalidConfig("sample_period_s must be positive")
        if not 0 <= self.jitter < 1:
            raise InvalidConfig("jitter must be within [0, 1)")
        if self.layout not in LAYOUTS:
            raise InvalidConfig(f"layout must be one of {LAYOUTS}")
        lo, hi = self.speed_range
        if not 0 <= lo <= hi <= 15.0:
            raise InvalidConfig("speed range must satisfy 0 <= min <= max <= 15 m/s")
        if not self.max_turn_rate > 0 or not self.max_accel > 0:
            raise InvalidConfig("max_turn_rate and max_accel must be positive")
        for name in ("entry_fraction", "exit_fraction", "parking_fraction", "dwell_probability"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidConfig(f"{name} must be within [0, 1]")
        if self.entry_fraction + self.parking_fraction > 1:
            raise InvalidConfig("entry_fraction + parking_fraction must not exceed 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        self.gap_spec.check_within(self.duration_s)


# --------------------------------------------------------------------------
# motion


@dataclass
class _Plan:
    vid: str
    kind: str  # "middle", "parked", "entering"
    start_t: float
    exit_t: float | None
    depart_t: float | None  # parked vessels only
    home: tuple[float, float] | None = None  # separated layout: disc centre (x, y)


def _wrap180(angle: float) -> float:
    return (angle + 180.0) % 360.0 - 180.0


class _Steering:
    def __init__(self, cfg: ScenarioConfig, region: RegionConfig, rng: np.random.Generator,
                 home: tuple[float, float] | None, home_radius: float) -> None:
        self.cfg = cfg
        self.region = region
        self.rng = rng
        self.home = home
        self.home_radius = home_radius
        self.poly = region.boundary_polygon

    def interior_point(self, margin: float) -> GeoPoint:
        if self.home is not None:
            r = self.home_radius * math.sqrt(self.rng.uniform())
            a = self.rng.uniform(0, 2 * math.pi)
            return self.region.unproject(self.home[0] + r * math.cos(a), self.home[1] + r * math.sin(a))
        minx, miny, maxx, maxy = self.poly.bounds
        parking = self.region.parking_polygons
        for _ in range(10_000):
            x, y = self.rng.uniform(minx, maxx), self.rng.uniform(miny, maxy)
            pt = Point(x, y)
            if (self.poly.covers(pt) and self.poly.exterior.distance(pt) >= margin
                    and not any(pk.covers(pt) for pk in parking)):
                return self.region.unproject(x, y)
        raise InvalidRegionConfig("monitored area too small to place vessels")

    def cruise_speed(self) -> float:
        lo, hi = self.cfg.speed_range
        return float(self.rng.uniform(lo, hi))


def _waypoint_margin(cfg: ScenarioConfig, region: RegionConfig) -> float:
    return region.boundary_band_m + 1500.0


def _simulate(plan: _Plan, cfg: ScenarioConfig, region: RegionConfig,
              rng: np.random.Generator, home_radius: float) -> list[tuple[int, GeoPoint, float, float]]:
    """Return (time, position, speed m/s, course deg) at each report instant."""
    steer = _Steering(cfg, region, rng, plan.home, home_radius)
    margin = _waypoint_margin(cfg, region)
    omega = cfg.max_turn_rate
    accel = cfg.max_accel

    if plan.kind == "parked":
        zone = region.parking_polygons[int(rng.integers(len(region.parking_polygons)))]
        minx, miny, maxx, maxy = zone.bounds
        while True:
            x, y = rng.uniform(minx, maxx), rng.uniform(miny, maxy)
            if zone.covers(Point(x, y)):
                break
        pos = region.unproject(x, y)
        speed, target = 0.0, 0.0
        course = float(rng.uniform(0, 360))
        waypoint = None
    elif plan.kind == "entering":
        edge = steer.poly.exterior
        e = edge.interpolate(float(rng.uniform(0, edge.length)))
        cx, cy = steer.poly.centroid.x, steer.poly.centroid.y
        dx, dy = cx - e.x, cy - e.y
        norm = math.hypot(dx, dy) or 1.0
        pos = region.unproject(e.x + 100 * dx / norm, e.y + 100 * dy / norm)
        waypoint = steer.interior_point(margin)
        course = initial_bearing(pos, waypoint)
        speed = target = steer.cruise_speed()
    else:
        pos = steer.interior_point(margin)
        waypoint = steer.interior_point(margin)
        course = initial_bearing(pos, waypoint)
        speed = target = steer.cruise_speed()
    if cfg.straight:
        waypoint = None
        target = speed = speed if plan.kind != "parked" else 0.0

    period = cfg.sample_period_s
    t = int(math.ceil(plan.start_t))
    next_report = t
    end_t = int(cfg.duration_s)
    dwell_until: float | None = None
    exiting = False
    reports: list[tuple[int, GeoPoint, float, float]] = []

    while t < end_t:
        if plan.exit_t is not None and not exiting and t >= plan.exit_t:
            exiting = True
            here = Point(region.project(pos))
            _, edge_pt = nearest_points(here, steer.poly.exterior)
            dx, dy = edge_pt.x - here.x, edge_pt.y - here.y
            norm = math.hypot(dx, dy) or 1.0
            waypoint = region.unproject(edge_pt.x + 3000 * dx / norm, edge_pt.y + 3000 * dy / norm)
            target = max(target, steer.cruise_speed(), 2.0)
            dwell_until = None
        if exiting and not region.contains(pos):
            break

        if t >= next_report:
            reports.append((t, pos, speed, course % 360.0))
            step = period * float(rng.uniform(1 - cfg.jitter, 1 + cfg.jitter))
            next_report = t + max(1, int(round(step)))

        if plan.kind == "parked" and not exiting:
            if plan.depart_t is not None and t >= plan.depart_t:
                plan.kind = "middle"
                waypoint = steer.interior_point(margin)
                target = steer.cruise_speed()
        elif dwell_until is not None:
            target = 0.0
            if speed == 0.0 and t >= dwell_until:
                dwell_until = None
                waypoint = steer.interior_point(margin)
                target = steer.cruise_speed()
        elif waypoint is not None and not cfg.straight:
            desired = initial_bearing(pos, waypoint)
            turn = max(-omega, min(omega, _wrap180(desired - course)))
            course = (course + turn) % 360.0
            arrive = 200.0 + speed / math.radians(omega)
            if not exiting and haversine_distance(pos, waypoint) < arrive:
                if rng.uniform() < cfg.dwell_probability:
                    dwell_until = t + float(rng.uniform(300, 1200))
                    target = 0.0
                else:
                    waypoint = steer.interior_point(margin)
                    target = steer.cruise_speed()

        new_speed = speed + max(-accel, min(accel, target - speed))
        dist = (speed + new_speed) / 2.0
        speed = new_speed
        if dist > 0:
            pos = destination_point(pos, course, dist)
        t += 1
    return reports


def _plans(cfg: ScenarioConfig, region: RegionConfig, rng: np.random.Generator,
           home_radius: float) -> list[_Plan]:
    n = cfg.vessel_count
    period = cfg.sample_period_s
    plans: list[_Plan] = []
    if cfg.layout == "separated":
        spacing = 2 * home_radius + cfg.min_separation_m + 1000.0
        cols = math.ceil(math.sqrt(n))
        for i in range(n):
            r, c = divmod(i, cols)
            home = (c * spacing, r * spacing)
            plans.append(_Plan(str(VID_BASE + i), "middle", float(rng.uniform(0, period)), None, None, home))
        return plans

    n_park = int(round(cfg.parking_fraction * n)) if region.parking_zones else 0
    n_entry = int(round(cfg.entry_fraction * n))
    n_entry = min(n_entry, n - n_park)
    kinds = ["parked"] * n_park + ["entering"] * n_entry + ["middle"] * (n - n_park - n_entry)
    kinds = [kinds[i] for i in rng.permutation(n)]
    dur = cfg.duration_s
    for i, kind in enumerate(kinds):
        if kind == "entering":
            start = float(rng.uniform(min(1800.0, dur / 4), max(dur / 4, dur - 3600.0)))
        else:
            start = float(rng.uniform(0, period))
        depart = None
        if kind == "parked" and rng.uniform() < 0.5:
            depart = float(rng.uniform(0.2 * dur, 0.7 * dur))
        plans.append(_Plan(str(VID_BASE + i), kind, start, None, depart))
    exit_candidates = [p for p in plans if p.kind != "parked"]
    n_exit = min(len(exit_candidates), int(round(cfg.exit_fraction * n)))
    for idx in rng.permutation(len(exit_candidates))[:n_exit]:
        p = exit_candidates[int(idx)]
        lo = max(p.start_t + 1800.0, 0.4 * dur)
        if lo < 0.9 * dur:
            p.exit_t = float(rng.uniform(lo, 0.9 * dur))
    return plans


def _separated_region(cfg: ScenarioConfig, home_radius: float, anchor: GeoPoint) -> RegionConfig:
    spacing = 2 * home_radius + cfg.min_separation_m + 1000.0
    cols = math.ceil(math.sqrt(cfg.vessel_count))
    rows = math.ceil(cfg.vessel_count / cols)
    pad = home_radius + 5000.0
    base = RegionConfig((anchor, destination_point(anchor, 90, 1000), destination_point(anchor, 0, 1000)))
    corners = [(-pad, -pad), ((cols - 1) * spacing + pad, -pad),
               ((cols - 1) * spacing + pad, (rows - 1) * spacing + pad), (-pad, (rows - 1) * spacing + pad)]
    return RegionConfig(tuple(base.unproject(x, y) for x, y in corners))


def _row(vid: str, clock_s: int, pos: GeoPoint, speed: float, course: float) -> tuple[str, ...]:
    speed_tenths = int(round(speed / KNOT_MS * 10))
    course_tenths = int(round(course * 10)) % 3600
    return (vid, format_clock(clock_s), f"{pos.lat:.6f}", f"{pos.lon:.6f}",
            str(speed_tenths), str(course_tenths))


def truth_view(dataset: Dataset) -> TrackSetView:
    """True tracks from the VID column; track ids follow sorted VID order."""
    if not dataset.has_ground_truth:
        raise InvalidConfig("dataset has no VID column")
    groups: dict[str, list[int]] = {}
    for node in dataset.nodes:
        groups.setdefault(node.true_vid or "", []).append(node.index)
    return TrackSetView(tuple((i, tuple(groups[vid])) for i, vid in enumerate(sorted(groups), start=1)))


def resolve_region(cfg: ScenarioConfig) -> RegionConfig:
    home_radius = 2000.0
    if cfg.layout == "separated":
        anchor = GeoPoint(36.60, -76.60)
        return cfg.region or _separated_region(cfg, home_radius, anchor)
    return cfg.region or default_region()


def generate(cfg: ScenarioConfig) -> tuple[Dataset, TrackSetView]:
    """Simulate a scenario; returns the ground-truth dataset and its true tracks."""
    region = resolve_region(cfg)
    home_radius = 2000.0
    seq = np.random.SeedSequence(cfg.seed)
    plan_seq, gap_seq, *vessel_seqs = seq.spawn(2 + cfg.vessel_count)
    plans = _plans(cfg, region, np.random.default_rng(plan_seq), home_radius)
    if cfg.layout == "separated":
        # homes were laid out in plane coordinates relative to the region origin
        minx, miny, _, _ = region.boundary_polygon.bounds
        pad = home_radius + 5000.0
        for p in plans:
            p.home = (p.home[0] + minx + pad, p.home[1] + miny + pad)

    rows: list[tuple[float, int, tuple[str, ...]]] = []
    for i, plan in enumerate(plans):
        reports = _simulate(plan, cfg, region, np.random.default_rng(vessel_seqs[i]), home_radius)
        for t, pos, speed, course in reports:
            rows.append((t, i, _row(plan.vid, cfg.start_clock_s + t, pos, speed, course)))
    if not rows:
        raise InvalidConfig("scenario produced no reports")
    rows.sort(key=lambda r: (r[0], r[1]))
    dataset = dataset_from_rows([r[2] for r in rows], expect_vid=True, header=HEADER_WITH_VID)
    truth = truth_view(dataset)
    if cfg.gap_spec.mode != "none":
        dataset, truth = inject_gaps(dataset, truth, cfg.gap_spec, seed=gap_seq)
    return dataset, truth


# --------------------------------------------------------------------------
# gaps


def _gap_windows(dataset: Dataset, truth: TrackSetView, spec: GapSpec,
                 rng: np.random.Generator) -> dict[int, list[tuple[float, float]]]:
    """Per true-track list of [start, end) windows."""
    if spec.mode == "global":
        return {tid: [(s, s + ln) for s, ln in spec.windows] for tid, _ in truth.tracks}
    if spec.mode == "per_track":
        times = {n.index: n.t for n in dataset.nodes}
        n_pick = int(round(spec.fraction * len(truth.tracks)))
        picked = sorted(int(i) for i in rng.permutation(len(truth.tracks))[:n_pick])
        out: dict[int, list[tuple[float, float]]] = {}
        for pos in picked:
            tid, nodes = truth.tracks[pos]
            length = float(rng.uniform(*spec.length_range))
            first, last = times[nodes[0]], times[nodes[-1]]
            lo, hi = first + length / 2, last - 1.5 * length
            start = float(rng.uniform(lo, hi)) if hi > lo else first + (last - first) / 3
            out[tid] = [(start, start + length)]
        return out
    return {}


def inject_gaps(dataset: Dataset, truth: TrackSetView, spec: GapSpec,
                seed: int | np.random.SeedSequence = 0) -> tuple[Dataset, TrackSetView]:
    """Delete the reports that fall in the gap windows.

    A track that would lose its final report keeps that one report, so no
    track terminates inside a gap. Surviving nodes keep every field except
    their positional ``index``, which is renumbered densely.
    """
    if spec.mode == "none":
        return dataset, truth
    windows = _gap_windows(dataset, truth, spec, np.random.default_rng(seed))
    times = {n.index: n.t for n in dataset.nodes}
    drop: set[int] = set()
    vid_of = {n.index: n.true_vid for n in dataset.nodes}
    for tid, nodes in truth.tracks:
        spans = windows.get(tid, [])
        if not spans:
            continue
        removed = [idx for idx in nodes if any(s <= times[idx] < e for s, e in spans)]
        if len(removed) == len(nodes):
            raise GapSwallowsTrack(vid_of[nodes[0]] or str(tid))
        if removed and removed[-1] == nodes[-1]:
            removed.pop()
        drop.update(removed)

    keep = [i for i in range(len(dataset.rows)) if i not in drop]
    renumber = {old: new for new, old in enumerate(keep)}
    nodes = tuple(
        dataclasses.replace(n, index=renumber[n.index]) for n in dataset.nodes if n.index not in drop
    )
    new_ds = Dataset(nodes=nodes, has_ground_truth=dataset.has_ground_truth,
                     header=dataset.header, rows=tuple(dataset.rows[i] for i in keep),
                     start_clock_s=dataset.start_clock_s)
    new_truth = TrackSetView(tuple(
        (tid, tuple(renumber[i] for i in nodes_ if i not in drop)) for tid, nodes_ in truth.tracks
    ))
    return new_ds, new_truth


# --------------------------------------------------------------------------
# configuration files

_SCALARS: Mapping[str, type] = {
    "vessel_count": int, "duration_s": float, "sample_period_s": float, "jitter": float,
    "seed": int, "layout": str, "min_separation_m": float, "max_turn_rate": float,
    "max_accel": float, "entry_fraction": float, "exit_fraction": float,
    "parking_fraction": float, "dwell_probability": float,
}
SCENARIO_KEYS = set(_SCALARS) | {
    "straight", "speed_min", "speed_max", "start_clock", "region_file",
    "gap_mode", "gap_windows", "gap_fraction", "gap_length_min", "gap_length_max",
}


def _windows(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in text.replace(";", ",").split(","):
        part = part.strip()
        if part:
            start, _, length = part.partition(":")
            out.append((float(start), float(length)))
    return tuple(out)


def scenario_from_mapping(values: Mapping[str, str], base_dir: Path | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from ``key=value`` strings. Raises InvalidConfig."""
    unknown = sorted(set(values) - SCENARIO_KEYS)
    if unknown:
        raise InvalidConfig(f"unknown scenario keys: {', '.join(unknown)}")
    if "vessel_count" not in values:
        raise InvalidConfig("vessel_count is required")
    kwargs: dict = {}
    try:
        for key, kind in _SCALARS.items():
            if key in values:
                kwargs[key] = kind(values[key].strip())
        if "straight" in values:
            kwargs["straight"] = values["straight"].strip().lower() in ("1", "true", "yes", "on")
        if "speed_min" in values or "speed_max" in values:
            lo, hi = ScenarioConfig.__dataclass_fields__["speed_range"].default
            kwargs["speed_range"] = (float(values.get("speed_min", lo)), float(values.get("speed_max", hi)))
        if "start_clock" in values:
            kwargs["start_clock_s"] = seconds_of_day(values["start_clock"])
        gap_kwargs: dict = {"mode": values.get("gap_mode", "none").strip().lower()}
        if "gap_windows" in values:
            gap_kwargs["windows"] = _windows(values["gap_windows"])
        if "gap_fraction" in values:
            gap_kwargs["fraction"] = float(values["gap_fraction"])
        if "gap_length_min" in values or "gap_length_max" in values:
            lo, hi = GapSpec().length_range
            gap_kwargs["length_range"] = (float(values.get("gap_length_min", lo)),
                                          float(values.get("gap_length_max", hi)))
    except (ValueError, MalformedRow) as exc:
        raise InvalidConfig(f"bad scenario value: {exc}") from None
    kwargs["gap_spec"] = GapSpec(**gap_kwargs)
    if "region_file" in values:
        path = Path(values["region_file"].strip())
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        kwargs["region"] = load_region(path)
    return ScenarioConfig(**kwargs)


def load_scenario(path: str | Path) -> ScenarioConfig:
    return scenario_from_mapping(read_key_values(path), base_dir=Path(path).parent)
