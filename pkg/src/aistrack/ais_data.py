"""Reading and writing AIS report files.

Input files are UTF-8 CSV with a header row and the columns
``[VID,] TIME, LAT, LON, SPEED, COURSE`` in that order. TIME is ``hh:mm:ss``,
SPEED is tenths of knots and COURSE tenths of degrees, both integral.
Training files carry the VID column, test files do not.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, TextIO

from .errors import EmptyDataset, MalformedRow, MissingAssignment, OutOfRange
from .geodesy import GeoPoint

KNOT_MS = 0.514444
ROLLOVER_S = 20 * 3600
DAY_S = 24 * 3600

HEADER = ("TIME", "LAT", "LON", "SPEED", "COURSE")
HEADER_WITH_VID = ("VID",) + HEADER
TRACK_COLUMN = "TRACK_ID"


@dataclass(frozen=True)
class RawRecord:
    vid: str | None
    time_text: str
    lat_deg: float
    lon_deg: float
    speed_tenths_knots: int
    course_tenths_degrees: int
    fields: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class Node:
    index: int
    t: float
    pos: GeoPoint
    speed: float
    course: float
    true_vid: str | None = None


@dataclass(frozen=True)
class Dataset:
    """Nodes in chronological order plus the original rows in input order.

    ``rows[i]`` holds the text fields of the node with ``index == i``, which
    is what makes writing the file back out lossless.
    """

    nodes: tuple[Node, ...]
    has_ground_truth: bool
    header: tuple[str, ...] = HEADER
    rows: tuple[tuple[str, ...], ...] = field(default=(), repr=False)
    start_clock_s: int = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def by_index(self) -> list[Node]:
        out: list[Node | None] = [None] * len(self.nodes)
        for node in self.nodes:
            out[node.index] = node
        return out  # type: ignore[return-value]


def _parse_int_tenths(text: str, name: str, line_no: int) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(line_no, f"{name} is not a number: {text!r}") from None
    if not value.is_integer():
        raise MalformedRow(line_no, f"{name} must be integral tenths: {text!r}")
    return int(value)


def seconds_of_day(time_text: str, line_no: int = 0) -> int:
    parts = time_text.strip().split(":")
    if len(parts) != 3:
        raise MalformedRow(line_no, f"time must be hh:mm:ss: {time_text!r}")
    try:
        hh, mm, ss = (int(p) for p in parts)
    except ValueError:
        raise MalformedRow(line_no, f"time must be hh:mm:ss: {time_text!r}") from None
    if not (0 <= hh < 24 and 0 <= mm < 60 and 0 <= ss < 60):
        raise MalformedRow(line_no, f"time out of range: {time_text!r}")
    return hh * 3600 + mm * 60 + ss


def format_clock(seconds: int) -> str:
    seconds %= DAY_S
    return f"{seconds // 3600:02d}:{seconds // 60 % 60:02d}:{seconds % 60:02d}"


def parse_fields(fields: list[str] | tuple[str, ...], line_no: int, expect_vid: bool) -> RawRecord:
    expected = 6 if expect_vid else 5
    if len(fields) != expected:
        raise MalformedRow(line_no, f"expected {expected} columns, got {len(fields)}")
    vid = fields[0].strip() if expect_vid else None
    rest = fields[1:] if expect_vid else fields
    time_text = rest[0].strip()
    seconds_of_day(time_text, line_no)
    try:
        lat = float(rest[1])
        lon = float(rest[2])
    except ValueError:
        raise MalformedRow(line_no, f"unparsable coordinate in {list(rest[1:3])!r}") from None
    speed = _parse_int_tenths(rest[3], "SPEED", line_no)
    course = _parse_int_tenths(rest[4], "COURSE", line_no)
    return RawRecord(vid, time_text, lat, lon, speed, course, tuple(fields))


def parse_record(line: str, line_no: int, expect_vid: bool) -> RawRecord:
    """Parse one CSV row. Raises MalformedRow naming ``line_no`` on any defect."""
    rows = list(csv.reader([line]))
    return parse_fields(rows[0] if rows else [], line_no, expect_vid)


def normalize(raw: RawRecord, t0: float, index: int = 0, line_no: int = 0,
              rollover: bool = False) -> Node:
    """Convert a raw record to SI units relative to the dataset start ``t0``."""
    if abs(raw.lat_deg) > 90 or abs(raw.lon_deg) > 180:
        raise OutOfRange(line_no, f"position out of range: ({raw.lat_deg}, {raw.lon_deg})")
    if raw.speed_tenths_knots < 0:
        raise OutOfRange(line_no, f"negative speed: {raw.speed_tenths_knots}")
    secs = seconds_of_day(raw.time_text, line_no) + (DAY_S if rollover else 0)
    return Node(
        index=index,
        t=float(secs - t0),
        pos=GeoPoint(raw.lat_deg, raw.lon_deg),
        speed=raw.speed_tenths_knots / 10.0 * KNOT_MS,
        course=(raw.course_tenths_degrees / 10.0) % 360.0,
        true_vid=raw.vid,
    )


def dataset_from_rows(rows: Iterable[list[str] | tuple[str, ...]], expect_vid: bool,
                      header: tuple[str, ...] | None = None,
                      first_line_no: int = 2) -> Dataset:
    """Build a Dataset from already split CSV rows (header excluded)."""
    raws: list[RawRecord] = []
    for offset, fields in enumerate(rows):
        raws.append(parse_fields(fields, first_line_no + offset, expect_vid))
    if not raws:
        raise EmptyDataset("no data rows")

    # midnight rollover: a row more than 20 h earlier than anything before it
    secs: list[int] = []
    rolled: list[bool] = []
    running_max = None
    for raw in raws:
        s = seconds_of_day(raw.time_text)
        roll = running_max is not None and s < running_max - ROLLOVER_S
        s_adj = s + DAY_S if roll else s
        secs.append(s_adj)
        rolled.append(roll)
        running_max = s_adj if running_max is None else max(running_max, s_adj)
    t0 = min(secs)

    nodes = [
        normalize(raw, t0, index=i, line_no=first_line_no + i, rollover=rolled[i])
        for i, raw in enumerate(raws)
    ]
    nodes.sort(key=lambda n: (n.t, n.index))
    return Dataset(
        nodes=tuple(nodes),
        has_ground_truth=expect_vid,
        header=tuple(header) if header else (HEADER_WITH_VID if expect_vid else HEADER),
        rows=tuple(raw.fields for raw in raws),
        start_clock_s=t0,
    )


def load_dataset(source: str | Path | TextIO | Iterable[str], expect_vid: bool) -> Dataset:
    """Read an AIS CSV (path, open file, or iterable of lines) into a Dataset."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_dataset(fh, expect_vid)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataset("file is empty") from None
    rows = [r for r in reader if r]
    return dataset_from_rows(rows, expect_vid, header=tuple(h.strip() for h in header))


def relabel_by_first_appearance(assignment: Mapping[int, int], order: Iterable[int]) -> dict[int, int]:
    """Renumber track ids 1, 2, ... in the order they are first seen along ``order``."""
    mapping: dict[int, int] = {}
    out: dict[int, int] = {}
    for idx in order:
        if idx not in assignment:
            raise MissingAssignment(idx)
        tid = assignment[idx]
        if tid not in mapping:
            mapping[tid] = len(mapping) + 1
        out[idx] = mapping[tid]
    return out


def write_associated(dataset: Dataset, assignment: Mapping[int, int], sink: TextIO) -> int:
    """Write the input rows in input order with a trailing TRACK_ID column.

    Returns the number of data rows written.
    """
    labels = relabel_by_first_appearance(assignment, range(len(dataset.rows)))
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(list(dataset.header) + [TRACK_COLUMN])
    for idx, fields in enumerate(dataset.rows):
        writer.writerow(list(fields) + [labels[idx]])
    return len(dataset.rows)


def write_dataset(dataset: Dataset, sink: TextIO, include_vid: bool = True) -> int:
    """Write a dataset back out, optionally dropping the VID column."""
    writer = csv.writer(sink, lineterminator="\n")
    strip = dataset.has_ground_truth and not include_vid
    header = dataset.header[1:] if strip else dataset.header
    writer.writerow(header)
    for fields in dataset.rows:
        writer.writerow(fields[1:] if strip else fields)
    return len(dataset.rows)


def dataset_to_text(dataset: Dataset, include_vid: bool = True) -> str:
    buf = io.StringIO()
    write_dataset(dataset, buf, include_vid=include_vid)
    return buf.getvalue()


def read_track_ids(source: str | Path | TextIO) -> tuple[tuple[str, ...], list[tuple[str, ...]], list[int]]:
    """Read an associated CSV: returns (header, data rows, TRACK_ID per row)."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_track_ids(fh)
    reader = csv.reader(source)
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise EmptyDataset("file is empty") from None
    upper = [h.upper() for h in header]
    if TRACK_COLUMN not in upper:
        raise MalformedRow(1, f"missing {TRACK_COLUMN} column")
    col = upper.index(TRACK_COLUMN)
    rows: list[tuple[str, ...]] = []
    ids: list[int] = []
    for line_no, fields in enumerate(reader, start=2):
        if not fields:
            continue
        if len(fields) != len(header):
            raise MalformedRow(line_no, f"expected {len(header)} columns, got {len(fields)}")
        try:
            ids.append(int(fields[col]))
        except ValueError:
            raise MalformedRow(line_no, f"bad {TRACK_COLUMN}: {fields[col]!r}") from None
        rows.append(tuple(fields))
    return header, rows, ids
