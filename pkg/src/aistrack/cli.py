"""Command-line entry point.

Exit codes: 0 success, 1 internal error, 2 input error, 3 configuration error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .ais_data import (
    HEADER,
    Dataset,
    dataset_to_text,
    load_dataset,
    read_track_ids,
    write_associated,
)
from .associator import Thresholds, run_online
from .errors import ConfigError, InputError, MalformedRow
from .merger import format_region, load_region, posthoc_merge, region_from_dataset
from .metrics import EvaluationReport, TrackSetView, evaluate
from .scenario import generate, load_scenario, resolve_region, truth_view

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2, 3


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(path: Path, fields: dict, outputs: Sequence[Path]) -> None:
    manifest = {
        "tool": "aistrack",
        "version": __version__,
        **fields,
        "outputs": {p.name: _sha256(p) for p in outputs},
        "created": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _err(msg: str) -> None:
    print(f"aistrack: {msg}", file=sys.stderr)


# --------------------------------------------------------------------------


def cmd_associate(args: argparse.Namespace) -> int:
    try:
        th = Thresholds.from_file(args.config) if args.config else Thresholds()
        region_cfg = load_region(args.region) if args.region else None
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    try:
        dataset = load_dataset(args.input, expect_vid=args.with_vid)
    except (InputError, OSError) as exc:
        _err(f"input error: {exc}")
        return EXIT_INPUT

    result = run_online(dataset, th)
    if not args.no_merge:
        region_cfg = region_cfg or region_from_dataset(dataset)
        result = posthoc_merge(result, region_cfg, th)

    output = Path(args.output)
    with open(output, "w", newline="", encoding="utf-8") as fh:
        write_associated(dataset, result.assignment, fh)
    manifest = Path(args.manifest) if args.manifest else output.with_suffix(output.suffix + ".manifest.json")
    _write_manifest(manifest, {
        "command": "associate",
        "input": str(args.input),
        "config": str(args.config) if args.config else None,
        "region": str(args.region) if args.region else None,
        "output": str(output),
        "with_vid": bool(args.with_vid),
        "merge": not args.no_merge,
        "thresholds": th.as_dict(),
        "track_count": len(result.tracks),
    }, [output])
    print(f"{len(dataset)} reports -> {len(result.tracks)} tracks, written to {output}")
    return EXIT_OK


def _assoc_labels(truth: Dataset, path: str) -> dict[int, int]:
    header, rows, ids = read_track_ids(path)
    if len(rows) != len(truth.rows):
        raise InputError(f"row count mismatch: truth has {len(truth.rows)}, associated has {len(rows)}")
    upper = [h.upper() for h in header]
    cols = [upper.index(name) if name in upper else None for name in HEADER[:3]]
    truth_off = 1 if truth.has_ground_truth else 0
    for i, (t_row, a_row) in enumerate(zip(truth.rows, rows)):
        for k, col in enumerate(cols):
            if col is not None and t_row[truth_off + k].strip() != a_row[col].strip():
                raise MalformedRow(i + 2, f"{HEADER[k]} differs between truth and associated files")
    return dict(enumerate(ids))


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        truth_ds = load_dataset(args.truth, expect_vid=True)
        labels = _assoc_labels(truth_ds, args.input)
        order = [n.index for n in truth_ds.nodes]
        truth = truth_view(truth_ds)
        assoc = TrackSetView.from_labels(labels, order)
        vids = sorted({n.true_vid or "" for n in truth_ds.nodes})
        report = evaluate(truth, assoc, [n.pos for n in truth_ds.by_index()],
                          true_labels=dict(enumerate(vids, start=1)))
    except (InputError, OSError) as exc:
        _err(f"input error: {exc}")
        return EXIT_INPUT

    text = report.to_text()
    print(text, end="")
    if args.report:
        path = Path(args.report)
        path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        path.with_suffix(".txt").write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = load_scenario(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        dataset, _ = generate(cfg)
    except ConfigError as exc:
        _err(f"config error: {type(exc).__name__}: {exc}")
        return EXIT_CONFIG

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth_path = out_dir / "truth.csv"
    test_path = out_dir / "test.csv"
    region_path = out_dir / "region.txt"
    truth_path.write_text(dataset_to_text(dataset, include_vid=True), encoding="utf-8")
    test_path.write_text(dataset_to_text(dataset, include_vid=False), encoding="utf-8")
    region_path.write_text(format_region(resolve_region(cfg)), encoding="utf-8")
    _write_manifest(out_dir / "manifest.json", {
        "command": "simulate",
        "config": str(args.config),
        "seed": cfg.seed,
        "vessel_count": cfg.vessel_count,
        "report_count": len(dataset),
    }, [truth_path, test_path, region_path])
    print(f"{len(dataset)} reports from {cfg.vessel_count} vessels written to {out_dir}")
    return EXIT_OK


def _histogram(scores: Sequence[float], bins: int = 10, width: int = 40) -> list[str]:
    counts = [0] * bins
    for s in scores:
        counts[min(bins - 1, int(s * bins))] += 1
    peak = max(counts) or 1
    lines = []
    for b, c in enumerate(counts):
        lo, hi = b / bins, (b + 1) / bins
        bar = "#" * round(c / peak * width)
        lines.append(f"  [{lo:.1f}, {hi:.1f}{']' if b == bins - 1 else ')'} {c:4d} {bar}")
    return lines


def render_report(report: EvaluationReport) -> str:
    e = report.errors

    def mark(ok: bool) -> str:
        return " *" if ok else ""

    lines = [
        "Track association summary",
        f"  true tracks        {report.true_track_count:8d}",
        f"  associated tracks  {report.associated_track_count:8d}"
        f"{mark(report.true_track_count == report.associated_track_count)}",
        "",
        "  error counts",
    ]
    for name in ("missed", "extra", "merged", "broken", "swapped"):
        value = getattr(e, name)
        lines.append(f"    {name:<16} {value:8d}{mark(value == 0)}")
    lines += [
        "",
        f"  continuity         {report.continuity:8.3f}{mark(report.continuity >= 1.0)}",
        f"  completeness mean  {report.completeness_mean:8.3f}{mark(report.completeness_mean >= 1.0)}",
        f"  completeness median{report.completeness_median:8.3f}{mark(report.completeness_median >= 1.0)}",
        "",
        "  (* = perfect)",
        "",
        "Per-track completeness",
    ]
    lines += _histogram(list(report.completeness_per_true_track.values()))
    return "\n".join(lines) + "\n"


def _plot(truth_csv: str, assoc_csv: str, out: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    truth_ds = load_dataset(truth_csv, expect_vid=True)
    labels = _assoc_labels(truth_ds, assoc_csv)
    nodes = truth_ds.by_index()
    fig, ax = plt.subplots(figsize=(8, 7))
    ax.scatter([n.pos.lon for n in nodes], [n.pos.lat for n in nodes], s=9, c="black", label="true")
    groups: dict[int, list] = {}
    for n in nodes:
        groups.setdefault(labels[n.index], []).append(n)
    cmap = plt.get_cmap("tab20")
    for k, (tid, members) in enumerate(sorted(groups.items())):
        ax.scatter([n.pos.lon for n in members], [n.pos.lat for n in members], s=1.5,
                   color=cmap(k % 20))
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title("true (black) vs associated (colour) tracks")
    fig.savefig(out, format="svg")
    plt.close(fig)


def cmd_report(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.report).read_text(encoding="utf-8"))
        report = EvaluationReport.from_dict(data)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        _err(f"cannot read report {args.report}: {exc}")
        return EXIT_INPUT
    print(render_report(report), end="")
    if args.plot:
        if not (args.truth and args.input):
            _err("--plot needs --truth and --input")
            return EXIT_CONFIG
        try:
            _plot(args.truth, args.input, args.plot)
        except (InputError, OSError) as exc:
            _err(f"input error: {exc}")
            return EXIT_INPUT
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aistrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("associate", help="assign TRACK_IDs to an AIS CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--config", help="thresholds file (key=value, all seven keys)")
    p.add_argument("--region", help="region geometry file; defaults to the data bounding box")
    p.add_argument("--manifest", help="manifest path (default: OUTPUT.manifest.json)")
    p.add_argument("--no-merge", action="store_true", help="skip the post-hoc merge stage")
    p.add_argument("--with-vid", action="store_true", help="input has a leading VID column to ignore")
    p.set_defaults(func=cmd_associate)

    p = sub.add_parser("evaluate", help="score an associated CSV against ground truth")
    p.add_argument("--truth", required=True, help="CSV with the VID column")
    p.add_argument("--input", required=True, help="associated CSV with TRACK_ID")
    p.add_argument("--report", help="write the JSON report here (and a .txt beside it)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    p.add_argument("--config", required=True, help="scenario file (key=value)")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="render a JSON evaluation report")
    p.add_argument("--report", required=True)
    p.add_argument("--plot", help="write an SVG of true vs associated tracks")
    p.add_argument("--truth", help="truth CSV for --plot")
    p.add_argument("--input", help="associated CSV for --plot")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001
        _err(f"internal error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
