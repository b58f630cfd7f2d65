"""``geotrack`` command line: ``track``, ``eval`` and ``synth``.

Exit status is 0 on success, 2 for usage or input problems (missing files,
bad config, unparseable input) and 1 for anything unexpected.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from . import __version__
from ._kernels import warm_up
from .config import ConfigError, TrackerConfig, load_config, parse_assignments
from .metrics import SequenceMetrics, UndefinedMetricError, aggregate, evaluate
from .mot_io import MotParseError, _atomic_write, read_detections, read_ground_truth, read_results, write_results
from .synth import SpecError, parse_spec, standard_suite, write_scenario
from .tracker import SequenceError, run_sequence

log = logging.getLogger("geotrack")

MANIFEST_NAME = "manifest.json"
SUMMARY_NAME = "eval_summary.txt"

# ablation switches and the config fields they turn off
ABLATION_FLAGS = {
    "no_camera_motion_removal": "camera_motion_removal",
    "no_occlusion_handling": "occlusion_handling",
}


class UsageError(Exception):
    """Bad invocation or unusable input; reported with exit status 2."""


# -- sequence discovery -----------------------------------------------------

def _sequence_files(path: Path, subdir: str, filename: str) -> dict[str, Path]:
    """Map sequence names to files under ``path``.

    Accepts a single file, a MOTChallenge-style sequence directory
    (``<seq>/<subdir>/<filename>``), a directory of such sequence directories,
    or a flat directory of ``<seq>.txt`` files.
    """
    if not path.exists():
        raise UsageError(f"no such file or directory: {path}")
    if path.is_file():
        parts = path.resolve().parts
        if len(parts) >= 3 and parts[-2] == subdir:
            name = parts[-3]
        elif path.stem == subdir:
            # a bare det.txt / gt.txt is named after its directory
            name = parts[-2]
        else:
            name = path.stem
        return {name: path}
    own = path / subdir / filename
    if own.is_file():
        return {path.resolve().name: own}
    found = {}
    for child in sorted(path.iterdir()):
        nested = child / subdir / filename
        if child.is_dir() and nested.is_file():
            found[child.name] = nested
        elif child.is_file() and child.suffix == ".txt":
            found[child.stem] = child
    return found


# -- track ------------------------------------------------------------------

def _track_one(name: str, det_path: str, out_path: str, config: TrackerConfig) -> dict:
    dets = read_detections(det_path)
    warm_up()
    t0 = time.perf_counter()
    results = run_sequence(dets, config)
    elapsed = time.perf_counter() - t0
    write_results(out_path, results)
    n = len(results)
    return {"sequence": name, "frames": n, "seconds": elapsed, "fps": n / elapsed if elapsed > 0 else None}


def _build_config(args) -> tuple[TrackerConfig, dict[str, str]]:
    overrides = parse_assignments(args.set or [])
    for flag, field_name in ABLATION_FLAGS.items():
        if getattr(args, flag):
            overrides[field_name] = "false"
    if args.config is not None and not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    return load_config(args.config, overrides), overrides


def _from_manifest(path: Path) -> tuple[TrackerConfig, dict[str, Path], dict]:
    if not path.is_file():
        raise UsageError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
        snapshot = {k: str(v) for k, v in manifest["config"].items()}
        inputs = {name: Path(p) for name, p in manifest["inputs"].items()}
    except (json.JSONDecodeError, KeyError, AttributeError) as exc:
        raise UsageError(f"{path}: not a run manifest ({exc})") from None
    return TrackerConfig().with_overrides(snapshot), inputs, manifest


def cmd_track(args) -> int:
    if args.from_manifest:
        if args.dets or args.config or args.set or any(getattr(args, f) for f in ABLATION_FLAGS):
            raise UsageError("--from-manifest cannot be combined with --dets, --config, --set or ablation flags")
        config, inputs, old = _from_manifest(Path(args.from_manifest))
        overrides = old.get("overrides", {})
        config_file = old.get("config_file")
    else:
        if not args.dets:
            raise UsageError("track needs --dets (or --from-manifest)")
        config, overrides = _build_config(args)
        config_file = str(args.config) if args.config else None
        inputs = _sequence_files(Path(args.dets), "det", "det.txt")
        if not inputs:
            raise UsageError(f"no detection files found under {args.dets}")
    for name, p in inputs.items():
        if not p.is_file():
            raise UsageError(f"detection file not found: {p}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {name: out_dir / f"{name}.txt" for name in inputs}
    jobs = [(name, str(inputs[name]), str(outputs[name]), config) for name in inputs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            timings = list(pool.map(_track_one, *zip(*jobs)))
    else:
        timings = [_track_one(*job) for job in jobs]

    for t in timings:
        fps = f"{t['fps']:.1f}" if t["fps"] is not None else "n/a"
        print(f"{t['sequence']}: {t['frames']} frames, {fps} frames/s")
    manifest = {
        "geotrack_version": __version__,
        "inputs": {name: str(inputs[name].resolve()) for name in inputs},
        "outputs": {name: str(outputs[name].resolve()) for name in outputs},
        "config_file": config_file,
        "overrides": overrides,
        "timing": timings,
        "config": config.to_dict(),
    }
    _atomic_write(out_dir / MANIFEST_NAME, [json.dumps(manifest, indent=2, sort_keys=True) + "\n"])
    return 0


# -- eval -------------------------------------------------------------------

# HOTA is not computed; its column stays so the layout matches the usual tables
_COLUMNS = ("MOTA", "IDF1", "HOTA", "MOTP", "MT", "ML", "FP", "FN", "IDS", "FM")


def _row(name: str, m: SequenceMetrics, width: int) -> str:
    cells = [f"{m.mota:.3f}", f"{m.idf1:.3f}", "n/a", f"{m.motp:.3f}",
             str(m.mt), str(m.ml), str(m.fp), str(m.fn), str(m.ids), str(m.fm)]
    return f"{name:<{width}}" + "".join(f"{c:>8}" for c in cells)


def format_table(per_sequence: dict[str, SequenceMetrics], overall: SequenceMetrics) -> str:
    width = max([len(n) for n in per_sequence] + [len("OVERALL"), len("Sequence")]) + 2
    lines = [f"{'Sequence':<{width}}" + "".join(f"{c:>8}" for c in _COLUMNS)]
    lines += [_row(name, m, width) for name, m in per_sequence.items()]
    lines.append(_row("OVERALL", overall, width))
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    gt_files = _sequence_files(Path(args.gt), "gt", "gt.txt")
    if not gt_files:
        raise UsageError(f"no ground-truth files found under {args.gt}")
    res_dir = Path(args.results)
    if not res_dir.is_dir():
        raise UsageError(f"results directory not found: {res_dir}")
    res_files = {p.stem: p for p in sorted(res_dir.glob("*.txt")) if p.name != SUMMARY_NAME}

    extra = sorted(set(res_files) - set(gt_files))
    missing = sorted(set(gt_files) - set(res_files))
    # an empty results directory is scored as a tracker that reported nothing
    if extra or (missing and res_files):
        msg = ["result and ground-truth sequence sets differ:"]
        if missing:
            msg.append(f"  no results for: {', '.join(missing)}")
        if extra:
            msg.append(f"  no ground truth for: {', '.join(extra)}")
        raise UsageError("\n".join(msg))

    per_seq = {}
    for name, gt_path in gt_files.items():
        gt = read_ground_truth(gt_path, pedestrians_only=args.pedestrians_only)
        hyp = {}
        if name in res_files:
            hyp = {f: [(tid, box) for tid, box, _ in rows] for f, rows in read_results(res_files[name]).items()}
        per_seq[name] = evaluate({f: [(g.id, g.box) for g in rows] for f, rows in gt.items()}, hyp, args.iou)
    overall = aggregate(list(per_seq.values()))

    sys.stdout.write(format_table(per_seq, overall))
    summary_path = Path(args.summary) if args.summary else res_dir / SUMMARY_NAME
    _atomic_write(summary_path, format_summary(per_seq, overall, args.iou))
    return 0


def format_summary(per_sequence: dict[str, SequenceMetrics], overall: SequenceMetrics, iou: float) -> list[str]:
    """``<sequence>.<field>=<value>`` lines, the aggregate under ``OVERALL``."""
    lines = [f"iou_threshold={iou!r}\n"]
    for name, m in [*per_sequence.items(), ("OVERALL", overall)]:
        lines += [f"{name}.{k}={v!r}\n" for k, v in m.summary().items()]
    return lines


# -- synth ------------------------------------------------------------------

def cmd_synth(args) -> int:
    if bool(args.suite) == bool(args.spec):
        raise UsageError("synth needs exactly one of --suite or --spec")
    if args.suite:
        specs = standard_suite()
    else:
        path = Path(args.spec)
        if not path.is_file():
            raise UsageError(f"spec file not found: {path}")
        try:
            specs = {path.stem: parse_spec(path.read_text(encoding="utf-8"))}
        except SpecError as exc:
            raise UsageError(f"{path}: {exc}") from None
    for name, spec in specs.items():
        root = write_scenario(args.out, name, spec)
        print(f"wrote {root}")
    return 0


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geotrack", description="Geometry-only multi-object tracker.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log parser warnings and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track detection files")
    p.add_argument("--dets", help="det file, sequence directory or directory of sequences")
    p.add_argument("--out", required=True, help="directory for <seq>.txt results and the run manifest")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override; repeatable, wins over --config")
    p.add_argument("--no-camera-motion-removal", action="store_true", help="skip the compensated second matching pass")
    p.add_argument("--no-occlusion-handling", action="store_true", help="prune unmatched tracks by age only")
    p.add_argument("--from-manifest", metavar="FILE", help="re-run the inputs and config recorded in a manifest")
    p.add_argument("--jobs", type=int, default=1, help="sequences tracked in parallel (default 1)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score result files against ground truth")
    p.add_argument("--gt", required=True, help="gt file, sequence directory or directory of sequences")
    p.add_argument("--results", required=True, help="directory of <seq>.txt result files")
    p.add_argument("--iou", type=float, default=0.5, help="match threshold (default 0.5)")
    p.add_argument("--pedestrians-only", action="store_true", help="keep only class-1 ground truth rows")
    p.add_argument("--summary", help=f"key=value summary path (default <results>/{SUMMARY_NAME})")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic scenarios")
    p.add_argument("--suite", choices=["standard"])
    p.add_argument("--spec", help="scenario spec file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, MotParseError, SequenceError, UndefinedMetricError,
            FileNotFoundError, SpecError) as exc:
        print(f"geotrack {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort report
        log.debug("internal error", exc_info=True)
        print(f"geotrack {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
