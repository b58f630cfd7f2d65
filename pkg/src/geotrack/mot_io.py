"""MOTChallenge text files: detections, ground truth and tracker results.

Rows are ``frame,id,x,y,w,h,score_or_flag,...`` with ``(x, y)`` the top-left
corner. Boxes are converted to center form on read and back on write.
"""
from __future__ import annotations

import logging
import os
import tempfile
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .association import Detection
from .geometry import Box

log = logging.getLogger(__name__)


class MotParseError(ValueError):
    def __init__(self, path, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True, slots=True)
class GtRecord:
    id: int
    box: Box
    visibility: float


@dataclass
class ParseStats:
    rows: int = 0
    malformed: int = 0
    degenerate: int = 0


def _rows(path, strict: bool, min_fields: int, stats: ParseStats):
    """Yield ``(lineno, fields)`` for well-formed numeric rows."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open("r", encoding="utf-8", newline=None) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                if len(parts) < min_fields:
                    raise ValueError(f"expected at least {min_fields} fields, got {len(parts)}")
                values = [float(p) for p in parts]
                frame = values[0]
                if frame != int(frame) or frame < 1:
                    raise ValueError(f"bad frame index {parts[0]!r}")
            except ValueError as exc:
                if strict:
                    raise MotParseError(path, lineno, str(exc)) from None
                stats.malformed += 1
                continue
            if not (values[4] > 0 and values[5] > 0):
                stats.degenerate += 1
                continue
            stats.rows += 1
            yield lineno, values


def _report(path, stats: ParseStats) -> None:
    if stats.malformed or stats.degenerate:
        log.warning(
            "%s: skipped %d malformed and %d non-positive-size rows",
            path, stats.malformed, stats.degenerate,
        )


def read_detections(path, *, strict: bool = False, stats: ParseStats | None = None) -> dict[int, list[Detection]]:
    """Detections grouped by frame, frames in ascending order.

    Scores outside ``[0, 1]`` are clipped into range.
    """
    stats = stats if stats is not None else ParseStats()
    groups: dict[int, list[Detection]] = defaultdict(list)
    for _, f in _rows(path, strict, 7, stats):
        frame = int(f[0])
        score = min(max(f[6], 0.0), 1.0)
        groups[frame].append(Detection(Box.from_tlwh(f[2], f[3], f[4], f[5]), score, frame))
    _report(path, stats)
    return dict(sorted(groups.items()))


def read_ground_truth(
    path, *, pedestrians_only: bool = False, strict: bool = False, stats: ParseStats | None = None
) -> dict[int, list[GtRecord]]:
    """Ground truth grouped by frame; rows whose flag column is 0 are dropped."""
    stats = stats if stats is not None else ParseStats()
    groups: dict[int, list[GtRecord]] = defaultdict(list)
    for _, f in _rows(path, strict, 6, stats):
        flag = f[6] if len(f) > 6 else 1.0
        if flag == 0:
            continue
        if pedestrians_only and len(f) > 7 and int(f[7]) != 1:
            continue
        vis = f[8] if len(f) > 8 else 1.0
        groups[int(f[0])].append(GtRecord(int(f[1]), Box.from_tlwh(f[2], f[3], f[4], f[5]), vis))
    _report(path, stats)
    return dict(sorted(groups.items()))


def read_results(path, *, strict: bool = False) -> dict[int, list[tuple[int, Box, float]]]:
    """Tracker output as ``frame -> [(track_id, box, score)]``."""
    stats = ParseStats()
    groups: dict[int, list[tuple[int, Box, float]]] = defaultdict(list)
    for _, f in _rows(path, strict, 6, stats):
        score = f[6] if len(f) > 6 else 1.0
        groups[int(f[0])].append((int(f[1]), Box.from_tlwh(f[2], f[3], f[4], f[5]), score))
    _report(path, stats)
    return dict(sorted(groups.items()))


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def format_result_line(frame: int, track_id: int, box: Box, score: float) -> str:
    x, y, w, h = box.to_tlwh()
    return f"{frame},{track_id},{_fmt(x)},{_fmt(y)},{_fmt(w)},{_fmt(h)},{_fmt(score)},-1,-1,-1\n"


def _atomic_write(path, lines: Iterable[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(lines)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_results(path, results: Sequence) -> None:
    """Write ``FrameResult`` objects, one line per record, sorted by (frame, id)."""
    rows = []
    for res in results:
        for rec in res.records:
            rows.append((res.frame, rec.track_id, rec.box, rec.score))
    rows.sort(key=lambda r: (r[0], r[1]))
    _atomic_write(path, (format_result_line(*r) for r in rows))


def write_detections(path, groups: dict[int, Sequence[Detection]]) -> None:
    lines = []
    for frame in sorted(groups):
        for d in groups[frame]:
            x, y, w, h = d.box.to_tlwh()
            lines.append(f"{frame},-1,{_fmt(x)},{_fmt(y)},{_fmt(w)},{_fmt(h)},{d.score:.4f},-1,-1,-1\n")
    _atomic_write(path, lines)


def write_ground_truth(path, groups: dict[int, Sequence[GtRecord]]) -> None:
    lines = []
    for frame in sorted(groups):
        for g in sorted(groups[frame], key=lambda r: r.id):
            x, y, w, h = g.box.to_tlwh()
            lines.append(f"{frame},{g.id},{_fmt(x)},{_fmt(y)},{_fmt(w)},{_fmt(h)},1,1,{g.visibility:.4f}\n")
    _atomic_write(path, lines)
