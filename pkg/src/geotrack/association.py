"""nIoU-based assignment and the two-stage detection-score cascade."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import ConfigError, TrackerConfig
from ._kernels import niou_kernel
from .geometry import Box, boxes_to_array


@dataclass(frozen=True, slots=True)
class Detection:
    box: Box
    score: float
    frame: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score must lie in [0, 1], got {self.score}")
        if self.frame < 1:
            raise ValueError(f"frame index must be >= 1, got {self.frame}")


@dataclass
class MatchResult:
    """Matched ``(track_id, det_index)`` pairs plus leftovers on each side."""

    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)

    def matched_track_ids(self) -> set[int]:
        return {t for t, _ in self.matches}

    def matched_detection_indices(self) -> set[int]:
        return {d for _, d in self.matches}


def _assign(sim: np.ndarray, min_similarity: float) -> tuple[np.ndarray, np.ndarray]:
    # gated and negative cells weigh 0, the same as leaving both sides unmatched;
    # a complete max-weight assignment on these weights, minus its zero-weight
    # pairs, is a maximum-weight partial matching
    usable = (sim >= min_similarity) & (sim >= 0.0)
    weight = np.where(usable, sim, 0.0)
    rows, cols = linear_sum_assignment(weight, maximize=True)
    keep = usable[rows, cols]
    return rows[keep], cols[keep]


def solve_assignment(similarity: np.ndarray, min_similarity: float) -> MatchResult:
    """Maximum-total-similarity one-to-one assignment with a similarity gate.

    Rows are tracks and columns detections; the returned ids are row and column
    indices. Pairs below ``min_similarity`` are never reported as matches. Leaving
    a row unmatched scores 0, so a pair with negative similarity is never chosen
    even when the gate admits it. Ties resolve by the solver's fixed scan order.
    """
    sim = np.asarray(similarity, dtype=float)
    if sim.ndim != 2 or sim.size == 0:
        n_rows = sim.shape[0] if sim.ndim == 2 else 0
        n_cols = sim.shape[1] if sim.ndim == 2 else 0
        return MatchResult([], list(range(n_rows)), list(range(n_cols)))
    rows, cols = _assign(sim, min_similarity)
    row_free = np.ones(sim.shape[0], dtype=bool)
    row_free[rows] = False
    col_free = np.ones(sim.shape[1], dtype=bool)
    col_free[cols] = False
    return MatchResult(
        list(zip(rows.tolist(), cols.tolist())),
        np.flatnonzero(row_free).tolist(),
        np.flatnonzero(col_free).tolist(),
    )


def split_by_score(
    dets: Sequence[Detection], high: float, low: float
) -> tuple[list[Detection], list[Detection], list[Detection]]:
    """Bucket detections into ``s > high``, ``low < s <= high`` and ``s <= low``."""
    if not low < high:
        raise ConfigError(f"low threshold {low} must be below high threshold {high}")
    hi, lo, dropped = [], [], []
    for d in dets:
        if d.score > high:
            hi.append(d)
        elif d.score > low:
            lo.append(d)
        else:
            dropped.append(d)
    return hi, lo, dropped


def _split_indices(dets: Sequence[Detection], config: TrackerConfig) -> tuple[np.ndarray, np.ndarray]:
    scores = np.fromiter((d.score for d in dets), dtype=float, count=len(dets))
    hi = scores > config.high_score_threshold
    lo = ~hi & (scores > config.low_score_threshold)
    return np.flatnonzero(hi), np.flatnonzero(lo)


_NONE = np.zeros(0, dtype=np.intp)


def _stage(
    det_boxes: np.ndarray,
    det_idx: np.ndarray,
    pred_boxes: np.ndarray,
    track_pos: np.ndarray,
    min_niou: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One assignment pass over index arrays into the caller's box arrays.

    Returns matched track positions, matched det indices, and the leftovers.
    """
    if len(det_idx) == 0 or len(track_pos) == 0:
        return _NONE, _NONE, track_pos, det_idx
    sim = niou_kernel(det_boxes[det_idx], pred_boxes[track_pos]).T
    rows, cols = _assign(sim, min_niou)
    t_free = np.ones(len(track_pos), dtype=bool)
    t_free[rows] = False
    d_free = np.ones(len(det_idx), dtype=bool)
    d_free[cols] = False
    return track_pos[rows], det_idx[cols], track_pos[t_free], det_idx[d_free]


def cascade_match_arrays(
    dets: Sequence[Detection],
    det_boxes: np.ndarray,
    pred_boxes: np.ndarray,
    config: TrackerConfig,
    split: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Cascade on pre-built arrays; returns (track position, det index) pairs and leftovers.

    ``split`` is a precomputed ``(high indices, low indices)`` pair, reused
    when the same detections are matched more than once.
    """
    hi_idx, lo_idx = split if split is not None else _split_indices(dets, config)
    all_tracks = np.arange(len(pred_boxes))
    t1, d1, t_left, d_left_hi = _stage(det_boxes, hi_idx, pred_boxes, all_tracks, config.stage1_min_niou)
    if config.low_score_stage:
        t2, d2, t_left, d_left_lo = _stage(det_boxes, lo_idx, pred_boxes, t_left, config.stage2_min_niou)
    else:
        t2, d2, d_left_lo = _NONE, _NONE, _NONE
    matches = list(zip(t1.tolist() + t2.tolist(), d1.tolist() + d2.tolist()))
    return matches, t_left.tolist(), d_left_hi.tolist() + d_left_lo.tolist()


def cascade_match(
    dets: Sequence[Detection],
    predicted: Sequence[tuple[int, Box]],
    config: TrackerConfig,
) -> MatchResult:
    """High-score detections against all tracks, then low-score ones against the leftovers.

    Detections at or below the low threshold appear in no output list, nor do
    low-score ones when ``config.low_score_stage`` is off.
    """
    det_boxes = boxes_to_array([d.box for d in dets])
    pred_boxes = boxes_to_array([b for _, b in predicted])
    matches, t_left, d_left = cascade_match_arrays(dets, det_boxes, pred_boxes, config)
    ids = [tid for tid, _ in predicted]
    return MatchResult(
        [(ids[t], d) for t, d in matches],
        [ids[t] for t in t_left],
        d_left,
    )
