"""Track bookkeeping after matching: occlusion, pruning and birth."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .association import Detection
from .config import TrackerConfig
from .geometry import Box, boxes_to_array, covered_ratios
from .motion import BoxKalmanFilter, KalmanState, state_to_box


class TrackStatus(enum.Enum):
    ACTIVE = "active"
    OCCLUDED = "occluded"
    LOST = "lost"


@dataclass
class Track:
    id: int
    kstate: KalmanState
    age: int = 1
    time_since_observed: int = 0
    uncovered_streak: int = 0
    status: TrackStatus = TrackStatus.ACTIVE
    last_score: float = 0.0

    @property
    def box(self) -> Box:
        return state_to_box(self.kstate)


class IdAllocator:
    """Hands out strictly increasing ids starting at 1; never reuses one."""

    def __init__(self, start: int = 1):
        self._next = start

    def __call__(self) -> int:
        tid = self._next
        self._next += 1
        return tid

    @property
    def peek(self) -> int:
        return self._next


def tracklet_confidence(track: Track, avg_area: float, area: float | None = None) -> float:
    """Age over time-since-observed, times the track's area relative to ``avg_area``.

    ``area`` defaults to the area of the track's current state box.
    """
    if track.time_since_observed <= 0:
        raise ValueError(f"track {track.id} was observed this frame; confidence is undefined")
    if area is None:
        area = track.box.area
    return track.age / track.time_since_observed * (area / avg_area)


def _ratios_for(tracks: Sequence[Track], all_predicted: Sequence[tuple[int, Box]]) -> np.ndarray:
    ids = [tid for tid, _ in all_predicted]
    pos = {tid: i for i, tid in enumerate(ids)}
    boxes = boxes_to_array([b for _, b in all_predicted])
    rows = [pos[t.id] for t in tracks]
    return covered_ratios(boxes[rows], boxes, np.array(rows, dtype=int))


def detect_occlusions(
    unmatched: Sequence[Track],
    all_predicted: Sequence[tuple[int, Box]],
    config: TrackerConfig,
) -> tuple[list[Track], list[Track]]:
    """Split unmatched tracks into occluded ones and the rest.

    A track is occluded when another predicted box covers more than
    ``covered_ratio_threshold`` of it and its confidence exceeds
    ``confidence_threshold``. Occluded tracks get status OCCLUDED.
    """
    if not unmatched:
        return [], []
    areas = np.array([b.w * b.h for _, b in all_predicted])
    avg_area = float(areas.mean())
    own_area = {tid: b.w * b.h for tid, b in all_predicted}
    ratios = _ratios_for(unmatched, all_predicted)
    occluded, remaining = [], []
    for track, ratio in zip(unmatched, ratios):
        if ratio > config.covered_ratio_threshold and (
            tracklet_confidence(track, avg_area, own_area[track.id]) > config.confidence_threshold
        ):
            track.status = TrackStatus.OCCLUDED
            track.uncovered_streak = 0
            occluded.append(track)
        else:
            remaining.append(track)
    return occluded, remaining


def prune_tracklets(
    remaining: Sequence[Track],
    all_predicted: Sequence[tuple[int, Box]],
    config: TrackerConfig,
) -> tuple[list[Track], list[int]]:
    """Drop tracks left uncovered for ``prune_patience`` consecutive frames.

    Survivors become LOST and stay live. With ``occlusion_handling`` off the
    covered ratio is ignored and a track goes after ``prune_patience`` unmatched
    frames, the plain fixed-age policy.
    """
    kept, removed = [], []
    if not remaining:
        return kept, removed
    if config.occlusion_handling:
        ratios = _ratios_for(remaining, all_predicted)
    else:
        ratios = np.zeros(len(remaining))
    for track, ratio in zip(remaining, ratios):
        if not config.occlusion_handling:
            expired = track.time_since_observed >= config.prune_patience
        else:
            if ratio <= config.covered_ratio_threshold:
                track.uncovered_streak += 1
            else:
                track.uncovered_streak = 0
            expired = track.uncovered_streak >= config.prune_patience
        if expired:
            removed.append(track.id)
        else:
            track.status = TrackStatus.LOST
            kept.append(track)
    return kept, removed


def create_tracklets(
    unmatched_dets: Sequence[Detection],
    config: TrackerConfig,
    kf: BoxKalmanFilter,
    next_id: IdAllocator,
) -> list[Track]:
    """One new ACTIVE track per detection scoring above ``new_track_threshold``."""
    born = []
    for det in unmatched_dets:
        if det.score > config.new_track_threshold:
            born.append(Track(next_id(), kf.initiate(det.box), last_score=det.score))
    return born
