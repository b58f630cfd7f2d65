"""Per-frame tracking loop.

Each :meth:`Tracker.step` runs: predict, cascade match (twice, with the camera
shift compensated on the second pass), Kalman correction, occlusion detection,
pruning and track creation, then reports matched and occluded tracks.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .association import Detection, cascade_match_arrays
from .camera_motion import NO_MOTION, CameraMotionEstimate, rematch_arrays
from .config import TrackerConfig
from .geometry import Box, boxes_to_array
from .lifecycle import (
    IdAllocator,
    Track,
    TrackStatus,
    create_tracklets,
    detect_occlusions,
    prune_tracklets,
)
from .motion import BoxKalmanFilter, KalmanState, means_to_boxes


class SequenceError(ValueError):
    """Frames were presented out of order or detections carry the wrong frame index."""


@dataclass(frozen=True, slots=True)
class TrackRecord:
    track_id: int
    box: Box
    status: TrackStatus
    score: float


@dataclass
class FrameResult:
    frame: int
    records: list[TrackRecord] = field(default_factory=list)


class Tracker:
    """Online tracker; one instance per sequence, ``step`` calls strictly in frame order."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.kf = BoxKalmanFilter.from_config(self.config)
        self.tracks: list[Track] = []
        self.frame = 0
        self.last_shift: CameraMotionEstimate = NO_MOTION
        self.removed_ids: list[int] = []
        self._ids = IdAllocator()
        self._carry: list[Detection] = []

    def step(self, dets: Sequence[Detection], frame: int | None = None) -> FrameResult:
        cfg = self.config
        if frame is None:
            frame = dets[0].frame if dets else self.frame + 1
        if frame <= self.frame:
            raise SequenceError(f"frame {frame} does not follow frame {self.frame}")
        for d in dets:
            if d.frame != frame:
                raise SequenceError(f"detection for frame {d.frame} passed to frame {frame}")
        self.frame = frame

        dets = list(dets)
        n_fresh = len(dets)
        if self._carry:
            dets.extend(dataclasses.replace(d, frame=frame) for d in self._carry)
            self._carry = []

        # predict
        tracks = self.tracks
        if tracks:
            mean = np.array([t.kstate.mean for t in tracks])
            cov = np.concatenate([t.kstate.covariance for t in tracks]).reshape(-1, 8, 8)
            mean, cov = self.kf.predict_many(mean, cov)
            ok = (mean[:, 2] > 0) & (mean[:, 3] > 0)
            if not ok.all():
                self.removed_ids.extend(t.id for t, good in zip(tracks, ok) if not good)
                tracks = [t for t, good in zip(tracks, ok) if good]
                mean, cov = mean[ok], cov[ok]
            for t in tracks:
                t.age += 1
            pred = means_to_boxes(mean)
        else:
            mean = np.zeros((0, 8))
            cov = np.zeros((0, 8, 8))
            pred = np.zeros((0, 4))

        # associate
        det_boxes = boxes_to_array([d.box for d in dets])
        if cfg.camera_motion_removal:
            (matches, t_left, d_left), shift, comp = rematch_arrays(dets, det_boxes, pred, cfg)
        else:
            matches, t_left, d_left = cascade_match_arrays(dets, det_boxes, pred, cfg)
            shift, comp = NO_MOTION, pred
        self.last_shift = shift
        if cfg.shift_track_states and shift.support:
            mean[:, 0] += shift.du
            mean[:, 1] += shift.dv
        # unmatched tracks keep the prediction; matched ones are overwritten below
        for i in t_left:
            t = tracks[i]
            t.kstate = KalmanState(mean[i], cov[i], t.kstate.source_box)

        # correct matched tracks with the raw detection boxes
        records: list[TrackRecord] = []
        dropped: set[int] = set()
        if matches:
            tp = [t for t, _ in matches]
            dp = [d for _, d in matches]
            meas = det_boxes[dp]
            new_mean, new_cov = self.kf.correct_many(mean[tp], cov[tp], meas)
            out_boxes = means_to_boxes(new_mean)
            # zero innovation: report the measured box itself rather than a*h
            same = (new_mean[:, 0] == meas[:, 0]) & (new_mean[:, 1] == meas[:, 1]) & (
                new_mean[:, 3] == meas[:, 3]) & (new_mean[:, 2] == meas[:, 2] / meas[:, 3])
            out_boxes[same] = meas[same]
            valid = ((new_mean[:, 2] > 0) & (new_mean[:, 3] > 0)).tolist()
            for k, (ti, di) in enumerate(matches):
                t, det = tracks[ti], dets[di]
                t.kstate = KalmanState(new_mean[k], new_cov[k], det.box)
                t.status = TrackStatus.ACTIVE
                t.time_since_observed = 0
                t.uncovered_streak = 0
                t.last_score = det.score
                if not valid[k]:
                    dropped.add(t.id)
            for k, row in enumerate(out_boxes.tolist()):
                if valid[k]:
                    records.append(TrackRecord(tracks[tp[k]].id, Box(*row), TrackStatus.ACTIVE, dets[dp[k]].score))

        # unmatched tracks: occlusion, then pruning
        removed: list[int] = []
        if t_left:
            unmatched = [tracks[i] for i in t_left]
            for t in unmatched:
                t.time_since_observed += 1
            all_predicted = [(t.id, Box(*row)) for t, row in zip(tracks, comp.tolist())]
            if cfg.occlusion_handling:
                occluded, remaining = detect_occlusions(unmatched, all_predicted, cfg)
                comp_by_id = dict(all_predicted)
                for t in occluded:
                    records.append(TrackRecord(t.id, comp_by_id[t.id], TrackStatus.OCCLUDED, t.last_score))
            else:
                remaining = unmatched
            _, removed = prune_tracklets(remaining, all_predicted, cfg)

        # births
        leftovers = [dets[i] for i in d_left]
        born = create_tracklets(leftovers, cfg, self.kf, self._ids)
        for t in born:
            records.append(TrackRecord(t.id, t.box, TrackStatus.ACTIVE, t.last_score))
        if cfg.carry_unmatched_detections:
            self._carry = [
                dets[i] for i in d_left
                if i < n_fresh and dets[i].score <= cfg.new_track_threshold
            ]

        gone = dropped.union(removed)
        self.removed_ids.extend(sorted(gone))
        self.tracks = [t for t in tracks if t.id not in gone] + born
        records.sort(key=lambda r: r.track_id)
        return FrameResult(frame, records)

    def live_ids(self) -> list[int]:
        return [t.id for t in self.tracks]


def _iter_frames(det_stream) -> Iterable[tuple[int, list[Detection]]]:
    if isinstance(det_stream, Mapping):
        return sorted(det_stream.items())
    return det_stream


def run_sequence(det_stream, config: TrackerConfig | None = None) -> list[FrameResult]:
    """Track a whole sequence.

    ``det_stream`` is a mapping ``frame -> detections`` or an iterable of
    ``(frame, detections)`` pairs in increasing frame order. Frames missing
    between two present frames are processed as empty frames.
    """
    tracker = Tracker(config)
    out: list[FrameResult] = []
    for frame, dets in _iter_frames(det_stream):
        try:
            if tracker.frame and frame > tracker.frame + 1:
                for gap in range(tracker.frame + 1, frame):
                    out.append(tracker.step([], gap))
            out.append(tracker.step(dets, frame))
        except SequenceError as exc:
            raise SequenceError(f"frame {frame}: {exc}") from exc
    return out


def results_as_id_boxes(results: Sequence[FrameResult]) -> dict[int, list[tuple[int, Box]]]:
    """``frame -> [(track_id, box)]``, the form the metrics functions take."""
    return {r.frame: [(rec.track_id, rec.box) for rec in r.records] for r in results}
