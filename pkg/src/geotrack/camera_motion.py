"""Global camera shift from matched detection/prediction pairs, and the second matching pass."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .association import Detection, MatchResult, _split_indices, cascade_match_arrays
from .config import TrackerConfig
from .geometry import Box, boxes_to_array


@dataclass(frozen=True)
class CameraMotionEstimate:
    du: float = 0.0
    dv: float = 0.0
    support: int = 0


NO_MOTION = CameraMotionEstimate()


def _trimmed_mean(x: np.ndarray, trim: float) -> float:
    if trim <= 0.0:
        return float(x.mean())
    k = int(trim * len(x))
    xs = np.sort(x)
    if k and len(xs) > 2 * k:
        xs = xs[k:len(xs) - k]
    return float(xs.mean())


def shift_from_arrays(det_uv: np.ndarray, pred_uv: np.ndarray, trim: float = 0.0) -> CameraMotionEstimate:
    """``det_uv`` / ``pred_uv`` are ``(N, 2)`` centers of matched pairs."""
    n = len(det_uv)
    if n == 0:
        return NO_MOTION
    diff = np.asarray(det_uv, dtype=float) - np.asarray(pred_uv, dtype=float)
    return CameraMotionEstimate(_trimmed_mean(diff[:, 0], trim), _trimmed_mean(diff[:, 1], trim), n)


def estimate_shift(matches: Sequence[tuple[Box, Box]], trim: float = 0.0) -> CameraMotionEstimate:
    """Signed mean displacement of detections relative to their matched predictions.

    ``matches`` holds ``(detection box, predicted box)`` pairs. Adding the result
    to every prediction compensates the camera's motion.
    """
    if not matches:
        return NO_MOTION
    det = np.array([(d.u, d.v) for d, _ in matches], dtype=float)
    pred = np.array([(p.u, p.v) for _, p in matches], dtype=float)
    return shift_from_arrays(det, pred, trim)


def apply_shift(
    predicted: Sequence[tuple[int, Box]], shift: CameraMotionEstimate
) -> list[tuple[int, Box]]:
    return [(tid, box.shifted(shift.du, shift.dv)) for tid, box in predicted]


def rematch_arrays(
    dets: Sequence[Detection],
    det_boxes: np.ndarray,
    pred_boxes: np.ndarray,
    config: TrackerConfig,
) -> tuple[tuple[list, list, list], CameraMotionEstimate, np.ndarray]:
    """Array form of :func:`rematch_with_compensation`.

    Returns the second-pass ``(matches, unmatched_tracks, unmatched_dets)`` in
    track positions, the estimate, and the compensated prediction array.
    """
    split = _split_indices(dets, config)
    first = cascade_match_arrays(dets, det_boxes, pred_boxes, config, split)
    matches = first[0]
    if not matches:
        return first, NO_MOTION, pred_boxes
    t_pos = [t for t, _ in matches]
    d_idx = [d for _, d in matches]
    shift = shift_from_arrays(det_boxes[d_idx, :2], pred_boxes[t_pos, :2], config.shift_trim_fraction)
    shifted = pred_boxes.copy()
    shifted[:, 0] += shift.du
    shifted[:, 1] += shift.dv
    second = cascade_match_arrays(dets, det_boxes, shifted, config, split)
    return second, shift, shifted


def rematch_with_compensation(
    dets: Sequence[Detection],
    predicted: Sequence[tuple[int, Box]],
    config: TrackerConfig,
) -> tuple[MatchResult, CameraMotionEstimate]:
    """Match, estimate the camera shift from the matches, shift every prediction and match again."""
    det_boxes = boxes_to_array([d.box for d in dets])
    pred_boxes = boxes_to_array([b for _, b in predicted])
    (matches, t_left, d_left), shift, _ = rematch_arrays(dets, det_boxes, pred_boxes, config)
    ids = [tid for tid, _ in predicted]
    return MatchResult([(ids[t], d) for t, d in matches], [ids[t] for t in t_left], d_left), shift
