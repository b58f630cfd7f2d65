"""Online multi-object tracking from box geometry alone."""
from .association import Detection, MatchResult, cascade_match, solve_assignment, split_by_score
from .camera_motion import CameraMotionEstimate, apply_shift, estimate_shift, rematch_with_compensation
from .config import TrackerConfig, load_config
from .geometry import Box, covered_ratio, intersection_area, iou, niou
from .lifecycle import Track, TrackStatus
from .motion import BoxKalmanFilter, KalmanState, state_to_box
from .tracker import FrameResult, Tracker, TrackRecord, run_sequence

__version__ = "0.1.0"
