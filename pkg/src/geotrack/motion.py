"""Constant-velocity Kalman filter over ``[u, v, a, h, du, dv, da, dh]``.

``a`` is the aspect ratio w/h. Noise standard deviations scale with the current
box height, recomputed every step. The ``*_many`` methods are the batched forms
used by the tracker; the single-state methods delegate to them. The
measurement update runs in a compiled kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import kalman_correct
from .geometry import Box

NDIM = 4


class DegenerateStateError(ValueError):
    """State has non-positive height or aspect ratio and cannot be drawn as a box."""


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray
    # box the position part of ``mean`` was built from; only trusted while it still matches
    source_box: Box | None = field(default=None, compare=False, repr=False)


class BoxKalmanFilter:
    def __init__(
        self,
        std_weight_position: float = 0.05,
        std_weight_velocity: float = 0.00625,
        std_aspect: float = 0.01,
        std_aspect_velocity: float = 1e-5,
        init_velocity_variance_factor: float = 10.0,
    ):
        self.std_weight_position = std_weight_position
        self.std_weight_velocity = std_weight_velocity
        self.std_aspect = std_aspect
        self.std_aspect_velocity = std_aspect_velocity
        self.init_velocity_variance_factor = init_velocity_variance_factor

    @classmethod
    def from_config(cls, config) -> "BoxKalmanFilter":
        return cls(
            config.std_weight_position,
            config.std_weight_velocity,
            config.std_aspect,
            config.std_aspect_velocity,
            config.init_velocity_variance_factor,
        )

    def _position_std(self, h: np.ndarray) -> np.ndarray:
        out = np.empty((len(h), NDIM))
        out[:, 0] = out[:, 1] = out[:, 3] = self.std_weight_position * h
        out[:, 2] = self.std_aspect
        return out

    def _velocity_std(self, h: np.ndarray) -> np.ndarray:
        out = np.empty((len(h), NDIM))
        out[:, 0] = out[:, 1] = out[:, 3] = self.std_weight_velocity * h
        out[:, 2] = self.std_aspect_velocity
        return out

    # -- single state ---------------------------------------------------

    def initiate(self, det: Box) -> KalmanState:
        mean, cov = self.initiate_many(np.array([[det.u, det.v, det.w, det.h]]))
        return KalmanState(mean[0], cov[0], det)

    def predict(self, state: KalmanState) -> KalmanState:
        mean, cov = self.predict_many(state.mean[None], state.covariance[None])
        return KalmanState(mean[0], cov[0], state.source_box)

    def correct(self, state: KalmanState, det: Box) -> KalmanState:
        mean, cov = self.correct_many(
            state.mean[None], state.covariance[None], np.array([[det.u, det.v, det.w, det.h]])
        )
        return KalmanState(mean[0], cov[0], det)

    # -- batched --------------------------------------------------------

    def initiate_many(self, boxes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``boxes`` is ``(N, 4)`` of ``[u, v, w, h]``."""
        boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
        n = len(boxes)
        mean = np.zeros((n, 2 * NDIM))
        mean[:, 0] = boxes[:, 0]
        mean[:, 1] = boxes[:, 1]
        mean[:, 2] = boxes[:, 2] / boxes[:, 3]
        mean[:, 3] = boxes[:, 3]
        pos_var = self._position_std(boxes[:, 3]) ** 2
        var = np.concatenate([pos_var, self.init_velocity_variance_factor * pos_var], axis=1)
        cov = np.zeros((n, 2 * NDIM, 2 * NDIM))
        idx = np.arange(2 * NDIM)
        cov[:, idx, idx] = var
        return mean, cov

    def predict_many(self, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = mean[:, 3]
        q = np.concatenate([self._position_std(h), self._velocity_std(h)], axis=1) ** 2
        new_mean = mean.copy()
        new_mean[:, :NDIM] += mean[:, NDIM:]
        # F P F^T with F = [[I, I], [0, I]]: add the velocity rows into the
        # position rows, then the velocity columns into the position columns
        new_cov = cov.copy()
        new_cov[:, :NDIM, :] += cov[:, NDIM:, :]
        new_cov[:, :, :NDIM] += new_cov[:, :, NDIM:]
        idx = np.arange(2 * NDIM)
        new_cov[:, idx, idx] += q
        return new_mean, new_cov

    def correct_many(
        self, mean: np.ndarray, cov: np.ndarray, boxes: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
        z = boxes.copy()
        z[:, 2] = boxes[:, 2] / boxes[:, 3]
        r = self._position_std(mean[:, 3]) ** 2
        return kalman_correct(
            np.ascontiguousarray(mean, dtype=float), np.ascontiguousarray(cov, dtype=float), z, r
        )


def state_to_box(state: KalmanState) -> Box:
    u, v, a, h = (float(x) for x in state.mean[:NDIM])
    if not (h > 0.0 and a > 0.0):
        raise DegenerateStateError(f"degenerate state: aspect={a}, height={h}")
    src = state.source_box
    if src is not None and src.u == u and src.v == v and src.h == h and src.w / src.h == a:
        return src
    return Box(u, v, a * h, h)


def means_to_boxes(mean: np.ndarray) -> np.ndarray:
    """``(N, 8)`` means to ``(N, 4)`` ``[u, v, w, h]`` rows (no validity check)."""
    out = mean[:, :NDIM].copy()
    out[:, 2] = mean[:, 2] * mean[:, 3]
    return out
