"""Axis-aligned box arithmetic in center form.

Scalar functions operate on :class:`Box`; the ``*_matrix`` variants take
``(N, 4)`` arrays of ``[u, v, w, h]`` rows and are what the tracker uses in its
per-frame loop.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True, slots=True)
class Box:
    """Bounding box: center ``(u, v)``, width ``w`` and height ``h`` in pixels."""

    u: float
    v: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box size must be positive, got w={self.w}, h={self.h}")

    @classmethod
    def from_tlwh(cls, x: float, y: float, w: float, h: float) -> "Box":
        return cls(x + w / 2.0, y + h / 2.0, w, h)

    def to_tlwh(self) -> tuple[float, float, float, float]:
        return (self.u - self.w / 2.0, self.v - self.h / 2.0, self.w, self.h)

    def to_xyxy(self) -> tuple[float, float, float, float]:
        hw, hh = self.w / 2.0, self.h / 2.0
        return (self.u - hw, self.v - hh, self.u + hw, self.v + hh)

    @property
    def area(self) -> float:
        return self.w * self.h

    def shifted(self, du: float, dv: float) -> "Box":
        return Box(self.u + du, self.v + dv, self.w, self.h)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w, self.h], dtype=float)


def _overlap(ca: float, sa: float, cb: float, sb: float) -> float:
    # 1-D interval overlap from centers and sizes; exact for identical intervals
    return min(sa, sb, 0.5 * (sa + sb) - abs(ca - cb))


def intersection_area(a: Box, b: Box) -> float:
    iw = _overlap(a.u, a.w, b.u, b.w)
    ih = _overlap(a.v, a.h, b.v, b.h)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def iou(a: Box, b: Box) -> float:
    inter = intersection_area(a, b)
    return inter / (a.area + b.area - inter)


def niou(det: Box, pred: Box) -> float:
    """IoU minus the mean of four center/size differences normalized by the detection.

    Not symmetric: the first argument must be the detection box.
    """
    penalty = (
        abs(det.u - pred.u) / det.w
        + abs(det.v - pred.v) / det.h
        + abs(det.w - pred.w) / det.w
        + abs(det.h - pred.h) / det.h
    )
    return iou(det, pred) - penalty / 4.0


def covered_ratio(target: Box, others: Iterable[Box]) -> float:
    """Largest fraction of ``target``'s own area covered by any single box in ``others``.

    The caller is responsible for leaving ``target`` out of ``others``.
    """
    best = 0.0
    for other in others:
        best = max(best, intersection_area(target, other))
    return best / target.area


def boxes_to_array(boxes: Sequence[Box]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4))
    return np.array([(b.u, b.v, b.w, b.h) for b in boxes], dtype=float)


def _intersection_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    size_a, size_b = a[:, None, 2:], b[None, :, 2:]
    side = 0.5 * (size_a + size_b) - np.abs(a[:, None, :2] - b[None, :, :2])
    side = np.minimum(np.minimum(side, size_a), size_b)
    np.maximum(side, 0.0, out=side)
    return side[..., 0] * side[..., 1]


def intersection_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise intersection areas, shape ``(len(a), len(b))``."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    return _intersection_matrix(a, b)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    inter = _intersection_matrix(a, b)
    area_a = a[:, 2] * a[:, 3]
    area_b = b[:, 2] * b[:, 3]
    return inter / (area_a[:, None] + area_b[None, :] - inter)


def niou_matrix(dets: np.ndarray, preds: np.ndarray) -> np.ndarray:
    """nIoU for every (detection, prediction) pair, shape ``(len(dets), len(preds))``."""
    dets = np.asarray(dets, dtype=float).reshape(-1, 4)
    preds = np.asarray(preds, dtype=float).reshape(-1, 4)
    du, dv, dw, dh = dets.T[:, :, None]
    pu, pv, pw, ph = preds.T
    adu = np.abs(du - pu)
    adv = np.abs(dv - pv)
    adw = np.abs(dw - pw)
    adh = np.abs(dh - ph)
    # overlap per axis: min(w_a, w_b, (w_a + w_b)/2 - |du|), exact for identical boxes
    out = 0.5 * (dw + pw) - adu
    np.minimum(out, np.minimum(dw, pw), out=out)
    ih = 0.5 * (dh + ph) - adv
    np.minimum(ih, np.minimum(dh, ph), out=ih)
    np.maximum(out, 0.0, out=out)
    np.maximum(ih, 0.0, out=ih)
    out *= ih
    union = dw * dh + pw * ph
    union -= out
    out /= union
    adu += adw
    adu /= dw
    adv += adh
    adv /= dh
    adu += adv
    adu *= 0.25
    out -= adu
    return out


def covered_ratios(targets: np.ndarray, boxes: np.ndarray, self_index: np.ndarray | None = None) -> np.ndarray:
    """Covered ratio of each row of ``targets`` against ``boxes``.

    ``self_index[i]`` is the row of ``boxes`` that *is* ``targets[i]`` and must be
    excluded; pass ``None`` when the targets are not part of ``boxes``.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 4)
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    if len(targets) == 0:
        return np.zeros(0)
    inter = _intersection_matrix(targets, boxes)
    if self_index is not None:
        inter[np.arange(len(targets)), np.asarray(self_index)] = 0.0
    if inter.shape[1] == 0:
        return np.zeros(len(targets))
    return inter.max(axis=1) / (targets[:, 2] * targets[:, 3])
