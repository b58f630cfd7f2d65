"""CLEAR-MOT and identity metrics.

Both inputs are mappings ``frame -> [(object_id, Box)]``. Correspondence uses
IoU with a threshold (0.5 by default).
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import numpy as np

from .association import solve_assignment
from .geometry import Box, boxes_to_array, iou_matrix

FrameBoxes = Mapping[int, Sequence[tuple[int, Box]]]


class UndefinedMetricError(ValueError):
    """Ground truth is empty, so the ratios are undefined."""


@dataclass
class SequenceMetrics:
    mota: float = 0.0
    motp: float = 0.0
    fp: int = 0
    fn: int = 0
    ids: int = 0
    fm: int = 0
    mt: int = 0
    ml: int = 0
    idf1: float = 0.0
    gt_total: int = 0
    # raw counts, kept so sequences can be pooled
    hyp_total: int = 0
    matches: int = 0
    iou_sum: float = 0.0
    gt_tracks: int = 0
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0

    def summary(self) -> dict[str, float | int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _as_id_boxes(frames: FrameBoxes) -> dict[int, list[tuple[int, Box]]]:
    out = {}
    for frame, items in frames.items():
        rows = []
        for item in items:
            if isinstance(item, tuple):
                rows.append((int(item[0]), item[1]))
            else:
                oid = getattr(item, "track_id", None)
                rows.append((int(item.id if oid is None else oid), item.box))
        out[frame] = rows
    return out


def _check_gt(gt) -> int:
    total = sum(len(v) for v in gt.values())
    if total == 0:
        raise UndefinedMetricError("ground truth contains no boxes")
    return total


def clear_mot(gt: FrameBoxes, results: FrameBoxes, iou_threshold: float = 0.5) -> SequenceMetrics:
    """MOTA, MOTP, FP, FN, IDS, FM, MT and ML; identity fields are left at zero.

    A ground-truth object keeps its most recent hypothesis while their IoU stays
    at or above the threshold; the remaining pairs are assigned by maximum IoU.
    """
    gt = _as_id_boxes(gt)
    results = _as_id_boxes(results)
    gt_total = _check_gt(gt)

    m = SequenceMetrics(gt_total=gt_total)
    last_hyp: dict[int, int] = {}    # gt id -> hyp id of its most recent match
    present = defaultdict(int)
    tracked = defaultdict(int)
    was_tracked = {}                 # gt id -> matched in its previous present frame
    ever_tracked = set()

    for frame in sorted(set(gt) | set(results)):
        g = gt.get(frame, [])
        h = results.get(frame, [])
        m.hyp_total += len(h)
        g_ids = [i for i, _ in g]
        h_ids = [i for i, _ in h]
        ious = iou_matrix(boxes_to_array([b for _, b in g]), boxes_to_array([b for _, b in h]))
        h_pos = {hid: j for j, hid in enumerate(h_ids)}

        pairs: dict[int, int] = {}   # gt row -> hyp column
        used_h = set()
        for gi, gid in enumerate(g_ids):
            hid = last_hyp.get(gid)
            if hid is None or hid not in h_pos:
                continue
            hj = h_pos[hid]
            if hj not in used_h and ious[gi, hj] >= iou_threshold:
                pairs[gi] = hj
                used_h.add(hj)

        free_g = [i for i in range(len(g_ids)) if i not in pairs]
        free_h = [j for j in range(len(h_ids)) if j not in used_h]
        if free_g and free_h:
            sub = ious[np.ix_(free_g, free_h)]
            res = solve_assignment(sub, iou_threshold)
            for r, c in res.matches:
                pairs[free_g[r]] = free_h[c]

        now = set()
        for gi, hj in pairs.items():
            gid, hid = g_ids[gi], h_ids[hj]
            if gid in last_hyp and last_hyp[gid] != hid:
                m.ids += 1
            last_hyp[gid] = hid
            now.add(gid)
            m.iou_sum += float(ious[gi, hj])
        m.matches += len(pairs)
        m.fp += len(h_ids) - len(pairs)
        m.fn += len(g_ids) - len(pairs)

        for gid in g_ids:
            present[gid] += 1
            is_tracked = gid in now
            if is_tracked:
                tracked[gid] += 1
                if gid in ever_tracked and not was_tracked.get(gid, False):
                    m.fm += 1
                ever_tracked.add(gid)
            was_tracked[gid] = is_tracked

    m.gt_tracks = len(present)
    for gid, n in present.items():
        ratio = tracked[gid] / n
        if ratio > 0.8:
            m.mt += 1
        elif ratio < 0.2:
            m.ml += 1
    m.mota = 1.0 - (m.fp + m.fn + m.ids) / gt_total
    m.motp = m.iou_sum / m.matches if m.matches else 0.0
    return m


def identity_counts(gt: FrameBoxes, results: FrameBoxes, iou_threshold: float = 0.5) -> tuple[int, int, int]:
    """``(IDTP, IDFP, IDFN)`` from the best one-to-one matching of whole trajectories."""
    gt = _as_id_boxes(gt)
    results = _as_id_boxes(results)
    _check_gt(gt)
    gt_ids = sorted({i for rows in gt.values() for i, _ in rows})
    hyp_ids = sorted({i for rows in results.values() for i, _ in rows})
    g_pos = {i: k for k, i in enumerate(gt_ids)}
    h_pos = {i: k for k, i in enumerate(hyp_ids)}
    overlap = np.zeros((len(gt_ids), len(hyp_ids)))
    n_gt = n_hyp = 0
    for frame in set(gt) | set(results):
        g = gt.get(frame, [])
        h = results.get(frame, [])
        n_gt += len(g)
        n_hyp += len(h)
        if not g or not h:
            continue
        ious = iou_matrix(boxes_to_array([b for _, b in g]), boxes_to_array([b for _, b in h]))
        gi, hj = np.nonzero(ious >= iou_threshold)
        for a, b in zip(gi.tolist(), hj.tolist()):
            overlap[g_pos[g[a][0]], h_pos[h[b][0]]] += 1
    idtp = 0
    if overlap.size:
        res = solve_assignment(overlap, 1.0)
        idtp = int(sum(overlap[r, c] for r, c in res.matches))
    return idtp, n_hyp - idtp, n_gt - idtp


def idf1(gt: FrameBoxes, results: FrameBoxes, iou_threshold: float = 0.5) -> float:
    idtp, idfp, idfn = identity_counts(gt, results, iou_threshold)
    denom = 2 * idtp + idfp + idfn
    return 2 * idtp / denom if denom else 0.0


def evaluate(gt: FrameBoxes, results: FrameBoxes, iou_threshold: float = 0.5) -> SequenceMetrics:
    """:func:`clear_mot` with the identity fields filled in."""
    m = clear_mot(gt, results, iou_threshold)
    m.idtp, m.idfp, m.idfn = identity_counts(gt, results, iou_threshold)
    denom = 2 * m.idtp + m.idfp + m.idfn
    m.idf1 = 2 * m.idtp / denom if denom else 0.0
    return m


def aggregate(per_sequence: Sequence[SequenceMetrics]) -> SequenceMetrics:
    """Pool raw counts over sequences and recompute the ratios from the sums."""
    total = SequenceMetrics()
    for m in per_sequence:
        for name in ("fp", "fn", "ids", "fm", "mt", "ml", "gt_total", "hyp_total",
                     "matches", "iou_sum", "gt_tracks", "idtp", "idfp", "idfn"):
            setattr(total, name, getattr(total, name) + getattr(m, name))
    if total.gt_total == 0:
        raise UndefinedMetricError("ground truth contains no boxes")
    total.mota = 1.0 - (total.fp + total.fn + total.ids) / total.gt_total
    total.motp = total.iou_sum / total.matches if total.matches else 0.0
    denom = 2 * total.idtp + total.idfp + total.idfn
    total.idf1 = 2 * total.idtp / denom if denom else 0.0
    return total
