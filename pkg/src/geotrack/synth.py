"""Synthetic ground truth and detections with pans, occlusions, noise and false positives.

Coordinates are quantized to 0.01 px and scores to 1e-4 at generation time, so
writing a scenario to MOT files and reading it back gives identical inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .association import Detection
from .geometry import Box, intersection_area
from .mot_io import GtRecord, _atomic_write, write_detections, write_ground_truth


class SpecError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(f"line {lineno}: {message}" if lineno else message)
        self.lineno = lineno


@dataclass(frozen=True)
class TargetSpec:
    birth: int
    death: int
    box: Box
    velocity: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class ScoreModel:
    """Clipped Gaussians; true-positive scores are multiplied by visibility."""

    tp_mean: float = 0.85
    tp_std: float = 0.1
    fp_mean: float = 0.07
    fp_std: float = 0.05

    def sample(self, rng: np.random.Generator, true_positive: bool, visibility: float = 1.0) -> float:
        if true_positive:
            s = self.tp_mean + self.tp_std * rng.standard_normal() if self.tp_std else self.tp_mean
            s = min(max(s, 0.0), 1.0) * visibility
        else:
            s = self.fp_mean + self.fp_std * rng.standard_normal() if self.fp_std else self.fp_mean
            s = min(max(s, 0.0), 1.0)
        return round(s, 4)


@dataclass(frozen=True)
class ScenarioSpec:
    frames: int
    targets: tuple[TargetSpec, ...] = ()
    pan_events: tuple[tuple[int, float, float], ...] = ()
    noise: float = 0.0
    fp_rate: float = 0.0
    miss_rate: float = 0.0
    occluded_miss_rate: float = 0.9
    score_model: ScoreModel = field(default_factory=ScoreModel)
    image_size: tuple[float, float] = (1920.0, 1080.0)
    seed: int = 0

    def validate(self) -> None:
        if self.frames < 1:
            raise SpecError(f"frames must be >= 1, got {self.frames}")
        for k, t in enumerate(self.targets):
            if not 1 <= t.birth < t.death <= self.frames:
                raise SpecError(f"target {k}: need 1 <= birth < death <= frames, got {t.birth}, {t.death}")
        for frame, _, _ in self.pan_events:
            if not 1 <= frame <= self.frames:
                raise SpecError(f"pan event at frame {frame} outside 1..{self.frames}")
        for name in ("miss_rate", "occluded_miss_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SpecError(f"{name} must lie in [0, 1]")
        if self.fp_rate < 0 or self.noise < 0:
            raise SpecError("fp_rate and noise must be >= 0")


@dataclass
class Scenario:
    gt: dict[int, list[GtRecord]]
    dets: dict[int, list[Detection]]
    # per frame: pan applied at that frame, cumulative offset, TP and FP counts
    pan: dict[int, tuple[float, float]]
    offset: dict[int, tuple[float, float]]
    tp_count: dict[int, int]
    fp_count: dict[int, int]
    # per frame, parallel to dets: gt id of each detection or -1 for false positives
    det_truth: dict[int, list[int]]


def _q(x: float) -> float:
    return round(float(x), 2)


def _quantized_box(u: float, v: float, w: float, h: float) -> Box:
    x, y = _q(u - w / 2.0), _q(v - h / 2.0)
    return Box.from_tlwh(x, y, _q(w), _q(h))


def _visibilities(boxes: list[Box]) -> list[float]:
    """Visible fraction of each box; taller boxes are closer and occlude shorter ones."""
    out = []
    for i, b in enumerate(boxes):
        worst = 0.0
        for j, o in enumerate(boxes):
            if j == i:
                continue
            in_front = o.h > b.h or (o.h == b.h and j < i)
            if in_front:
                worst = max(worst, intersection_area(b, o))
        out.append(max(0.0, 1.0 - worst / b.area))
    return out


def generate(spec: ScenarioSpec) -> Scenario:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    pans: dict[int, tuple[float, float]] = {}
    for frame, du, dv in spec.pan_events:
        pdu, pdv = pans.get(frame, (0.0, 0.0))
        pans[frame] = (pdu + du, pdv + dv)

    heights = [t.box.h for t in spec.targets] or [100.0]
    h_lo, h_hi = min(heights), max(heights)
    sc = spec.score_model
    gt, dets, det_truth = {}, {}, {}
    pan_out, offset_out, tp_out, fp_out = {}, {}, {}, {}
    ou = ov = 0.0
    for f in range(1, spec.frames + 1):
        du, dv = pans.get(f, (0.0, 0.0))
        ou += du
        ov += dv
        pan_out[f] = (du, dv)
        offset_out[f] = (ou, ov)

        ids, boxes = [], []
        for k, t in enumerate(spec.targets):
            if not t.birth <= f <= t.death:
                continue
            steps = f - t.birth
            u = t.box.u + steps * t.velocity[0] + ou
            v = t.box.v + steps * t.velocity[1] + ov
            ids.append(k + 1)
            boxes.append(_quantized_box(u, v, t.box.w, t.box.h))
        vis = _visibilities(boxes)
        gt[f] = [GtRecord(i, b, round(vv, 4)) for i, b, vv in zip(ids, boxes, vis)]

        frame_dets, truth = [], []
        for gid, b, vv in zip(ids, boxes, vis):
            miss_p = spec.occluded_miss_rate if vv < 0.3 else spec.miss_rate
            if vv <= 0.0 or (miss_p > 0.0 and rng.random() < miss_p):
                continue
            if spec.noise > 0.0:
                j = rng.standard_normal(4) * spec.noise
                u, v = b.u + j[0] * b.h, b.v + j[1] * b.h
                w, h = max(b.w * (1.0 + j[2]), 1.0), max(b.h * (1.0 + j[3]), 1.0)
                box = _quantized_box(u, v, w, h)
            else:
                box = b
            frame_dets.append(Detection(box, sc.sample(rng, True, vv), f))
            truth.append(gid)
        n_tp = len(frame_dets)
        n_fp = int(rng.poisson(spec.fp_rate)) if spec.fp_rate > 0 else 0
        W, H = spec.image_size
        for _ in range(n_fp):
            h = rng.uniform(h_lo, h_hi)
            w = h * rng.uniform(0.3, 0.6)
            box = _quantized_box(rng.uniform(0, W), rng.uniform(0, H), w, h)
            frame_dets.append(Detection(box, sc.sample(rng, False), f))
            truth.append(-1)
        order = rng.permutation(len(frame_dets)) if frame_dets else []
        dets[f] = [frame_dets[i] for i in order]
        det_truth[f] = [truth[i] for i in order]
        tp_out[f], fp_out[f] = n_tp, n_fp
    return Scenario(gt, dets, pan_out, offset_out, tp_out, fp_out, det_truth)


# -- scenario text format ---------------------------------------------------

def dumps_spec(spec: ScenarioSpec) -> str:
    sm = spec.score_model
    lines = [
        f"frames = {spec.frames}",
        f"seed = {spec.seed}",
        f"noise = {spec.noise!r}",
        f"fp_rate = {spec.fp_rate!r}",
        f"miss_rate = {spec.miss_rate!r}",
        f"occluded_miss_rate = {spec.occluded_miss_rate!r}",
        f"image_size = {spec.image_size[0]!r} {spec.image_size[1]!r}",
        f"tp_score = {sm.tp_mean!r} {sm.tp_std!r}",
        f"fp_score = {sm.fp_mean!r} {sm.fp_std!r}",
        "# target = birth death u v w h du dv",
    ]
    for t in spec.targets:
        b = t.box
        lines.append(
            f"target = {t.birth} {t.death} {b.u!r} {b.v!r} {b.w!r} {b.h!r} "
            f"{t.velocity[0]!r} {t.velocity[1]!r}"
        )
    lines.append("# pan = frame du dv")
    for frame, du, dv in spec.pan_events:
        lines.append(f"pan = {frame} {du!r} {dv!r}")
    return "\n".join(lines) + "\n"


def _numbers(value: str, n: int, lineno: int, key: str) -> list[float]:
    parts = value.split()
    if len(parts) != n:
        raise SpecError(f"{key} expects {n} values, got {len(parts)}", lineno)
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise SpecError(f"{key}: non-numeric value in {value!r}", lineno) from None


def _as_int(x: float, key: str, lineno: int) -> int:
    if x != int(x):
        raise SpecError(f"{key} must be an integer, got {x}", lineno)
    return int(x)


def parse_spec(text: str) -> ScenarioSpec:
    """Parse the ``key = value`` scenario format written by :func:`dumps_spec`."""
    scalars: dict = {}
    targets, pans = [], []
    tp = fp = None
    size = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError("expected key = value", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in ("frames", "seed"):
            scalars[key] = _as_int(_numbers(value, 1, lineno, key)[0], key, lineno)
        elif key in ("noise", "fp_rate", "miss_rate", "occluded_miss_rate"):
            scalars[key] = _numbers(value, 1, lineno, key)[0]
        elif key == "image_size":
            size = tuple(_numbers(value, 2, lineno, key))
        elif key == "tp_score":
            tp = _numbers(value, 2, lineno, key)
        elif key == "fp_score":
            fp = _numbers(value, 2, lineno, key)
        elif key == "target":
            b, d, u, v, w, h, vu, vv = _numbers(value, 8, lineno, key)
            try:
                box = Box(u, v, w, h)
            except ValueError as exc:
                raise SpecError(str(exc), lineno) from None
            targets.append((lineno, TargetSpec(_as_int(b, key, lineno), _as_int(d, key, lineno), box, (vu, vv))))
        elif key == "pan":
            f, du, dv = _numbers(value, 3, lineno, key)
            pans.append((lineno, (_as_int(f, key, lineno), du, dv)))
        else:
            raise SpecError(f"unknown key {key!r}", lineno)
    if "frames" not in scalars:
        raise SpecError("missing required key 'frames'")
    spec = ScenarioSpec(
        targets=tuple(t for _, t in targets),
        pan_events=tuple(p for _, p in pans),
        **scalars,
    )
    if size is not None:
        spec = replace(spec, image_size=size)
    if tp is not None or fp is not None:
        base = ScoreModel()
        spec = replace(spec, score_model=ScoreModel(
            *(tp if tp is not None else (base.tp_mean, base.tp_std)),
            *(fp if fp is not None else (base.fp_mean, base.fp_std)),
        ))
    # attach line numbers to per-entry validation failures
    if spec.frames < 1:
        raise SpecError(f"frames must be >= 1, got {spec.frames}")
    for lineno, t in targets:
        if not 1 <= t.birth < t.death <= spec.frames:
            raise SpecError(f"target needs 1 <= birth < death <= frames ({spec.frames})", lineno)
    for lineno, (f, _, _) in pans:
        if not 1 <= f <= spec.frames:
            raise SpecError(f"pan frame {f} outside 1..{spec.frames}", lineno)
    spec.validate()
    return spec


def write_scenario(out_dir, name: str, spec: ScenarioSpec, scenario: Scenario | None = None) -> Path:
    """Write ``<out_dir>/<name>/{gt/gt.txt, det/det.txt, scenario.txt, diagnostics.txt}``."""
    scenario = scenario or generate(spec)
    root = Path(out_dir) / name
    write_ground_truth(root / "gt" / "gt.txt", scenario.gt)
    write_detections(root / "det" / "det.txt", scenario.dets)
    _atomic_write(root / "scenario.txt", [dumps_spec(spec)])
    diag = ["frame,pan_du,pan_dv,offset_u,offset_v,tp,fp\n"]
    for f in sorted(scenario.pan):
        du, dv = scenario.pan[f]
        ou, ov = scenario.offset[f]
        diag.append(f"{f},{du:.2f},{dv:.2f},{ou:.2f},{ov:.2f},{scenario.tp_count[f]},{scenario.fp_count[f]}\n")
    _atomic_write(root / "diagnostics.txt", diag)
    return root


# -- standard suite ---------------------------------------------------------

def _static_separated() -> ScenarioSpec:
    targets = []
    for k in range(6):
        col, row = k % 3, k // 3
        targets.append(TargetSpec(1, 100, Box(300.0 + 600.0 * col, 300.0 + 450.0 * row, 60.0, 150.0),
                                  ((-1.0) ** k * 0.5, 0.25)))
    return ScenarioSpec(frames=100, targets=tuple(targets),
                        score_model=ScoreModel(tp_std=0.0), seed=11)


def _pan_burst() -> ScenarioSpec:
    sizes = [(110.0, 260.0), (100.0, 240.0), (90.0, 220.0)] + [(24.0, 60.0)] * 3 + [(20.0, 50.0)] * 4
    targets = []
    for k, (w, h) in enumerate(sizes):
        col, row = k % 5, k // 5
        targets.append(TargetSpec(1, 150, Box(250.0 + 350.0 * col, 300.0 + 450.0 * row, w, h),
                                  (0.6 if k % 2 else -0.6, 0.2)))
    pans = ((40, 40.0, 0.0), (70, -35.0, 12.0), (100, 0.0, -32.0), (125, 45.0, 20.0))
    return ScenarioSpec(frames=150, targets=tuple(targets), pan_events=pans, noise=0.01,
                        fp_rate=0.2, miss_rate=0.0, score_model=ScoreModel(tp_std=0.05), seed=23)


def _crossing_occlusion() -> ScenarioSpec:
    targets = (
        # the occluded walker: shorter, so it passes behind the occluder
        TargetSpec(1, 80, Box(700.0, 500.0, 40.0, 100.0), (2.0, 0.0)),
        TargetSpec(1, 80, Box(940.0, 500.0, 60.0, 150.0), (-2.0, 0.0)),
        TargetSpec(1, 80, Box(300.0, 800.0, 40.0, 100.0), (0.5, 0.0)),
        TargetSpec(1, 80, Box(1500.0, 250.0, 40.0, 100.0), (-0.5, 0.0)),
    )
    return ScenarioSpec(frames=80, targets=targets, noise=0.005, occluded_miss_rate=1.0,
                        score_model=ScoreModel(tp_std=0.03), seed=5)


def _dense_noisy() -> ScenarioSpec:
    rng = np.random.default_rng(1234)
    targets = []
    for k in range(20):
        h = float(rng.uniform(80, 220))
        birth = int(rng.integers(1, 30))
        death = int(rng.integers(150, 201))
        u, v = float(rng.uniform(200, 1700)), float(rng.uniform(200, 880))
        vel = (float(rng.uniform(-3, 3)), float(rng.uniform(-0.8, 0.8)))
        targets.append(TargetSpec(birth, death, Box(u, v, round(h * 0.4, 1), round(h, 1)), vel))
    return ScenarioSpec(frames=200, targets=tuple(targets), noise=0.03, fp_rate=3.0, miss_rate=0.1,
                        occluded_miss_rate=0.9, score_model=ScoreModel(tp_std=0.15), seed=99)


def standard_suite() -> dict[str, ScenarioSpec]:
    return {
        "static_separated": _static_separated(),
        "pan_burst": _pan_burst(),
        "crossing_occlusion": _crossing_occlusion(),
        "dense_noisy": _dense_noisy(),
    }
