"""Independent oracles shared by the test modules."""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from geotrack.geometry import Box


# the compiled kernels load on first call, which would trip per-example deadlines
settings.register_profile("geotrack", deadline=None)
settings.load_profile("geotrack")


def raster_area(boxes: list[Box], step: float = 0.5) -> float:
    """Area covered by *all* ``boxes`` at once, by counting grid cells.

    Cell centers are tested for membership, so the count is exact whenever
    every box edge lies on a multiple of ``step``.
    """
    x0 = max(b.u - b.w / 2 for b in boxes)
    x1 = min(b.u + b.w / 2 for b in boxes)
    y0 = max(b.v - b.h / 2 for b in boxes)
    y1 = min(b.v + b.h / 2 for b in boxes)
    if x1 <= x0 or y1 <= y0:
        return 0.0
    xs = np.arange(math.floor(x0 / step), math.ceil(x1 / step)) * step + step / 2
    ys = np.arange(math.floor(y0 / step), math.ceil(y1 / step)) * step + step / 2
    inside_x = np.ones(len(xs), dtype=bool)
    inside_y = np.ones(len(ys), dtype=bool)
    for b in boxes:
        inside_x &= (xs > b.u - b.w / 2) & (xs < b.u + b.w / 2)
        inside_y &= (ys > b.v - b.h / 2) & (ys < b.v + b.h / 2)
    return float(inside_x.sum() * inside_y.sum()) * step * step


def raster_iou(a: Box, b: Box, step: float = 0.5) -> float:
    inter = raster_area([a, b], step)
    return inter / (raster_area([a], step) + raster_area([b], step) - inter)


@lru_cache(maxsize=None)
def _perms(n: int, m: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(m), n)), dtype=int).reshape(-1, n)


def brute_force_best(sim: np.ndarray, min_similarity: float = -math.inf) -> float:
    """Best total similarity over every partial one-to-one matching.

    Enumerates every injective row->column map and keeps, per map, only the
    pairs that clear the gate and are positive (dropping a pair is always
    allowed), so partial matchings are covered too. Sums use ``math.fsum``.
    """
    sim = np.asarray(sim, dtype=float)
    if sim.size == 0:
        return 0.0
    if sim.shape[0] > sim.shape[1]:
        sim = sim.T
    n, m = sim.shape
    perms = _perms(n, m)
    vals = sim[np.arange(n), perms]
    vals = np.where((vals >= min_similarity) & (vals > 0), vals, 0.0)
    best_rows = np.flatnonzero(vals.sum(axis=1) >= vals.sum(axis=1).max() - 1e-9)
    return max(math.fsum(vals[r]) for r in best_rows)


def matched_total(sim: np.ndarray, matches) -> float:
    return math.fsum(float(sim[r, c]) for r, c in matches)


# boxes with edges on the 0.5 grid, so rasterization is exact
grid_boxes = st.builds(
    lambda x, y, w, h: Box.from_tlwh(x / 2, y / 2, w / 2, h / 2),
    st.integers(-40, 40), st.integers(-40, 40), st.integers(1, 40), st.integers(1, 40),
)

finite = dict(allow_nan=False, allow_infinity=False)
boxes = st.builds(
    Box,
    st.floats(-1e3, 1e3, **finite),
    st.floats(-1e3, 1e3, **finite),
    st.floats(0.5, 500, **finite),
    st.floats(0.5, 500, **finite),
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# -- acceptance report -------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2} {verdict:<4} {title}" + (f" ({detail})" if detail else ""))
