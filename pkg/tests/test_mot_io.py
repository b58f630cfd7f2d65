from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geotrack.geometry import Box
from geotrack.lifecycle import TrackStatus
from geotrack.mot_io import (
    MotParseError,
    ParseStats,
    format_result_line,
    read_detections,
    read_ground_truth,
    read_results,
    write_results,
)
from geotrack.tracker import FrameResult, TrackRecord

DATA = Path(__file__).parent / "data"


def _write(tmp_path, text, name="f.txt"):
    p = tmp_path / name
    p.write_bytes(text.encode())
    return p


def test_detection_line_becomes_center_box(tmp_path):
    p = _write(tmp_path, "1,-1,10,20,30,40,0.9,-1,-1,-1\n")
    dets = read_detections(p)
    assert list(dets) == [1]
    (d,) = dets[1]
    assert d.box == Box(25.0, 40.0, 30.0, 40.0)
    assert d.score == 0.9 and d.frame == 1


def test_empty_file_gives_empty_mapping(tmp_path):
    assert read_detections(_write(tmp_path, "")) == {}
    assert read_results(_write(tmp_path, "\n\n", "r.txt")) == {}


def test_frames_come_back_sorted(tmp_path):
    p = _write(tmp_path, "3,-1,0,0,5,5,0.5\n1,-1,0,0,5,5,0.5\n2,-1,0,0,5,5,0.5\n1,-1,9,9,5,5,0.7\n")
    dets = read_detections(p)
    assert list(dets) == [1, 2, 3]
    assert [d.score for d in dets[1]] == [0.5, 0.7]


def test_scores_are_clipped(tmp_path):
    dets = read_detections(_write(tmp_path, "1,-1,0,0,5,5,1.7\n1,-1,0,0,5,5,-3\n"))
    assert [d.score for d in dets[1]] == [1.0, 0.0]


def test_result_line_format():
    line = format_result_line(1, 3, Box.from_tlwh(10, 20, 30, 40), 0.9)
    assert line == "1,3,10.00,20.00,30.00,40.00,0.90,-1,-1,-1\n"
    # no negative zero in the output
    assert format_result_line(1, 1, Box.from_tlwh(-0.001, 0, 1, 1), 0.5).startswith("1,1,0.00,")


def test_write_results_sorts_by_frame_then_id(tmp_path):
    rec = lambda i: TrackRecord(i, Box(50, 50, 10, 10), TrackStatus.ACTIVE, 0.5)
    p = tmp_path / "out" / "seq.txt"
    write_results(p, [FrameResult(2, [rec(5), rec(1)]), FrameResult(1, [rec(2)])])
    keys = [tuple(map(int, ln.split(",")[:2])) for ln in p.read_text().splitlines()]
    assert keys == [(1, 2), (2, 1), (2, 5)]


coord = st.floats(-500, 2000, allow_nan=False)
size = st.floats(1, 500, allow_nan=False)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(1, 30), st.integers(1, 99), coord, coord, size, size,
                          st.floats(0, 1)), max_size=20))
def test_results_round_trip_within_rounding(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "r.txt"
    frames = {}
    for f, i, x, y, w, h, s in rows:
        frames.setdefault(f, []).append(TrackRecord(i, Box.from_tlwh(x, y, w, h), TrackStatus.ACTIVE, s))
    write_results(path, [FrameResult(f, recs) for f, recs in frames.items()])
    back = read_results(path)
    assert sorted(back) == sorted(frames)
    for f, recs in frames.items():
        got = sorted(back[f], key=lambda r: r[0])
        want = sorted(recs, key=lambda r: r.track_id)
        assert [g[0] for g in got] == [r.track_id for r in want]
        for (_, box, score), r in zip(got, want):
            for a, b in zip(box.to_tlwh(), r.box.to_tlwh()):
                assert abs(a - b) <= 0.005 + 1e-9
            assert abs(score - r.score) <= 0.005 + 1e-9


def test_ground_truth_drops_ignored_rows():
    gt = read_ground_truth(DATA / "gt_seven_rows.txt")
    assert sum(len(v) for v in gt.values()) == 6
    assert [g.id for g in gt[2]] == [1, 3]
    assert gt[2][1].visibility == 0.25


def test_pedestrians_only_filters_class(tmp_path):
    p = _write(tmp_path, "1,1,0,0,5,5,1,1,1\n1,2,0,0,5,5,1,3,1\n1,3,0,0,5,5,1\n")
    assert [g.id for g in read_ground_truth(p, pedestrians_only=True)[1]] == [1, 3]
    assert len(read_ground_truth(p)[1]) == 3


def test_crlf_line_endings(tmp_path):
    p = _write(tmp_path, "1,-1,10,20,30,40,0.9\r\n2,-1,10,20,30,40,0.8\r\n")
    dets = read_detections(p)
    assert list(dets) == [1, 2] and dets[2][0].box == Box(25.0, 40.0, 30.0, 40.0)


def test_malformed_rows_skipped_or_fatal(tmp_path):
    text = "1,-1,10,20,30,40,0.9\n1,-1,ten,20,30,40,0.9\n2,-1,1,2\n0,-1,1,1,1,1,0.5\n3,-1,1,1,0,5,0.5\n"
    p = _write(tmp_path, text)
    stats = ParseStats()
    dets = read_detections(p, stats=stats)
    assert list(dets) == [1]
    assert (stats.rows, stats.malformed, stats.degenerate) == (1, 3, 1)
    with pytest.raises(MotParseError) as err:
        read_detections(p, strict=True)
    assert err.value.lineno == 2 and str(p) in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.txt"):
        read_detections(tmp_path / "nope.txt")
