import pytest

from geotrack.config import (
    ALIASES,
    ConfigError,
    TrackerConfig,
    load_config,
    parse_assignments,
    parse_config_text,
)


def test_defaults():
    c = TrackerConfig()
    assert (c.high_score_threshold, c.low_score_threshold, c.new_track_threshold) == (0.6, 0.1, 0.8)
    assert (c.covered_ratio_threshold, c.confidence_threshold, c.prune_patience) == (0.7, 2.0, 3)
    assert (c.stage1_min_niou, c.stage2_min_niou) == (0.0, 0.4)
    assert c.camera_motion_removal and c.occlusion_handling and c.low_score_stage


def test_short_names_map_to_fields():
    c = TrackerConfig().with_overrides({"L_h": "0.7", "L_l": "0.2", "L_n": "0.9", "L_cr": "0.5", "L_c": "3"})
    assert (c.high_score_threshold, c.low_score_threshold, c.new_track_threshold) == (0.7, 0.2, 0.9)
    assert (c.covered_ratio_threshold, c.confidence_threshold) == (0.5, 3.0)
    assert set(ALIASES.values()) <= set(c.to_dict())


@pytest.mark.parametrize("raw, value", [("true", True), ("ON", True), ("1", True), ("no", False), ("False", False)])
def test_boolean_spellings(raw, value):
    assert TrackerConfig().with_overrides({"occlusion_handling": raw}).occlusion_handling is value


@pytest.mark.parametrize("overrides, fragment", [
    ({"bogus": "1"}, "unknown config key"),
    ({"L_h": "high"}, "bad value"),
    ({"prune_patience": "2.5"}, "bad value"),
    ({"occlusion_handling": "maybe"}, "bad value"),
    ({"L_h": "0.05"}, "low_score_threshold < high_score_threshold"),
    ({"L_h": "1.5"}, "high_score_threshold <= 1"),
    ({"L_l": "-0.1", "L_h": "0.5"}, ">= 0"),
    ({"L_cr": "1.0"}, "covered_ratio_threshold"),
    ({"L_c": "0"}, "confidence_threshold"),
    ({"prune_patience": "0"}, "prune_patience"),
    ({"shift_trim_fraction": "0.5"}, "shift_trim_fraction"),
    ({"std_aspect": "0"}, "std_aspect"),
])
def test_invalid_values(overrides, fragment):
    with pytest.raises(ConfigError, match=fragment):
        TrackerConfig().with_overrides(overrides)


def test_text_round_trip():
    c = TrackerConfig(prune_patience=5, carry_unmatched_detections=True, stage2_min_niou=0.35)
    assert TrackerConfig().with_overrides(parse_config_text(c.dumps())) == c


def test_config_text_comments_and_errors():
    assert parse_config_text("# thresholds\nL_h = 0.7  # stricter\n\n") == {"L_h": "0.7"}
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("L_h = 0.7\nL_l 0.2\n")


def test_assignments():
    assert parse_assignments(["L_h=0.7", " prune_patience = 4 "]) == {"L_h": "0.7", "prune_patience": "4"}
    assert parse_assignments(["a=b=c"]) == {"a": "b=c"}
    with pytest.raises(ConfigError):
        parse_assignments(["L_h"])


def test_file_then_overrides(tmp_path):
    p = tmp_path / "cfg.txt"
    p.write_text("L_h = 0.7\nprune_patience = 5\n")
    c = load_config(p, {"prune_patience": "2"})
    assert (c.high_score_threshold, c.prune_patience) == (0.7, 2)
    assert load_config() == TrackerConfig()
    # an alias and the full name for the same field: the later source wins
    assert load_config(p, {"high_score_threshold": "0.65"}).high_score_threshold == 0.65
