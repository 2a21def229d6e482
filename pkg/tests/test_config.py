import math
from pathlib import Path

import pytest

from pathforge.config import (
    SessionConfig,
    apply_overrides,
    config_to_text,
    load_config,
    parse_config_text,
)
from pathforge.errors import ConfigError

GOLDEN = Path(__file__).parent / "data" / "golden.cfg"


def test_defaults_match_golden_config():
    # the protocol constants are pinned; regenerating this file must be a
    # conscious act
    assert load_config(GOLDEN) == SessionConfig()


def test_defaults_are_protocol_values():
    cfg = SessionConfig()
    assert cfg.fps == 25.0
    assert cfg.lowess_half_window == 10
    assert cfg.rrm_schedule == (3, 2, 1, 1)
    assert cfg.arrest_min_duration_s == 0.2
    assert cfg.boundary_sectors == 720
    assert cfg.boundary_width_rad == pytest.approx(2 * math.pi / 360, abs=0)
    assert cfg.boundary_quantile == 0.95
    assert cfg.boundary_bandwidth == 0.15
    assert cfg.sim_outlier_rate == 0.04
    assert cfg.sim_shifts_cm == (5.0, 10.0, 15.0)
    assert cfg.sim_reps == 50


def test_round_trip_text():
    cfg = SessionConfig(fps=30.0, rrm_schedule=(5, 3, 1), sim_sigma_cm=1.0)
    assert parse_config_text(config_to_text(cfg)) == cfg


def test_parse_comments_and_blank_lines():
    cfg = parse_config_text("# comment\n\nfps=30\nlowess.half_window=12\n")
    assert cfg.fps == 30.0
    assert cfg.lowess_half_window == 12


def test_unknown_key_rejected_with_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("fps=30\nbogus.key=1\n")


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("lowess.half_window=ten\n")
    with pytest.raises(ConfigError):
        parse_config_text("rrm.schedule=\n")


def test_missing_equals_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("fps 30\n")


def test_overrides():
    cfg = apply_overrides(SessionConfig(), ["seed=7", "sim.sigma_cm=1"])
    assert cfg.seed == 7
    assert cfg.sim_sigma_cm == 1.0
    with pytest.raises(ConfigError):
        apply_overrides(SessionConfig(), ["nope=1"])


def test_param_builders():
    cfg = SessionConfig(lowess_half_window=8, sim_sigma_cm=0.4)
    analysis = cfg.analysis_params()
    assert analysis.half_window == 8
    sim = cfg.sim_params(stationary=True)
    assert sim.sigma == 0.4 and sim.stationary
    kwargs = cfg.boundary_kwargs()
    assert kwargs["sectors"] == 720 and kwargs["quantile"] == 0.95
