import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eprnoise.config import (
    bundled_configs,
    dump_config,
    parse_config,
    parse_config_text,
    parse_number,
)
from eprnoise.errors import ConfigError


def test_bundled_configs_present():
    assert {"fig2_left", "fig2_middle", "fig2_right", "vacuum"} <= set(bundled_configs())


@pytest.mark.parametrize("name", ["fig2_left", "fig2_middle", "fig2_right", "vacuum"])
def test_dump_parse_round_trip(name):
    cfg = parse_config(bundled_configs()[name])
    assert parse_config_text(dump_config(cfg)) == cfg
    assert dump_config(parse_config_text(dump_config(cfg))) == dump_config(cfg)


def test_fig2_middle_values():
    cfg = parse_config(bundled_configs()["fig2_middle"])
    assert cfg.cavity.enabled
    assert (cfg.cavity.detuning_signal_hwhm, cfg.cavity.detuning_idler_hwhm) == (0.0, 1.0)
    assert cfg.opo.pump_phase_rad == math.pi
    assert cfg.readout.angle_stop_rad == 2 * math.pi
    assert cfg.grid.to_grid().count == 200


def test_power_form_gives_pump_parameter():
    cfg = parse_config_text("opo.pump_power_mw = 16.575\nopo.threshold_mw = 66.3\n")
    assert cfg.opo.pump_parameter() == pytest.approx(0.5)


def test_above_threshold_rejected():
    with pytest.raises(ConfigError, match="opo.x"):
        parse_config_text("opo.x = 1.2\n")
    with pytest.raises(ConfigError, match="opo.pump_power_mw"):
        parse_config_text("opo.pump_power_mw = 70\nopo.threshold_mw = 66.3\n")


def test_x_and_power_are_exclusive():
    with pytest.raises(ConfigError, match="mutually exclusive"):
        parse_config_text("opo.x = 0.3\nopo.pump_power_mw = 10\nopo.threshold_mw = 66.3\n")


def test_unknown_key_hint_and_line():
    with pytest.raises(ConfigError) as info:
        parse_config_text("opo.x = 0.3\n\ncavity.hwhm = 1e6\n", "exp.cfg")
    msg = str(info.value)
    assert "exp.cfg" in msg and "line 3" in msg and "cavity.hwhm_hz" in msg


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("opo.x = 0.3\nopo.x = 0.4\n")


def test_malformed_line_and_values():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("opo.x 0.3\n")
    with pytest.raises(ConfigError, match="true or false"):
        parse_config_text("cavity.enabled = yes\n")
    with pytest.raises(ConfigError, match="integer"):
        parse_config_text("grid.points = 10.5\n")
    with pytest.raises(ConfigError, match="readout.combiner"):
        parse_config_text("readout.combiner = optimal\n")
    with pytest.raises(ConfigError, match="losses"):
        parse_config_text("losses.signal_efficiency = 1.5\n")
    with pytest.raises(ConfigError, match="grid"):
        parse_config_text("grid.f_min_hz = 1e9\n")


def test_comments_and_quoted_strings():
    cfg = parse_config_text('meta.description = "a # b"  # trailing\nopo.x = 0.1 # c\n')
    assert cfg.meta.description == "a # b"
    assert cfg.opo.x == 0.1


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config("/nonexistent/experiment.cfg")


def test_parse_number_expressions():
    assert parse_number("pi/2") == math.pi / 2
    assert parse_number("-2*pi") == -2 * math.pi
    assert parse_number("12.1e6") == 12.1e6
    assert parse_number("2**3 + 1") == 9
    for bad in ["__import__('os')", "pi(", "1/0", "e", "1e999"]:
        with pytest.raises(ValueError):
            parse_number(bad)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_parse_number_round_trips_repr(v):
    assert parse_number(repr(v)) == v
