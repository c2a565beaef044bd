from __future__ import annotations

from pathlib import Path

import pytest

from tedsim.config import ConfigError, DeviceConfig, load_config, validate

SAMPLE = Path(__file__).parent.parent / "device.conf"


def write(tmp_path, text: str) -> Path:
    path = tmp_path / "test.conf"
    path.write_text(text)
    return path


def test_shipped_sample_equals_defaults():
    # device.conf documents every key at its default; loading it must
    # produce exactly the built-in configuration.
    assert load_config(SAMPLE) == DeviceConfig()


def test_overrides_and_hex_ints(tmp_path):
    cfg = load_config(write(tmp_path, """
        # comment line
        r_sink_k_per_w = 3.0   # inline comment
        serial = 0xBEEF
        device_name = bench-rig-2
        telemetry_hz = 20
    """))
    assert cfg.r_sink_k_per_w == 3.0
    assert cfg.serial == 0xBEEF
    assert cfg.device_name == "bench-rig-2"
    assert cfg.telemetry_hz == 20


def test_unknown_key_names_file_and_line(tmp_path):
    path = write(tmp_path, "r_sink_k_per_w = 3.0\nbogus_key = 1\n")
    with pytest.raises(ConfigError, match=r":2: unknown key 'bogus_key'"):
        load_config(path)


def test_malformed_value_rejected(tmp_path):
    with pytest.raises(ConfigError, match="control_hz"):
        load_config(write(tmp_path, "control_hz = often\n"))
    with pytest.raises(ConfigError, match="expected key = value"):
        load_config(write(tmp_path, "just some words\n"))


@pytest.mark.parametrize("line,complaint", [
    ("telemetry_hz = 30", "telemetry_hz"),       # does not divide 100
    ("sim_dt_s = 0.02", "sim_dt_s"),             # too coarse for 100 Hz
    ("sim_dt_s = 0.003", "whole steps"),         # 100 Hz not a multiple
    ("supply_v = 1.0", "supply"),                # cannot push i_max
    ("battery_mah = -5", "positive"),
])
def test_infeasible_configs_rejected(tmp_path, line, complaint):
    with pytest.raises(ConfigError, match=complaint):
        load_config(write(tmp_path, line + "\n"))


def test_validate_passes_defaults_through():
    cfg = DeviceConfig()
    assert validate(cfg) is cfg
