"""Cross-language protocol test vectors.

Emits a JSON document pairing message descriptions with their exact
frame bytes in hex, so a second codec implementation (the browser
panel) can prove byte-for-byte agreement without importing this
package.  Regenerate with::

    python3 -m tedsim.vectors shared/protocol-vectors.json

The committed file is covered by a test that regenerates and compares,
so it cannot go stale against the codec.
"""

from __future__ import annotations

import dataclasses
import json
import sys

from . import protocol as p

# Every command the control panel can emit, plus range boundaries.
_COMMANDS = [
    ("enable-on", p.Enable(True)),
    ("enable-off", p.Enable(False)),
    ("mode-off", p.SetMode(0)),
    ("mode-heat", p.SetMode(1)),
    ("mode-temp", p.SetMode(2)),
    ("level-very-hot", p.SetLevel(0)),
    ("level-hot", p.SetLevel(1)),
    ("level-neutral", p.SetLevel(2)),
    ("level-cold", p.SetLevel(3)),
    ("level-very-cold", p.SetLevel(4)),
    ("heat-hot-2w", p.SetHeatSetpoint(-2000)),
    ("heat-cool-2w", p.SetHeatSetpoint(2000)),
    ("heat-min", p.SetHeatSetpoint(-9000)),
    ("heat-max", p.SetHeatSetpoint(9000)),
    ("heat-zero", p.SetHeatSetpoint(0)),
    ("temp-min", p.SetTempSetpoint(1500)),
    ("temp-max", p.SetTempSetpoint(4200)),
    ("temp-rest", p.SetTempSetpoint(3100)),
    ("temp-38c", p.SetTempSetpoint(3800)),
    ("pid-default", p.SetPid(4_000_000, 1_500_000, 0, 300_000)),
    ("get-status", p.GetStatus()),
]

_REPLIES = [
    ("ack-enable", p.Ack(p.MSG_ENABLE, b"\x01")),
    ("ack-heat-setpoint",
     p.Ack(p.MSG_SET_HEAT_SETPOINT, p.payload_of(p.SetHeatSetpoint(2000)))),
    ("reject-temp-range",
     p.Reject(p.MSG_SET_TEMP_SETPOINT, p.REJECT_RANGE, 1500, 4200)),
    ("reject-heat-range",
     p.Reject(p.MSG_SET_HEAT_SETPOINT, p.REJECT_RANGE, -9000, 9000)),
    ("reject-unknown", p.Reject(0x6E, p.REJECT_UNKNOWN, 0, 0)),
    ("reject-state", p.Reject(p.MSG_SET_LEVEL, p.REJECT_STATE, 0, 0)),
    ("device-info", p.DeviceInfo(0x1234, "StimulHeat-SIM")),
    ("telemetry-heat-2w", p.Telemetry(
        timestamp_ms=12_500, t_abs_cc=2950, t_emit_cc=3410,
        t_contact_cc=3055, current_ma=412, heat_mw=2000,
        setpoint_raw=2000, mode=1, flags=p.FLAG_ENABLED, battery_pct=97)),
    ("telemetry-saturated-cooling", p.Telemetry(
        timestamp_ms=180_000, t_abs_cc=1628, t_emit_cc=4105,
        t_contact_cc=2240, current_ma=600, heat_mw=2890,
        setpoint_raw=4000, mode=1,
        flags=p.FLAG_ENABLED | p.FLAG_SATURATED | p.FLAG_COMPLIANCE,
        battery_pct=42)),
    ("telemetry-idle", p.Telemetry(
        timestamp_ms=100, t_abs_cc=3100, t_emit_cc=3100, t_contact_cc=3100,
        current_ma=0, heat_mw=0, setpoint_raw=0, mode=0, flags=0,
        battery_pct=100)),
]


def _invalid_cases() -> list[dict]:
    good = p.encode(p.SetHeatSetpoint(-2000))
    bad_crc = bytearray(good)
    bad_crc[-1] ^= 0xFF
    bad_magic = b"\x99" + good[1:]
    unknown = p.build_frame(0x6E, b"\x01\x02")
    temp_range = p.build_frame(
        p.MSG_SET_TEMP_SETPOINT, (5000).to_bytes(4, "little", signed=True))
    heat_range = p.build_frame(
        p.MSG_SET_HEAT_SETPOINT, (-9500).to_bytes(4, "little", signed=True))
    short = p.build_frame(p.MSG_ENABLE, b"")
    return [
        {"name": "bad-crc", "hex": bytes(bad_crc).hex(), "error": "BadCrc"},
        {"name": "bad-magic", "hex": bad_magic.hex(), "error": "BadMagic"},
        {"name": "unknown-type", "hex": unknown.hex(),
         "error": "UnknownType"},
        {"name": "temp-too-high", "hex": temp_range.hex(),
         "error": "RangeViolation", "minimum": 1500, "maximum": 4200},
        {"name": "heat-too-low", "hex": heat_range.hex(),
         "error": "RangeViolation", "minimum": -9000, "maximum": 9000},
        {"name": "enable-no-payload", "hex": short.hex(),
         "error": "BadLength"},
    ]


def _fields(msg) -> dict:
    out = dataclasses.asdict(msg)
    if isinstance(msg, p.Ack):
        out["echo"] = msg.echo.hex()
    return out


def _entry(name: str, msg) -> dict:
    return {"name": name, "type": type(msg).__name__,
            "fields": _fields(msg), "hex": p.encode(msg).hex()}


def generate() -> dict:
    return {
        "crc": {"check_input_ascii": "123456789",
                "check_value": p.crc16(b"123456789")},
        "commands": [_entry(name, msg) for name, msg in _COMMANDS],
        "replies": [_entry(name, msg) for name, msg in _REPLIES],
        "invalid": _invalid_cases(),
    }


def render() -> str:
    return json.dumps(generate(), indent=2) + "\n"


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: python3 -m tedsim.vectors OUTPUT.json",
              file=sys.stderr)
        return 2
    with open(args[0], "w") as fh:
        fh.write(render())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
