"""Simulated device: the firmware tick loop around the thermal plant.

Every control period the device samples its temperature sensors, runs
the active control loop on those readings, pushes the request through
the DAC and compliance stage, advances the plant, meters the battery,
and emits one trace record.  Commands mutate state only between ticks,
so a record is never computed from a mixture of old and new settings.

The full-rate records double as the telemetry source: the service
layer decimates them down to the wire telemetry cadence, and
run_scenario keeps all of them for offline metrics.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Optional, Union

from . import protocol
from .config import DeviceConfig, validate
from .control import (ControlMode, Level, PidGains, PidState,
                      controller_tick, level_setpoint)
from .driver import DriveOutput, compliance_check, quantize
from .ted import (c_to_k, electrical_power, heat_absorbed, k_to_c,
                  plant_step, resting_state, with_time)

TRACE_COLUMNS = ("time_s", "t_abs_c", "t_emit_c", "t_skin_c", "current_a",
                 "heat_w", "setpoint", "mode", "saturated", "battery_pct")
TRACE_HEADER = ",".join(TRACE_COLUMNS)


@dataclass(frozen=True)
class TelemetryRecord:
    """State of the device at the end of one control tick.

    setpoint is in the active mode's user units: watts in heat-flow
    mode, degrees Celsius in temperature mode, 0 when off.
    """

    time_s: float
    t_abs_c: float
    t_emit_c: float
    t_skin_c: float
    current_a: float
    heat_w: float
    setpoint: float
    mode: int
    saturated: bool
    battery_pct: int
    compliance_limited: bool = False
    enabled: bool = True


class TraceFormatError(ValueError):
    """File being read back does not look like a trace."""


def _format_row(r: TelemetryRecord) -> str:
    return (f"{r.time_s:.2f},{r.t_abs_c:.4f},{r.t_emit_c:.4f},"
            f"{r.t_skin_c:.4f},{r.current_a:.5f},{r.heat_w:.4f},"
            f"{r.setpoint:.2f},{r.mode:d},{int(r.saturated):d},"
            f"{r.battery_pct:d}")


def _parse_row(line: str, lineno: int) -> TelemetryRecord:
    parts = line.split(",")
    if len(parts) != len(TRACE_COLUMNS):
        raise TraceFormatError(
            f"line {lineno}: {len(parts)} fields, want {len(TRACE_COLUMNS)}")
    try:
        return TelemetryRecord(
            time_s=float(parts[0]), t_abs_c=float(parts[1]),
            t_emit_c=float(parts[2]), t_skin_c=float(parts[3]),
            current_a=float(parts[4]), heat_w=float(parts[5]),
            setpoint=float(parts[6]), mode=int(parts[7]),
            saturated=bool(int(parts[8])), battery_pct=int(parts[9]))
    except ValueError as err:
        raise TraceFormatError(f"line {lineno}: {err}") from None


class Trace:
    """Ordered telemetry records with fixed-format CSV round-tripping.

    The text form is deterministic: the same records always serialize
    to the same bytes.
    """

    def __init__(self, records: Optional[list] = None):
        self.records: list[TelemetryRecord] = list(records or [])

    def append(self, record: TelemetryRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TelemetryRecord]:
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    def column(self, name: str) -> list:
        if name not in TRACE_COLUMNS:
            raise KeyError(name)
        return [getattr(r, name) for r in self.records]

    def to_csv_text(self) -> str:
        lines = [TRACE_HEADER]
        lines.extend(_format_row(r) for r in self.records)
        return "\n".join(lines) + "\n"

    def to_csv(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8")

    def to_jsonl_text(self) -> str:
        out = []
        for r in self.records:
            row = _format_row(r).split(",")
            out.append(json.dumps(dict(zip(TRACE_COLUMNS, (
                float(row[0]), float(row[1]), float(row[2]), float(row[3]),
                float(row[4]), float(row[5]), float(row[6]), int(row[7]),
                int(row[8]), int(row[9]))))))
        return "\n".join(out) + ("\n" if out else "")

    @classmethod
    def from_csv_text(cls, text: str) -> "Trace":
        lines = text.splitlines()
        if not lines or lines[0].strip() != TRACE_HEADER:
            raise TraceFormatError(
                f"bad or missing header, want '{TRACE_HEADER}'")
        records = [_parse_row(line, i + 2)
                   for i, line in enumerate(lines[1:]) if line.strip()]
        return cls(records)

    def to_jsonl(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_jsonl_text(), encoding="utf-8")

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Trace":
        return cls.from_csv_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_jsonl(cls, path: Union[str, Path]) -> "Trace":
        return cls.from_jsonl_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "Trace":
        """Load by extension: .jsonl as JSON lines, anything else as CSV."""
        p = Path(path)
        if p.suffix == ".jsonl":
            return cls.from_jsonl(p)
        return cls.from_csv(p)

    @classmethod
    def from_jsonl_text(cls, text: str) -> "Trace":
        records = []
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                records.append(TelemetryRecord(
                    time_s=float(row["time_s"]),
                    t_abs_c=float(row["t_abs_c"]),
                    t_emit_c=float(row["t_emit_c"]),
                    t_skin_c=float(row["t_skin_c"]),
                    current_a=float(row["current_a"]),
                    heat_w=float(row["heat_w"]),
                    setpoint=float(row["setpoint"]),
                    mode=int(row["mode"]),
                    saturated=bool(row["saturated"]),
                    battery_pct=int(row["battery_pct"])))
            except (json.JSONDecodeError, KeyError, TypeError,
                    ValueError) as err:
                raise TraceFormatError(f"line {i + 1}: {err}") from None
        return cls(records)


def to_telemetry(record: TelemetryRecord) -> protocol.Telemetry:
    """Wire telemetry message for a trace record (integer field scaling)."""
    if record.mode == ControlMode.TEMPERATURE:
        setpoint_raw = round(record.setpoint * 100)
    elif record.mode == ControlMode.HEAT_FLOW:
        setpoint_raw = round(record.setpoint * 1000)
    else:
        setpoint_raw = 0
    flags = 0
    if record.saturated:
        flags |= protocol.FLAG_SATURATED
    if record.compliance_limited:
        flags |= protocol.FLAG_COMPLIANCE
    if record.enabled:
        flags |= protocol.FLAG_ENABLED
    return protocol.Telemetry(
        timestamp_ms=round(record.time_s * 1000),
        t_abs_cc=round(record.t_abs_c * 100),
        t_emit_cc=round(record.t_emit_c * 100),
        t_contact_cc=round(record.t_skin_c * 100),
        current_ma=round(record.current_a * 1000),
        heat_mw=round(record.heat_w * 1000),
        setpoint_raw=setpoint_raw,
        mode=record.mode,
        flags=flags,
        battery_pct=record.battery_pct)


def from_telemetry(msg: protocol.Telemetry) -> TelemetryRecord:
    """Trace record from a wire telemetry message (to_telemetry inverse).

    Exact up to the wire's fixed-point quantization.
    """
    if msg.mode == ControlMode.TEMPERATURE:
        setpoint = msg.setpoint_raw / 100.0
    elif msg.mode == ControlMode.HEAT_FLOW:
        setpoint = msg.setpoint_raw / 1000.0
    else:
        setpoint = 0.0
    return TelemetryRecord(
        time_s=msg.timestamp_ms / 1000.0,
        t_abs_c=msg.t_abs_cc / 100.0,
        t_emit_c=msg.t_emit_cc / 100.0,
        t_skin_c=msg.t_contact_cc / 100.0,
        current_a=msg.current_ma / 1000.0,
        heat_w=msg.heat_mw / 1000.0,
        setpoint=setpoint,
        mode=msg.mode,
        saturated=bool(msg.flags & protocol.FLAG_SATURATED),
        battery_pct=msg.battery_pct,
        compliance_limited=bool(msg.flags & protocol.FLAG_COMPLIANCE),
        enabled=bool(msg.flags & protocol.FLAG_ENABLED))


@dataclass(frozen=True)
class BatteryState:
    """Remaining charge plus the pack constants needed to drain it."""

    charge_mah: float
    capacity_mah: float
    volts: float

    @property
    def percent(self) -> int:
        frac = self.charge_mah / self.capacity_mah
        return max(0, min(100, round(100.0 * frac)))

    @property
    def empty(self) -> bool:
        return self.charge_mah <= 0.0


def step_battery(battery: BatteryState, power_w: float,
                 dt_s: float) -> BatteryState:
    """Drain charge by a power draw over dt_s; charge floors at zero.

    Draw current is power divided by pack voltage: a constant 2.22 W
    load takes 600 mAh out of a 3.7 V pack in exactly one hour.
    """
    if power_w < 0.0:
        raise ValueError(f"power_w {power_w} is negative")
    drawn_mah = 1000.0 * power_w / battery.volts * (dt_s / 3600.0)
    return replace(battery, charge_mah=max(0.0, battery.charge_mah
                                           - drawn_mah))


class Device:
    """One simulated unit: plant, controller, output stage, battery.

    apply_command() handles decoded command messages and answers with
    Ack, Reject, or DeviceInfo exactly as the real unit would; tick()
    advances one control period and returns the trace record for it.
    Callers must not apply commands while a tick is in flight.
    """

    def __init__(self, config: Optional[DeviceConfig] = None):
        self.config = validate(config or DeviceConfig())
        cfg = self.config
        self._ted = cfg.ted()
        self._net = cfg.net()
        self._driver = cfg.driver()
        self._gains = cfg.pid_gains()
        self._state = resting_state(self._ted, self._net)
        self._pid = PidState()
        self._rng = random.Random(cfg.noise_seed)
        self._tick_dt = 1.0 / cfg.control_hz
        self._steps = cfg.steps_per_tick()
        self._ticks = 0
        self._battery = BatteryState(cfg.battery_mah, cfg.battery_mah,
                                     cfg.battery_volts)
        self.enabled = False
        self.mode = ControlMode.OFF
        self._setpoints = {ControlMode.HEAT_FLOW: 0.0,
                           ControlMode.TEMPERATURE: 35.0}
        self._sensed = self._sense()

    # -- readout -----------------------------------------------------

    @property
    def time_s(self) -> float:
        return self._ticks / self.config.control_hz

    @property
    def battery(self) -> BatteryState:
        return self._battery

    @property
    def battery_pct(self) -> int:
        return self._battery.percent

    @property
    def battery_empty(self) -> bool:
        return self._battery.empty

    def setpoint(self, mode: ControlMode) -> float:
        return self._setpoints[ControlMode(mode)]

    @property
    def gains(self) -> PidGains:
        return self._gains

    # -- command handling ---------------------------------------------

    def _ack(self, msg) -> protocol.Ack:
        return protocol.Ack(protocol.message_type(msg),
                            protocol.payload_of(msg))

    def _reject(self, msg, code: int, lo: int = 0,
                hi: int = 0) -> protocol.Reject:
        return protocol.Reject(protocol.message_type(msg), code, lo, hi)

    def apply_command(self, msg):
        """Apply one decoded command; returns the reply message.

        Range faults answer Reject(RANGE) with the legal bounds, state
        faults (level with no mode selected, enabling on a dead
        battery) answer Reject(STATE).  State is untouched on any
        reject.
        """
        if isinstance(msg, protocol.Enable):
            if msg.on and self.battery_empty:
                return self._reject(msg, protocol.REJECT_STATE)
            if bool(msg.on) != self.enabled:
                self._pid = PidState()
            self.enabled = bool(msg.on)
            return self._ack(msg)

        if isinstance(msg, protocol.SetMode):
            if not 0 <= msg.mode <= 2:
                return self._reject(msg, protocol.REJECT_RANGE, 0, 2)
            mode = ControlMode(msg.mode)
            if mode != self.mode:
                self._pid = PidState()
            self.mode = mode
            return self._ack(msg)

        if isinstance(msg, protocol.SetLevel):
            if not 0 <= msg.level <= 4:
                return self._reject(msg, protocol.REJECT_RANGE, 0, 4)
            if self.mode == ControlMode.OFF:
                return self._reject(msg, protocol.REJECT_STATE)
            self._setpoints[self.mode] = level_setpoint(self.mode,
                                                        Level(msg.level))
            return self._ack(msg)

        if isinstance(msg, protocol.SetHeatSetpoint):
            lo, hi = protocol.HEAT_SETPOINT_RANGE_MW
            if not lo <= msg.milliwatts <= hi:
                return self._reject(msg, protocol.REJECT_RANGE, lo, hi)
            self._setpoints[ControlMode.HEAT_FLOW] = msg.milliwatts / 1000.0
            return self._ack(msg)

        if isinstance(msg, protocol.SetTempSetpoint):
            lo, hi = protocol.TEMP_SETPOINT_RANGE_CC
            if not lo <= msg.centi_c <= hi:
                return self._reject(msg, protocol.REJECT_RANGE, lo, hi)
            self._setpoints[ControlMode.TEMPERATURE] = msg.centi_c / 100.0
            return self._ack(msg)

        if isinstance(msg, protocol.SetPid):
            if min(msg.kp_micro, msg.ki_micro, msg.kd_micro) < 0 \
                    or msg.i_limit_micro < 1:
                return self._reject(msg, protocol.REJECT_RANGE, 0,
                                    (1 << 31) - 1)
            self._gains = PidGains(
                kp=msg.kp_micro / protocol.PID_SCALE,
                ki=msg.ki_micro / protocol.PID_SCALE,
                kd=msg.kd_micro / protocol.PID_SCALE,
                i_limit_a=msg.i_limit_micro / protocol.PID_SCALE)
            self._pid = PidState()
            return self._ack(msg)

        if isinstance(msg, protocol.GetStatus):
            return protocol.DeviceInfo(self.config.serial,
                                       self.config.device_name)

        # Reply-type messages are not commands.
        return self._reject(msg, protocol.REJECT_STATE)

    # -- tick loop -----------------------------------------------------

    def _sense(self) -> tuple:
        s, std = self._state, self.config.sensor_noise_std_k
        if std <= 0.0:
            return (s.t_abs_k, s.t_emit_k, s.t_skin_k)
        g = self._rng.gauss
        return (s.t_abs_k + g(0.0, std), s.t_emit_k + g(0.0, std),
                s.t_skin_k + g(0.0, std))

    def _controller_setpoint(self) -> float:
        if self.mode == ControlMode.TEMPERATURE:
            return c_to_k(self._setpoints[self.mode])
        if self.mode == ControlMode.HEAT_FLOW:
            return self._setpoints[self.mode]
        return 0.0

    def _meter_battery(self, current_a: float) -> None:
        if self._battery.empty:
            return
        # Module power at the true plate temperatures; generator-mode
        # recovery is not credited back to the pack.
        power_w = max(0.0, electrical_power(
            self._ted, self._state.t_abs_k, self._state.t_emit_k,
            current_a)) + self.config.quiescent_w
        self._battery = step_battery(self._battery, power_w, self._tick_dt)
        if self._battery.empty:
            self.enabled = False

    def tick(self) -> TelemetryRecord:
        """Advance one control period and return its trace record."""
        cfg = self.config
        ta, te, ts = self._sensed
        request, self._pid = controller_tick(
            self.mode, self.enabled, self._controller_setpoint(),
            ta, te, ts, self._pid, self._gains, self._ted,
            self._tick_dt, cfg.i_max_a)
        drive = quantize(self._driver, request.current_a)
        # The rail acts on the real plate temperatures, not the readings.
        drive = compliance_check(self._driver, self._ted, drive,
                                 self._state.t_abs_k, self._state.t_emit_k)
        for _ in range(self._steps):
            self._state = plant_step(self._state, drive.current_a,
                                     cfg.sim_dt_s, self._ted, self._net)
        self._ticks += 1
        # Integer tick count keeps long runs free of accumulated drift.
        self._state = with_time(self._state, self.time_s)
        self._meter_battery(drive.current_a)
        self._sensed = self._sense()
        return self._record(request.saturated, drive)

    def _record(self, saturated: bool,
                drive: DriveOutput) -> TelemetryRecord:
        ta, te, ts = self._sensed
        mode = self.mode
        setpoint = 0.0 if mode == ControlMode.OFF else self._setpoints[mode]
        return TelemetryRecord(
            time_s=self.time_s,
            t_abs_c=k_to_c(ta),
            t_emit_c=k_to_c(te),
            t_skin_c=k_to_c(ts),
            current_a=drive.current_a,
            heat_w=heat_absorbed(self._ted, ta, te, drive.current_a),
            setpoint=setpoint,
            mode=int(mode),
            saturated=saturated,
            battery_pct=self.battery_pct,
            compliance_limited=drive.compliance_limited,
            enabled=self.enabled)


# -- scenarios ---------------------------------------------------------


@dataclass(frozen=True)
class Phase:
    mode: ControlMode
    setpoint: float
    duration_s: float


@dataclass(frozen=True)
class Scenario:
    name: str
    phases: tuple

    @property
    def duration_s(self) -> float:
        return sum(p.duration_s for p in self.phases)


def _characterization(name: str, mode: ControlMode, baseline: float,
                      stimuli: tuple) -> Scenario:
    # 5 s baseline, then each stimulus for 5 s with a 5 s washout after.
    phases = [Phase(mode, baseline, 5.0)]
    for value in stimuli:
        phases.append(Phase(mode, float(value), 5.0))
        phases.append(Phase(mode, baseline, 5.0))
    return Scenario(name, tuple(phases))


# Graded stimulus sequence used for perception runs: +2 cool, 0, -2 warm.
USER_STUDY_SEQUENCE_W = (2, 0, -2, 2, -2, 2, 0, -2, 0,
                         -2, 2, 0, 2, -2, 2, 0, -2, 0)

SCENARIOS = {
    "charac-heat": _characterization(
        "charac-heat", ControlMode.HEAT_FLOW, 0.0, (-3, -2, -1, 1, 2, 3)),
    "charac-temp": _characterization(
        "charac-temp", ControlMode.TEMPERATURE, 31.0,
        (25, 27, 29, 34, 37, 40)),
    "user-study": Scenario("user-study", tuple(
        [Phase(ControlMode.HEAT_FLOW, 0.0, 5.0)]
        + [Phase(ControlMode.HEAT_FLOW, float(w), 5.0)
           for w in USER_STUDY_SEQUENCE_W])),
    "saturation": Scenario("saturation", (
        Phase(ControlMode.HEAT_FLOW, 4.0, 300.0),)),
}


def _expect_ack(reply) -> None:
    if not isinstance(reply, protocol.Ack):
        raise RuntimeError(f"scenario command rejected: {reply}")


def run_scenario(scenario: Union[Scenario, str],
                 config: Optional[DeviceConfig] = None,
                 device: Optional[Device] = None) -> Trace:
    """Run a scenario on a fresh (or given) device; full-rate trace out.

    Commands go through the same apply_command path as wire traffic, so
    a scenario exercises exactly what a remote client would.
    """
    if isinstance(scenario, str):
        try:
            scenario = SCENARIOS[scenario]
        except KeyError:
            names = ", ".join(sorted(SCENARIOS))
            raise ValueError(
                f"unknown scenario {scenario!r}; built-ins: {names}") \
                from None
    dev = device if device is not None else Device(config)
    _expect_ack(dev.apply_command(protocol.Enable(True)))
    trace = Trace()
    mode = None
    for phase in scenario.phases:
        if phase.mode != mode:
            _expect_ack(dev.apply_command(protocol.SetMode(int(phase.mode))))
            mode = phase.mode
        if mode == ControlMode.HEAT_FLOW:
            msg = protocol.SetHeatSetpoint(round(phase.setpoint * 1000))
        else:
            msg = protocol.SetTempSetpoint(round(phase.setpoint * 100))
        _expect_ack(dev.apply_command(msg))
        for _ in range(round(phase.duration_s * dev.config.control_hz)):
            trace.append(dev.tick())
    return trace
