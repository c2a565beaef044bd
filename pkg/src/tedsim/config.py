"""Device configuration: calibrated defaults, file loading, sanity checks.

The numeric defaults are calibration values fitted so the closed loop
reproduces the measured behavior of the real unit (response times,
ramp slew around 2.25 degC/s, battery life, hot-side saturation), not
direct physical measurements of any one part.

Config files are flat ``key = value`` lines; ``#`` starts a comment.
Keys match the DeviceConfig field names, e.g.::

    r_sink_k_per_w = 2.5
    control_hz = 100
    device_name = StimulHeat-SIM

Unknown keys and malformed values are errors: a typo in a config file
must not silently fall back to a default.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .control import ControlMode, Level, PidGains, level_setpoint
from .driver import DriverParams
from .ted import (NetworkParams, TedParams, c_to_k, max_cooling_heat,
                  resting_core_temp_k, resting_state)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceConfig:
    # Thermoelectric module
    seebeck_v_per_k: float = 0.028
    resistance_ohm: float = 5.8
    theta_m_k_per_w: float = 12.0

    # Thermal network (t_core is derived from t_skin_rest_c, see net())
    c_abs_j_per_k: float = 2.0
    c_emit_j_per_k: float = 30.0
    c_skin_j_per_k: float = 2.5
    r_contact_k_per_w: float = 4.0
    r_body_k_per_w: float = 0.6
    r_sink_k_per_w: float = 2.5
    t_ambient_c: float = 23.0
    t_skin_rest_c: float = 31.0

    # Driver stage
    dac_bits: int = 8
    i_max_a: float = 0.6
    supply_v: float = 3.7

    # Temperature loop gains [A/K]; i_limit clamps the integral term
    pid_kp: float = 4.0
    pid_ki: float = 1.5
    pid_kd: float = 0.0
    pid_i_limit_a: float = 0.3

    # Timing
    sim_dt_s: float = 0.001
    control_hz: int = 100
    telemetry_hz: int = 10

    # Battery
    battery_mah: float = 850.0
    battery_volts: float = 3.7
    quiescent_w: float = 0.05

    # Sensor noise (standard deviation in kelvin; 0 disables)
    sensor_noise_std_k: float = 0.0
    noise_seed: int = 0

    # Identity and transports
    device_name: str = "StimulHeat-SIM"
    serial: int = 4660
    tcp_port: int = 7453
    ws_port: int = 7454

    def ted(self) -> TedParams:
        return TedParams(self.seebeck_v_per_k, self.resistance_ohm,
                         self.theta_m_k_per_w)

    def net(self) -> NetworkParams:
        t_core = resting_core_temp_k(
            self.ted(), self.r_contact_k_per_w, self.r_body_k_per_w,
            self.r_sink_k_per_w, c_to_k(self.t_skin_rest_c),
            c_to_k(self.t_ambient_c))
        return NetworkParams(
            c_abs_j_per_k=self.c_abs_j_per_k,
            c_emit_j_per_k=self.c_emit_j_per_k,
            c_skin_j_per_k=self.c_skin_j_per_k,
            r_contact_k_per_w=self.r_contact_k_per_w,
            r_body_k_per_w=self.r_body_k_per_w,
            r_sink_k_per_w=self.r_sink_k_per_w,
            t_core_k=t_core,
            t_ambient_k=c_to_k(self.t_ambient_c))

    def driver(self) -> DriverParams:
        return DriverParams(self.dac_bits, self.i_max_a, self.supply_v)

    def pid_gains(self) -> PidGains:
        return PidGains(self.pid_kp, self.pid_ki, self.pid_kd,
                        self.pid_i_limit_a)

    def steps_per_tick(self) -> int:
        return round(1.0 / (self.sim_dt_s * self.control_hz))

    def ticks_per_telemetry(self) -> int:
        return self.control_hz // self.telemetry_hz


def validate(cfg: DeviceConfig) -> DeviceConfig:
    """Feasibility check run at startup; raises ConfigError when the
    configuration cannot support the device's command envelope."""
    if not 0.0 < cfg.sim_dt_s <= 0.01:
        raise ConfigError(f"sim_dt_s {cfg.sim_dt_s} outside (0, 0.01]")
    steps = 1.0 / (cfg.sim_dt_s * cfg.control_hz)
    if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
        raise ConfigError(
            f"control_hz {cfg.control_hz} must divide the {cfg.sim_dt_s} s "
            "step rate into whole steps per tick")
    if cfg.control_hz % cfg.telemetry_hz != 0:
        raise ConfigError(
            f"telemetry_hz {cfg.telemetry_hz} must divide control_hz")
    if cfg.dac_bits < 4 or cfg.dac_bits > 16:
        raise ConfigError(f"dac_bits {cfg.dac_bits} outside 4..16")
    for name in ("c_abs_j_per_k", "c_emit_j_per_k", "c_skin_j_per_k",
                 "r_contact_k_per_w", "r_body_k_per_w", "r_sink_k_per_w",
                 "resistance_ohm", "theta_m_k_per_w", "seebeck_v_per_k",
                 "i_max_a", "supply_v", "battery_mah", "battery_volts"):
        if getattr(cfg, name) <= 0.0:
            raise ConfigError(f"{name} must be positive")
    if cfg.quiescent_w < 0.0 or cfg.sensor_noise_std_k < 0.0:
        raise ConfigError("quiescent_w and sensor_noise_std_k must be >= 0")

    # The strongest named levels must be deliverable from rest, with
    # the supply rail able to push full current into the resting module.
    ted, net, drv = cfg.ted(), cfg.net(), cfg.driver()
    rest = resting_state(ted, net)
    want_cool = level_setpoint(ControlMode.HEAT_FLOW, Level.VERY_COLD)
    can_cool = max_cooling_heat(ted, rest.t_abs_k, rest.t_emit_k,
                                drv.i_max_a)
    if can_cool < want_cool:
        raise ConfigError(
            f"max cooling {can_cool:.2f} W at rest cannot reach the "
            f"{want_cool:.1f} W level")
    v_full = drv.i_max_a * ted.resistance_ohm
    if v_full > drv.supply_v:
        raise ConfigError(
            f"supply {drv.supply_v} V cannot drive i_max into "
            f"{ted.resistance_ohm} ohm ({v_full:.2f} V needed)")
    return cfg


def _parse_value(field_type: type, raw: str, key: str):
    raw = raw.strip()
    try:
        if field_type is bool:
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if field_type is int:
            return int(raw, 0)
        if field_type is float:
            return float(raw)
        return raw
    except ValueError as err:
        raise ConfigError(f"bad value for {key}: {raw!r}") from err


def load_config(path: str | Path) -> DeviceConfig:
    """Parse a key = value config file and validate the result."""
    by_name = {f.name: f.type for f in fields(DeviceConfig)}
    # dataclass field types arrive as strings under future annotations
    type_map = {"float": float, "int": int, "bool": bool, "str": str}
    overrides = {}
    for lineno, line in enumerate(
            Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in by_name:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        ftype = type_map.get(str(by_name[key]), str)
        overrides[key] = _parse_value(ftype, raw, key)
    return validate(replace(DeviceConfig(), **overrides))
