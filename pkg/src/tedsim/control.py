"""Control loops that turn setpoints into drive current.

Two loops, one active at a time:

* heat-flow control inverts the pump equation analytically.  Target Q1
  gives a quadratic in I; the root of smallest magnitude is taken so
  the module never burns more Joule power than the setpoint needs.
  Unreachable setpoints saturate toward the best achievable current and
  are flagged.

* temperature control is a discrete PID on the absorbed-face (contact)
  temperature with conditional anti-windup: the integral only
  accumulates while the output is not saturated in the direction of the
  error.  Raising the contact temperature requires pumping heat into
  the skin, i.e. Q1 < 0, i.e. negative current, so the PID output is
  sign-flipped onto the drive.

Setpoints outside the legal command ranges are rejected, never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from .ted import TedParams, heat_absorbed, max_cooling_current


class ControlMode(IntEnum):
    OFF = 0
    HEAT_FLOW = 1
    TEMPERATURE = 2


class Level(IntEnum):
    VERY_HOT = 0
    HOT = 1
    NEUTRAL = 2
    COLD = 3
    VERY_COLD = 4


# Heat-flow levels in watts of Q1 drawn from the skin: hot sensations
# pump heat in (negative), cold sensations pump heat out (positive).
HEAT_LEVEL_W = {
    Level.VERY_HOT: -4.0,
    Level.HOT: -2.0,
    Level.NEUTRAL: 0.0,
    Level.COLD: 2.0,
    Level.VERY_COLD: 4.0,
}

# Temperature levels as contact-face setpoints in degrees Celsius.
TEMP_LEVEL_C = {
    Level.VERY_HOT: 41.0,
    Level.HOT: 38.0,
    Level.NEUTRAL: 35.0,
    Level.COLD: 32.0,
    Level.VERY_COLD: 29.0,
}

HEAT_SETPOINT_RANGE_W = (-9.0, 9.0)
TEMP_SETPOINT_RANGE_C = (15.0, 42.0)


class SetpointRangeError(ValueError):
    """Commanded setpoint is outside the legal range; carries the bounds."""

    def __init__(self, value: float, minimum: float, maximum: float):
        super().__init__(
            f"setpoint {value} outside [{minimum}, {maximum}]")
        self.value = value
        self.minimum = minimum
        self.maximum = maximum


def setpoint_range(mode: ControlMode) -> tuple[float, float]:
    if mode == ControlMode.HEAT_FLOW:
        return HEAT_SETPOINT_RANGE_W
    if mode == ControlMode.TEMPERATURE:
        return TEMP_SETPOINT_RANGE_C
    raise ValueError(f"mode {mode!r} takes no setpoint")


def validate_setpoint(mode: ControlMode, value: float) -> float:
    """Return value unchanged if legal for the mode, else raise.

    Out-of-range commands are rejected outright so a bad slider or a
    corrupted field can never silently drive the device at the range
    edge.
    """
    lo, hi = setpoint_range(mode)
    if not lo <= value <= hi or math.isnan(value):
        raise SetpointRangeError(value, lo, hi)
    return value


def level_setpoint(mode: ControlMode, level: Level) -> float:
    """Setpoint value a named level maps to in the given mode."""
    if mode == ControlMode.HEAT_FLOW:
        return HEAT_LEVEL_W[Level(level)]
    if mode == ControlMode.TEMPERATURE:
        return TEMP_LEVEL_C[Level(level)]
    raise ValueError(f"mode {mode!r} takes no level")


@dataclass(frozen=True)
class CurrentRequest:
    current_a: float
    saturated: bool


def current_for_heat(ted: TedParams, t_abs_k: float, t_emit_k: float,
                     q_set_w: float, i_max_a: float) -> CurrentRequest:
    """Drive current that makes the pump equation deliver q_set_w.

    Solves -(R/2) I^2 + alpha T_a I + (T_a - T_e)/theta_m = q for I and
    picks the smallest-magnitude root.  If the setpoint exceeds what
    any current can pump at this operating point, or the root exceeds
    i_max, the request saturates toward the vertex or the current bound
    and is flagged.
    """
    b = ted.seebeck_v_per_k * t_abs_k
    conduction = (t_abs_k - t_emit_k) / ted.theta_m_k_per_w
    c = conduction - q_set_w
    # a I^2 + b I + c = 0 with a = -R/2; D = b^2 + 2 R c.
    disc = b * b + 2.0 * ted.resistance_ohm * c
    if disc < 0.0:
        # More cooling than the vertex can give: best effort.
        return CurrentRequest(max_cooling_current(ted, t_abs_k, i_max_a),
                              True)
    # Smallest-|I| root, computed in the cancellation-free form.
    root = -2.0 * c / (b + math.sqrt(disc))
    if abs(root) <= i_max_a:
        return CurrentRequest(root, False)
    if root > 0.0:
        return CurrentRequest(max_cooling_current(ted, t_abs_k, i_max_a),
                              True)
    return CurrentRequest(-i_max_a, True)


@dataclass(frozen=True)
class PidGains:
    """PID gains in amperes per kelvin (and per second for ki, kd)."""

    kp: float = 2.0
    ki: float = 0.8
    kd: float = 0.0
    i_limit_a: float = 0.3


@dataclass(frozen=True)
class PidState:
    integral_a: float = 0.0
    prev_error_k: float = 0.0


def pid_step(gains: PidGains, state: PidState, error_k: float, dt_s: float,
             i_max_a: float) -> tuple[float, PidState, bool]:
    """One discrete PID update; returns (output A, new state, saturated).

    The integral candidate is clamped to +-i_limit and only committed
    when the output is not saturated in the error's direction, so the
    integrator cannot wind up against the current limit.
    """
    cand = state.integral_a + gains.ki * error_k * dt_s
    cand = max(-gains.i_limit_a, min(gains.i_limit_a, cand))
    derivative = gains.kd * (error_k - state.prev_error_k) / dt_s
    raw = gains.kp * error_k + cand + derivative
    if raw > i_max_a:
        out, saturated, windup = i_max_a, True, error_k > 0.0
    elif raw < -i_max_a:
        out, saturated, windup = -i_max_a, True, error_k < 0.0
    else:
        out, saturated, windup = raw, False, False
    integral = state.integral_a if windup else cand
    return out, PidState(integral_a=integral, prev_error_k=error_k), saturated


def controller_tick(mode: ControlMode, enabled: bool, setpoint: float,
                    t_abs_k: float, t_emit_k: float, t_skin_k: float,
                    pid: PidState, gains: PidGains, ted: TedParams,
                    dt_s: float, i_max_a: float,
                    ) -> tuple[CurrentRequest, PidState]:
    """One control period: measured temperatures in, current request out.

    setpoint is watts in heat-flow mode, kelvin in temperature mode.
    Disabled or OFF always requests exactly zero current and resets the
    PID so re-engagement starts clean.
    """
    if not enabled or mode == ControlMode.OFF:
        return CurrentRequest(0.0, False), PidState()
    if mode == ControlMode.HEAT_FLOW:
        return current_for_heat(ted, t_abs_k, t_emit_k, setpoint,
                                i_max_a), PidState()
    # Temperature loop acts on the absorbed face as the contact proxy.
    error = setpoint - t_abs_k
    out, pid_next, saturated = pid_step(gains, pid, error, dt_s, i_max_a)
    return CurrentRequest(-out, saturated), pid_next
