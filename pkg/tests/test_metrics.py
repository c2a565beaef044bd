"""Step-metric scoring against constructed traces with known answers."""

import math

import pytest

from tedsim.control import ControlMode
from tedsim.device import TelemetryRecord, Trace
from tedsim.metrics import (MODE_CHANNEL, StepEvent, compute_metrics,
                            events_from_trace)

HEAT = int(ControlMode.HEAT_FLOW)
TEMP = int(ControlMode.TEMPERATURE)


def make_trace(points, mode=HEAT):
    """Rows at given (time, setpoint, value) with value on the mode channel."""
    channel = MODE_CHANNEL[mode]
    rows = []
    for t, sp, val in points:
        fields = dict(time_s=t, t_abs_c=31.0, t_emit_c=24.0, t_skin_c=31.0,
                      current_a=0.0, heat_w=0.0, setpoint=sp, mode=mode,
                      saturated=False, battery_pct=100)
        fields[channel] = val
        rows.append(TelemetryRecord(**fields))
    return Trace(rows)


def grid(t0, t1, dt=0.01):
    n = round((t1 - t0) / dt)
    return [round(t0 + (i + 1) * dt, 10) for i in range(n)]


def test_single_tick_jump_scores_one_control_period():
    points = [(t, 0.0, 0.0) for t in grid(0.0, 5.0)]
    points += [(t, 2.0, 2.0) for t in grid(5.0, 10.0)]
    m, = compute_metrics(make_trace(points))
    assert m.event.time_s == 5.0
    assert m.response_time_s == pytest.approx(0.01, abs=1e-12)
    assert m.steady_state_error == 0.0
    assert m.overshoot_pct == 0.0
    assert m.reached


def test_first_order_rise_crosses_at_tau_ln_ten():
    tau = 0.8
    points = [(t, 31.0, 31.0) for t in grid(0.0, 5.0)]
    points += [(t, 40.0, 31.0 + 9.0 * (1.0 - math.exp(-(t - 5.0) / tau)))
               for t in grid(5.0, 10.0)]
    m, = compute_metrics(make_trace(points, mode=TEMP))
    assert m.response_time_s == pytest.approx(tau * math.log(10.0), abs=0.0101)


def test_constant_ramp_slew_is_the_ramp_rate():
    rate = 2.25
    points = [(t, 31.0, 31.0) for t in grid(0.0, 5.0)]
    points += [(t, 40.0, 31.0 + min(rate * (t - 5.0), 9.0))
               for t in grid(5.0, 11.0)]
    m, = compute_metrics(make_trace(points, mode=TEMP))
    assert m.slew_c_per_s == pytest.approx(rate, abs=1e-9)


def test_overshoot_percent_of_magnitude():
    points = [(t, 31.0, 31.0) for t in grid(0.0, 5.0)]
    # Peaks 0.45 over a +9 step, then settles back on the target.
    points += [(t, 40.0, 40.45 if t < 6.0 else 40.0) for t in grid(5.0, 10.0)]
    m, = compute_metrics(make_trace(points, mode=TEMP))
    assert m.overshoot_pct == pytest.approx(5.0, abs=1e-9)


def test_never_reaching_marks_not_reached():
    points = [(t, 0.0, 0.0) for t in grid(0.0, 5.0)]
    points += [(t, 4.0, 1.0) for t in grid(5.0, 10.0)]
    m, = compute_metrics(make_trace(points))
    assert m.response_time_s is None
    assert not m.reached
    assert m.steady_state_error == pytest.approx(3.0)


def test_sse_covers_only_the_final_second():
    points = [(t, 0.0, 0.0) for t in grid(0.0, 5.0)]
    # Error is 1.0 W until the final second, then exactly 0.25 W.
    points += [(t, 2.0, 1.0 if t <= 9.0 else 1.75) for t in grid(5.0, 10.0)]
    m, = compute_metrics(make_trace(points))
    assert m.steady_state_error == pytest.approx(0.25, abs=1e-12)


def test_downward_steps_score_symmetrically():
    points = [(t, 0.0, 0.0) for t in grid(0.0, 5.0)]
    points += [(t, -3.0, -3.0) for t in grid(5.0, 10.0)]
    m, = compute_metrics(make_trace(points))
    assert m.response_time_s == pytest.approx(0.01, abs=1e-12)
    assert m.event.magnitude == -3.0


def test_non_monotone_time_is_rejected():
    points = [(0.01, 0.0, 0.0), (0.02, 0.0, 0.0), (0.02, 2.0, 2.0)]
    with pytest.raises(ValueError, match="increasing"):
        compute_metrics(make_trace(points))


def test_empty_trace_is_rejected():
    with pytest.raises(ValueError):
        compute_metrics(Trace())


def test_events_detected_per_setpoint_change():
    points = [(t, 0.0, 0.0) for t in grid(0.0, 2.0)]
    points += [(t, 2.0, 2.0) for t in grid(2.0, 4.0)]
    points += [(t, -1.0, -1.0) for t in grid(4.0, 6.0)]
    events = events_from_trace(make_trace(points))
    assert [(e.time_s, e.old_setpoint, e.new_setpoint) for e in events] == [
        (2.0, 0.0, 2.0), (4.0, 2.0, -1.0)]


def test_mode_switch_event_baselines_off_the_channel():
    rows = [(t, 0.0, 0.0) for t in grid(0.0, 2.0)]
    trace = make_trace(rows)
    trace.append(TelemetryRecord(
        time_s=2.01, t_abs_c=29.0, t_emit_c=24.0, t_skin_c=31.0,
        current_a=0.0, heat_w=0.0, setpoint=38.0, mode=TEMP,
        saturated=False, battery_pct=100))
    events = events_from_trace(trace)
    assert len(events) == 1
    # Baseline for the new mode comes from the temperature channel.
    assert events[0].old_setpoint == pytest.approx(31.0)
    assert events[0].new_setpoint == 38.0


def test_switch_to_off_emits_no_event():
    rows = [(t, 2.0, 2.0) for t in grid(0.0, 2.0)]
    trace = make_trace(rows)
    trace.append(TelemetryRecord(
        time_s=2.01, t_abs_c=31.0, t_emit_c=24.0, t_skin_c=31.0,
        current_a=0.0, heat_w=0.0, setpoint=0.0, mode=0,
        saturated=False, battery_pct=100))
    assert events_from_trace(trace) == []


def test_explicit_events_override_detection():
    points = [(t, 0.0, 0.0) for t in grid(0.0, 5.0)]
    points += [(t, 2.0, 2.0) for t in grid(5.0, 10.0)]
    ev = StepEvent(index=500, time_s=5.0, mode=HEAT,
                   old_setpoint=0.0, new_setpoint=2.0)
    m, = compute_metrics(make_trace(points), [ev])
    assert m.event is ev
