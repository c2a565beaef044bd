"""Step-response metrics over trace recordings.

A step event is a row where the commanded setpoint (or mode) changes.
Each event is scored on the channel the active mode regulates: the
delivered-heat column in heat-flow mode, the contact-face temperature
in temperature mode.  Metrics are pure functions of the trace, so the
same file always scores identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .control import ControlMode
from .device import Trace

RESPONSE_FRACTION = 0.9
SLEW_WINDOW_S = 0.5
SSE_WINDOW_S = 1.0

# Channel regulated by each mode; OFF regulates nothing.
MODE_CHANNEL = {
    int(ControlMode.HEAT_FLOW): "heat_w",
    int(ControlMode.TEMPERATURE): "t_abs_c",
}


@dataclass(frozen=True)
class StepEvent:
    """One setpoint change: first row index under the new command."""

    index: int
    time_s: float
    mode: int
    old_setpoint: float
    new_setpoint: float

    @property
    def magnitude(self) -> float:
        return self.new_setpoint - self.old_setpoint


@dataclass(frozen=True)
class StepMetrics:
    """Scores for one step.

    response_time_s is None when the channel never reaches 90% of the
    commanded magnitude within the step window.  slew_c_per_s is the
    maximum 0.5 s-window linear-fit slope magnitude; on the heat
    channel its unit is W/s.
    """

    event: StepEvent
    channel: str
    response_time_s: Optional[float]
    slew_c_per_s: float
    steady_state_error: float
    overshoot_pct: float

    @property
    def reached(self) -> bool:
        return self.response_time_s is not None


def events_from_trace(trace: Trace) -> list:
    """Detect setpoint/mode changes; event time is the tick boundary.

    Rows are stamped at the end of their tick, so the boundary a
    command landed on is the previous row's timestamp.
    """
    rows = trace.records
    events = []
    for i in range(1, len(rows)):
        prev, cur = rows[i - 1], rows[i]
        if cur.setpoint == prev.setpoint and cur.mode == prev.mode:
            continue
        if cur.mode not in MODE_CHANNEL:
            continue  # switch to OFF regulates nothing
        if cur.mode == prev.mode:
            old = prev.setpoint
        else:
            # Across a mode switch the old command is in different
            # units; measure the starting point off the channel itself.
            old = getattr(prev, MODE_CHANNEL[cur.mode])
        events.append(StepEvent(index=i, time_s=prev.time_s, mode=cur.mode,
                                old_setpoint=old,
                                new_setpoint=cur.setpoint))
    return events


def _max_window_slope(t: np.ndarray, y: np.ndarray) -> float:
    if len(t) < 2:
        return 0.0
    ends = np.searchsorted(t, t + SLEW_WINDOW_S, side="right")
    best = 0.0
    found = False
    for a in range(len(t)):
        b = ends[a]
        if b > len(t):
            break
        if b - a < 2 or t[b - 1] - t[a] < SLEW_WINDOW_S * 0.99:
            continue  # partial trailing window
        found = True
        best = max(best, abs(np.polyfit(t[a:b], y[a:b], 1)[0]))
    if not found:
        # Segment shorter than one window: fit what there is.
        return abs(np.polyfit(t, y, 1)[0])
    return best


def compute_metrics(trace: Trace, events: Optional[list] = None) -> list:
    """Score every step event; rejects traces with non-monotone time."""
    times = np.asarray(trace.column("time_s"), dtype=float)
    if len(times) == 0:
        raise ValueError("empty trace")
    if np.any(np.diff(times) <= 0):
        raise ValueError("trace time is not strictly increasing")
    if events is None:
        events = events_from_trace(trace)

    out = []
    for k, ev in enumerate(events):
        end = events[k + 1].index if k + 1 < len(events) else len(times)
        seg = trace.records[ev.index:end]
        channel = MODE_CHANNEL[ev.mode]
        t = times[ev.index:end]
        y = np.array([getattr(r, channel) for r in seg], dtype=float)

        mag = ev.magnitude
        response: Optional[float] = None
        overshoot = 0.0
        if mag != 0.0:
            sign = math.copysign(1.0, mag)
            threshold = ev.old_setpoint + RESPONSE_FRACTION * mag
            crossed = np.nonzero((y - threshold) * sign >= 0.0)[0]
            if len(crossed):
                response = float(t[crossed[0]] - ev.time_s)
            overshoot = max(
                0.0, float(np.max((y - ev.new_setpoint) * sign)))
            overshoot = 100.0 * overshoot / abs(mag)

        sse_from = t[-1] - SSE_WINDOW_S + 1e-9
        tail = y[t >= sse_from]
        sse = float(np.mean(np.abs(tail - ev.new_setpoint)))

        out.append(StepMetrics(
            event=ev, channel=channel, response_time_s=response,
            slew_c_per_s=_max_window_slope(t, y),
            steady_state_error=sse, overshoot_pct=overshoot))
    return out
