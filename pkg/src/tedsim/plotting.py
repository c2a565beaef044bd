"""Static per-channel SVG charts of a trace.

One file per channel so a report can embed exactly the signals it
needs.  Uses the object-oriented matplotlib API; no pyplot state, so
the functions are safe to call from tests and services.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from matplotlib.figure import Figure

from .device import Trace

# channel -> (axis label, line color)
CHANNELS = {
    "t_abs_c": ("contact face temperature [°C]", "#c0392b"),
    "t_emit_c": ("emitter face temperature [°C]", "#e67e22"),
    "t_skin_c": ("skin temperature [°C]", "#8e44ad"),
    "current_a": ("drive current [A]", "#2980b9"),
    "heat_w": ("heat drawn from skin [W]", "#27ae60"),
}


def plot_channel(trace: Trace, channel: str,
                 path: Union[str, Path]) -> Path:
    """Write one channel of the trace as an SVG line chart."""
    if channel not in CHANNELS:
        raise KeyError(f"unknown channel {channel!r}, "
                       f"want one of {sorted(CHANNELS)}")
    label, color = CHANNELS[channel]
    fig = Figure(figsize=(8.0, 3.0), dpi=100)
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(trace.column("time_s"), trace.column(channel),
            color=color, linewidth=1.0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(label)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, format="svg")
    return out


def plot_trace(trace: Trace, out_dir: Union[str, Path],
               stem: str = "trace") -> list:
    """Write every channel as <stem>_<channel>.svg; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [plot_channel(trace, channel,
                         out_dir / f"{stem}_{channel}.svg")
            for channel in CHANNELS]
