"""What five minutes of maximum cooling does to the module.

Sustained cooling dumps both the pumped heat and the Joule loss into
the heat sink face, so the sink creeps hotter and the same drive
current pumps less and less heat: the classic endurance limit of a
wearable Peltier stage.  This runs the built-in 300 s scenario and
plots the decay, then reruns it on a tiny battery to show the
low-charge cutoff.
"""

from pathlib import Path

from dataclasses import replace

from tedsim import run_scenario
from tedsim.config import DeviceConfig
from tedsim.device import Device
from tedsim.plotting import plot_trace
from tedsim.protocol import Enable, SetHeatSetpoint, SetMode

OUT = Path(__file__).parent / "out"

trace = run_scenario("saturation")
rows = list(trace)
first, last = rows[0], rows[-1]

print(f"saturation: {last.time_s:.0f} s at +4 W commanded cooling")
print(f"  sink face:      {first.t_emit_c:6.2f} -> {last.t_emit_c:6.2f} C")
print(f"  delivered heat: {first.heat_w:6.3f} -> {last.heat_w:6.3f} W "
      f"({100 * (1 - last.heat_w / first.heat_w):.0f}% lost)")
print(f"  saturated flag: {first.saturated} -> {last.saturated}")

# Decline is monotone once the drive rails; sample the curve.
print("\n  t[s]   t_emit[C]   heat[W]   current[mA]")
for rec in rows[::6000]:
    print(f"  {rec.time_s:5.0f}   {rec.t_emit_c:7.2f}   "
          f"{rec.heat_w:6.3f}   {1000 * rec.current_a:8.0f}")

paths = plot_trace(trace, OUT, stem="saturation")
print(f"\nwrote {len(paths)} SVG charts to {OUT}/")

# --- battery cutoff ------------------------------------------------------
# Same drive on a deliberately tiny pack: the device disables itself
# the moment the charge integrator hits zero.

cfg = replace(DeviceConfig(), battery_mah=2.0)
dev = Device(cfg)
dev.apply_command(Enable(True))
dev.apply_command(SetMode(1))
dev.apply_command(SetHeatSetpoint(4000))
while not dev.battery_empty:
    dev.tick()
print(f"\n2 mAh pack at full drive: empty after {dev.time_s:.1f} s, "
      f"enabled={dev.enabled}")
