"""Offline tour of the simulated device, no sockets involved.

Runs the built-in heat characterization scenario, scores every step,
then drops down a level and drives a single temperature step by hand
to show what the controller does tick by tick.
"""

from tedsim import SCENARIOS, compute_metrics, run_scenario
from tedsim.config import DeviceConfig
from tedsim.device import Device
from tedsim.protocol import Enable, SetMode, SetTempSetpoint

# --- scripted scenario -------------------------------------------------
# Six heat steps (three warming, three cooling) with washouts between.
# The trace is one row per control tick at 100 Hz.

trace = run_scenario("charac-heat")
scenario = SCENARIOS["charac-heat"]
print(f"charac-heat: {scenario.duration_s:.0f} s simulated, "
      f"{len(trace)} rows")

print("\nstep scores (heat channel, W):")
print("  step      response   sse       overshoot")
for m in compute_metrics(trace):
    if m.event.old_setpoint != 0.0:
        continue  # washout back to baseline, not a stimulus
    resp = f"{m.response_time_s * 1000:.0f} ms" if m.reached else "never"
    print(f"  {m.event.magnitude:+5.1f} W   {resp:>8}   "
          f"{m.steady_state_error:.4f}    {m.overshoot_pct:.1f}%")

# --- one temperature step, by hand --------------------------------------
# The device applies commands exactly as they would arrive off the
# wire; replies are Ack or Reject dataclasses.

dev = Device(DeviceConfig())
for cmd in (Enable(True), SetMode(2), SetTempSetpoint(3800)):
    reply = dev.apply_command(cmd)
    print(f"\n{cmd!r} -> {reply!r}", end="")
print("\n\nregulating contact face to 38.00 C:")
print("  t[s]   t_abs[C]   current[mA]   flags")
for n in range(400):  # 4 s at 100 Hz
    rec = dev.tick()
    if n % 50 == 0 or n == 399:
        flags = "saturated" if rec.saturated else ""
        print(f"  {rec.time_s:4.1f}   {rec.t_abs_c:7.2f}   "
              f"{1000 * rec.current_a:8.0f}      {flags}")

final = dev.tick()
print(f"\nsteady state: {final.t_abs_c:.2f} C "
      f"(error {abs(final.t_abs_c - 38.0) * 1000:.0f} mC), "
      f"battery {dev.battery_pct}%")
