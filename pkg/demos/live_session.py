"""A complete client/server session in one process.

Boots the emulator daemon on OS-assigned ports inside a background
event loop, then talks to it over a real loopback socket exactly as a
separate tool would: identify, enable, command a cooling setpoint,
watch telemetry, and record a short trace.
"""

import asyncio
import threading
from dataclasses import replace

from tedsim import ClientSession, CommandRejected, DeviceService
from tedsim.config import DeviceConfig
from tedsim.protocol import (Enable, SetHeatSetpoint, SetMode,
                             SetTempSetpoint)

# --- server side ---------------------------------------------------------
# Port 0 asks the OS for free ports; realtime pacing so telemetry
# arrives at the genuine 10 Hz cadence.

cfg = replace(DeviceConfig(), tcp_port=0, ws_port=0)
service = DeviceService(cfg, realtime=True)
loop = asyncio.new_event_loop()
started = threading.Event()


def serve():
    asyncio.set_event_loop(loop)

    async def boot():
        await service.start()
        started.set()

    loop.run_until_complete(boot())
    loop.run_forever()


thread = threading.Thread(target=serve, daemon=True)
thread.start()
started.wait()
print(f"device serving on tcp:{service.tcp_port} ws:{service.ws_port}")

# --- client side -----------------------------------------------------------

with ClientSession("127.0.0.1", service.tcp_port) as session:
    info = session.info
    print(f"connected to {info.name} #{info.serial:04X}")

    session.request(Enable(True))
    session.request(SetMode(1))
    session.request(SetHeatSetpoint(3000))
    print("commanded +3 W cooling")

    tlm = session.next_telemetry()
    print(f"telemetry @{tlm.timestamp_ms} ms: heat {tlm.heat_mw} mW, "
          f"current {tlm.current_ma} mA, battery {tlm.battery_pct}%")

    # Range policing happens on the device, not in the client.
    try:
        session.request(SetTempSetpoint(5000))
    except CommandRejected as err:
        print(f"out-of-range setpoint refused: {err}")

    trace = session.record(1.0)
    heats = [rec.heat_w for rec in trace]
    print(f"recorded {len(trace)} rows over 1 s; "
          f"heat {min(heats):.3f}..{max(heats):.3f} W")

asyncio.run_coroutine_threadsafe(service.stop(), loop).result(timeout=5)
loop.call_soon_threadsafe(loop.stop)
thread.join(timeout=5)
print("service stopped")
