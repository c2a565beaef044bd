"""Software twin of a wearable thermoelectric thermal-feedback device.

The package mirrors the real signal chain: a Peltier pump model inside
a lumped thermal network (ted), setpoint-to-current control loops
(control), the DAC / H-bridge / supply stage (driver), the binary wire
protocol (protocol), the simulated device with its service endpoints
(device, service), and the control client with step metrics (client,
metrics, cli).
"""

from .client import (ClientSession, CommandRejected, ProtocolMismatch,
                     connect)
from .config import ConfigError, DeviceConfig, load_config, validate
from .control import (ControlMode, CurrentRequest, Level, PidGains, PidState,
                      SetpointRangeError, controller_tick, current_for_heat,
                      level_setpoint, pid_step, validate_setpoint)
from .device import (SCENARIOS, BatteryState, Device, Phase, Scenario,
                     TelemetryRecord, Trace, TraceFormatError,
                     from_telemetry, run_scenario, step_battery,
                     to_telemetry)
from .metrics import StepEvent, StepMetrics, compute_metrics, \
    events_from_trace
from .service import DeviceService
from .driver import DriveOutput, DriverParams, Polarity, compliance_check, \
    quantize
from .ted import (NetworkParams, PlantState, TedParams, ThermalRunaway,
                  electrical_power, heat_absorbed, heat_emitted,
                  max_cooling_current, max_cooling_heat, plant_step,
                  resting_state, terminal_voltage)

__version__ = "0.1.0"
