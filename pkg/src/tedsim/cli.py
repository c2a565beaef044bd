"""Command-line control client.

tedsim-ctl talks to a running device service over TCP for the live
verbs (on/off, setpoints, status, record) and works on trace files
offline for scenario/metrics/plot.

Exit codes: 0 success, 2 cannot reach or talk to the service,
3 command rejected by the device, 4 unreadable or inconsistent trace.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import protocol
from .client import (ClientSession, CommandRejected, ProtocolMismatch,
                     connect)
from .control import ControlMode, Level
from .device import SCENARIOS, Trace, TraceFormatError, run_scenario
from .metrics import compute_metrics

EXIT_OK = 0
EXIT_CONNECT = 2
EXIT_REJECTED = 3
EXIT_BAD_TRACE = 4

DEFAULT_ADDR = "127.0.0.1:7453"

LEVELS = {
    "very-hot": Level.VERY_HOT,
    "hot": Level.HOT,
    "neutral": Level.NEUTRAL,
    "cold": Level.COLD,
    "very-cold": Level.VERY_COLD,
}

MODES = {"heat": ControlMode.HEAT_FLOW, "temp": ControlMode.TEMPERATURE}

MODE_NAMES = {int(ControlMode.OFF): "off",
              int(ControlMode.HEAT_FLOW): "heat",
              int(ControlMode.TEMPERATURE): "temp"}


def _open(args) -> ClientSession:
    try:
        return connect(args.addr)
    except ValueError as err:  # malformed --addr
        raise ConnectionError(str(err)) from None


def _write_trace(trace: Trace, out, fmt: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(trace.to_csv_text() if fmt == "csv"
                         else trace.to_jsonl_text())
        return
    if fmt == "jsonl":
        trace.to_jsonl(out)
    else:
        trace.to_csv(out)


def cmd_connect(args) -> int:
    with _open(args) as session:
        info = session.info
        t = session.next_telemetry()
        print(f"{info.name} #{info.serial:04X}: mode "
              f"{MODE_NAMES.get(t.mode, '?')}, battery {t.battery_pct}%, "
              f"{'enabled' if t.flags & protocol.FLAG_ENABLED else 'off'}")
    return EXIT_OK


def cmd_on(args) -> int:
    with _open(args) as session:
        session.request(protocol.Enable(True))
        print("enabled")
    return EXIT_OK


def cmd_off(args) -> int:
    with _open(args) as session:
        session.request(protocol.Enable(False))
        print("disabled")
    return EXIT_OK


def cmd_set_level(args) -> int:
    with _open(args) as session:
        if args.mode is not None:
            session.request(protocol.SetMode(int(MODES[args.mode])))
        session.request(protocol.SetLevel(int(LEVELS[args.level])))
        print(f"level {args.level} applied")
    return EXIT_OK


def cmd_set_heat(args) -> int:
    with _open(args) as session:
        session.request(protocol.SetMode(int(ControlMode.HEAT_FLOW)))
        session.request(protocol.SetHeatSetpoint(round(args.watts * 1000)))
        print(f"heat-flow setpoint {args.watts:g} W")
    return EXIT_OK


def cmd_set_temp(args) -> int:
    with _open(args) as session:
        session.request(protocol.SetMode(int(ControlMode.TEMPERATURE)))
        session.request(protocol.SetTempSetpoint(round(args.celsius * 100)))
        print(f"temperature setpoint {args.celsius:g} °C")
    return EXIT_OK


def cmd_set_pid(args) -> int:
    with _open(args) as session:
        session.request(protocol.SetPid(
            round(args.kp * 1e6), round(args.ki * 1e6),
            round(args.kd * 1e6), round(args.i_limit * 1e6)))
        print(f"gains kp={args.kp:g} ki={args.ki:g} kd={args.kd:g} "
              f"i_limit={args.i_limit:g}")
    return EXIT_OK


def cmd_status(args) -> int:
    with _open(args) as session:
        info = session.info
        t = session.next_telemetry()
        sp = {int(ControlMode.HEAT_FLOW): f"{t.setpoint_raw / 1000:g} W",
              int(ControlMode.TEMPERATURE):
                  f"{t.setpoint_raw / 100:g} °C"}.get(t.mode, "-")
        flags = []
        if t.flags & protocol.FLAG_SATURATED:
            flags.append("saturated")
        if t.flags & protocol.FLAG_COMPLIANCE:
            flags.append("compliance-limited")
        print(f"device:   {info.name} #{info.serial:04X}")
        print(f"state:    {'enabled' if t.flags & protocol.FLAG_ENABLED else 'off'},"
              f" mode {MODE_NAMES.get(t.mode, '?')}, setpoint {sp}")
        print(f"thermal:  contact {t.t_abs_cc / 100:.2f} °C, emitter "
              f"{t.t_emit_cc / 100:.2f} °C, skin {t.t_contact_cc / 100:.2f} °C")
        print(f"drive:    {t.current_ma / 1000:.3f} A, "
              f"{t.heat_mw / 1000:.3f} W drawn from skin"
              + (f" [{', '.join(flags)}]" if flags else ""))
        print(f"battery:  {t.battery_pct}%")
    return EXIT_OK


def cmd_record(args) -> int:
    with _open(args) as session:
        trace = session.record(args.duration)
    _write_trace(trace, args.out, args.format)
    if args.out and args.out != "-":
        print(f"{len(trace)} rows -> {args.out}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    trace = run_scenario(args.scenario)
    _write_trace(trace, args.out, args.format)
    if args.out and args.out != "-":
        print(f"{len(trace)} rows -> {args.out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    trace = Trace.from_file(args.trace)
    rows = compute_metrics(trace)
    if not rows:
        print("no setpoint steps found")
        return EXIT_OK
    print(f"{'t[s]':>8}  {'mode':<5} {'step':>16}  {'resp[s]':>8}  "
          f"{'slew[/s]':>9}  {'sse':>7}  {'over[%]':>7}")
    for m in rows:
        e = m.event
        step = f"{e.old_setpoint:g} -> {e.new_setpoint:g}"
        resp = f"{m.response_time_s:.3f}" if m.reached else "not-rchd"
        print(f"{e.time_s:>8.2f}  {MODE_NAMES.get(e.mode, '?'):<5} "
              f"{step:>16}  {resp:>8}  {m.slew_c_per_s:>9.3f}  "
              f"{m.steady_state_error:>7.3f}  {m.overshoot_pct:>7.1f}")
    return EXIT_OK


def cmd_plot(args) -> int:
    # Imported here: pulling in matplotlib is slow and only plot needs it.
    from .plotting import plot_trace
    trace = Trace.from_file(args.trace)
    if not len(trace):
        print(f"error: {args.trace}: empty trace", file=sys.stderr)
        return EXIT_BAD_TRACE
    stem = Path(args.trace).stem
    for path in plot_trace(trace, args.out or ".", stem=stem):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tedsim-ctl",
        description="Control client for the simulated thermal device.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def live(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--addr", default=DEFAULT_ADDR, metavar="HOST:PORT",
                       help="service address (default %(default)s)")
        p.set_defaults(func=func)
        return p

    live("connect", cmd_connect, "check the service and print its identity")
    live("on", cmd_on, "enable thermal output")
    live("off", cmd_off, "disable thermal output")

    p = live("set-level", cmd_set_level, "apply a named sensation level")
    p.add_argument("level", choices=sorted(LEVELS))
    p.add_argument("--mode", choices=sorted(MODES),
                   help="switch control mode first")

    p = live("set-heat", cmd_set_heat,
             "switch to heat-flow mode and set the setpoint in watts")
    p.add_argument("watts", type=float)

    p = live("set-temp", cmd_set_temp,
             "switch to temperature mode and set the setpoint in °C")
    p.add_argument("celsius", type=float)

    p = live("set-pid", cmd_set_pid, "set temperature-loop PID gains")
    p.add_argument("kp", type=float)
    p.add_argument("ki", type=float)
    p.add_argument("kd", type=float)
    p.add_argument("i_limit", type=float,
                   help="integral clamp in amperes")

    live("status", cmd_status, "print one full status snapshot")

    p = live("record", cmd_record, "record live telemetry to a trace file")
    p.add_argument("--duration", type=float, default=10.0, metavar="S")
    p.add_argument("--out", metavar="FILE", help="default: stdout")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("scenario",
                       help="run a built-in scenario offline and write "
                            "its full-rate trace")
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS),
                   metavar="NAME")
    p.add_argument("--out", metavar="FILE", help="default: stdout")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("metrics",
                       help="step-response metrics for a recorded trace")
    p.add_argument("trace", metavar="FILE")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("plot", help="per-channel SVG charts of a trace")
    p.add_argument("trace", metavar="FILE")
    p.add_argument("--out", metavar="DIR", help="default: current directory")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CommandRejected as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_REJECTED
    except (ConnectionError, ProtocolMismatch, TimeoutError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONNECT
    except TraceFormatError as err:
        trace = getattr(args, "trace", None)
        where = f"{trace}: " if trace else ""
        print(f"error: {where}{err}", file=sys.stderr)
        return EXIT_BAD_TRACE
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_TRACE
    except OSError as err:
        name = getattr(err, "filename", None)
        print(f"error: {name or ''}{': ' if name else ''}{err.strerror or err}",
              file=sys.stderr)
        return EXIT_BAD_TRACE


if __name__ == "__main__":
    raise SystemExit(main())
