"""Control-client CLI: verbs, output, and exit codes."""

import shutil
import subprocess

import pytest

from tedsim.cli import main
from tedsim.device import Trace


# -- offline verbs ---------------------------------------------------------


def test_scenario_writes_a_parseable_trace(tmp_path, capsys):
    out = tmp_path / "heat.csv"
    assert main(["scenario", "--scenario", "charac-heat",
                 "--out", str(out)]) == 0
    trace = Trace.from_csv(out)
    assert len(trace) == 6500
    assert "6500 rows" in capsys.readouterr().out


def test_scenario_to_stdout_jsonl(capsys):
    assert main(["scenario", "--scenario", "saturation",
                 "--format", "jsonl"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 30000
    assert lines[0].startswith("{")


def test_metrics_prints_one_row_per_step(tmp_path, capsys):
    out = tmp_path / "heat.csv"
    main(["scenario", "--scenario", "charac-heat", "--out", str(out)])
    capsys.readouterr()
    assert main(["metrics", str(out)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    # Header plus one row per setpoint change: 6 stimuli + 6 returns.
    assert len(lines) == 1 + 12
    assert "resp[s]" in lines[0]


def test_metrics_rejects_non_trace_file(tmp_path, capsys):
    bad = tmp_path / "notes.csv"
    bad.write_text("this,is,not\na,trace,file\n")
    assert main(["metrics", str(bad)]) == 4
    assert "error" in capsys.readouterr().err


def test_metrics_missing_file_exits_bad_trace(tmp_path, capsys):
    assert main(["metrics", str(tmp_path / "gone.csv")]) == 4
    err = capsys.readouterr().err
    assert "gone.csv" in err


def test_plot_emits_one_svg_per_channel(tmp_path, capsys):
    trace_file = tmp_path / "run.csv"
    main(["scenario", "--scenario", "charac-heat", "--out",
          str(trace_file)])
    capsys.readouterr()
    out_dir = tmp_path / "charts"
    assert main(["plot", str(trace_file), "--out", str(out_dir)]) == 0
    svgs = sorted(p.name for p in out_dir.glob("*.svg"))
    assert svgs == ["run_current_a.svg", "run_heat_w.svg",
                    "run_t_abs_c.svg", "run_t_emit_c.svg",
                    "run_t_skin_c.svg"]
    body = (out_dir / "run_t_abs_c.svg").read_text()
    assert "<svg" in body and "time [s]" in body


# -- live verbs --------------------------------------------------------------


def test_connect_prints_identity(runner, capsys):
    assert main(["connect", "--addr", runner.tcp_addr]) == 0
    out = capsys.readouterr().out
    assert "StimulHeat-SIM #1234" in out
    assert "battery 100%" in out


def test_connection_failure_exits_2(capsys):
    import socket
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    assert main(["connect", "--addr", f"127.0.0.1:{port}"]) == 2
    assert "error" in capsys.readouterr().err


def test_malformed_addr_exits_2(capsys):
    assert main(["connect", "--addr", "localhost:not-a-port"]) == 2


def test_on_set_heat_status_off_flow(runner, capsys):
    addr = ["--addr", runner.tcp_addr]
    assert main(["on"] + addr) == 0
    assert main(["set-heat", "2.5"] + addr) == 0
    assert main(["status"] + addr) == 0
    out = capsys.readouterr().out
    assert "mode heat, setpoint 2.5 W" in out
    assert "enabled" in out
    assert main(["off"] + addr) == 0


def test_set_temp_out_of_range_exits_3(runner, capsys):
    addr = ["--addr", runner.tcp_addr]
    assert main(["set-temp", "43"] + addr) == 3
    err = capsys.readouterr().err
    assert "[1500, 4200]" in err


def test_set_level_requires_a_mode(runner, capsys):
    addr = ["--addr", runner.tcp_addr]
    # Fresh device sits in OFF mode: a bare level cannot apply.
    assert main(["set-level", "hot"] + addr) == 3
    assert main(["set-level", "hot", "--mode", "heat"] + addr) == 0
    out = capsys.readouterr()
    assert "level hot applied" in out.out


def test_set_pid_applies(runner, capsys):
    addr = ["--addr", runner.tcp_addr]
    assert main(["set-pid", "0.2", "0.05", "0", "0.3"] + addr) == 0
    assert "kp=0.2" in capsys.readouterr().out


def test_record_writes_rows(runner, tmp_path, capsys):
    out = tmp_path / "live.jsonl"
    assert main(["record", "--addr", runner.tcp_addr, "--duration", "0.5",
                 "--out", str(out), "--format", "jsonl"]) == 0
    trace = Trace.from_jsonl(out)
    assert len(trace) > 5
    times = trace.column("time_s")
    assert times == sorted(times)


# -- installed entry points ---------------------------------------------------


@pytest.mark.parametrize("prog", ["tedsim-device", "tedsim-ctl"])
def test_console_scripts_are_installed(prog):
    path = shutil.which(prog)
    assert path is not None, f"{prog} not on PATH"
    proc = subprocess.run([path, "--help"], capture_output=True, text=True,
                          timeout=30)
    assert proc.returncode == 0
    assert "usage" in proc.stdout.lower()
