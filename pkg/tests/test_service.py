"""Service integration: TCP + WebSocket transports against a live daemon.

Each test spins up a real service on ephemeral ports inside a
background event-loop thread and talks to it over actual sockets, so
framing, fan-out, and session isolation are exercised end to end.
"""

import socket
import threading
import time

import pytest
from websockets.sync.client import connect as ws_connect

from tedsim import protocol
from tedsim.client import CommandRejected, ProtocolMismatch, connect


# -- TCP sessions ---------------------------------------------------------


def test_connect_retrieves_device_identity(runner):
    with connect(runner.tcp_addr) as session:
        assert session.info.name == "StimulHeat-SIM"
        assert session.info.serial == 0x1234


def test_wrong_port_refuses():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()  # nothing listens here now
    with pytest.raises(ConnectionRefusedError):
        connect(f"127.0.0.1:{port}", timeout=2.0)


def test_garbage_speaking_server_raises_protocol_mismatch():
    server = socket.create_server(("127.0.0.1", 0))
    port = server.getsockname()[1]

    def babble():
        conn, _ = server.accept()
        with conn:
            for _ in range(40):
                try:
                    conn.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\nnope")
                except OSError:
                    return
                time.sleep(0.01)

    thread = threading.Thread(target=babble, daemon=True)
    thread.start()
    try:
        with pytest.raises((ProtocolMismatch, TimeoutError)):
            connect(f"127.0.0.1:{port}", timeout=3.0)
    finally:
        server.close()


def test_commands_round_trip_and_telemetry_flows(runner):
    with connect(runner.tcp_addr) as session:
        assert isinstance(session.request(protocol.Enable(True)),
                          protocol.Ack)
        session.request(protocol.SetMode(1))
        ack = session.request(protocol.SetHeatSetpoint(2000))
        assert ack.cmd == protocol.MSG_SET_HEAT_SETPOINT
        t = session.next_telemetry()
        assert t.mode == 1
        assert t.setpoint_raw == 2000
        assert t.flags & protocol.FLAG_ENABLED
        # Commanded cooling actually flows within the telemetry period.
        assert t.heat_mw == pytest.approx(2000, abs=150)


def test_out_of_range_setpoint_rejected_with_bounds(runner):
    with connect(runner.tcp_addr) as session:
        with pytest.raises(CommandRejected) as exc:
            session.request(protocol.SetTempSetpoint(5000))
        reject = exc.value.reject
        assert reject.code == protocol.REJECT_RANGE
        assert (reject.minimum, reject.maximum) == (1500, 4200)


def test_disable_zeroes_current_within_one_tick(runner):
    with connect(runner.tcp_addr) as session:
        session.request(protocol.Enable(True))
        session.request(protocol.SetMode(1))
        session.request(protocol.SetHeatSetpoint(3000))
        t = session.next_telemetry()
        assert t.current_ma != 0
        session.request(protocol.Enable(False))
        t = session.next_telemetry()
        assert t.current_ma == 0
        assert not t.flags & protocol.FLAG_ENABLED


def test_unknown_frame_type_answered_with_reject(runner):
    host, port = runner.tcp_addr.rsplit(":", 1)
    with socket.create_connection((host, int(port)), timeout=5.0) as sock:
        sock.sendall(protocol.build_frame(0x6E, b""))
        decoder = protocol.StreamDecoder()
        reject = None
        deadline = time.monotonic() + 5.0
        while reject is None and time.monotonic() < deadline:
            for event in decoder.feed(sock.recv(4096)):
                if isinstance(event, protocol.Reject):
                    reject = event
                    break
        assert reject == protocol.Reject(0x6E, protocol.REJECT_UNKNOWN, 0, 0)


def test_framing_garbage_gets_no_reply_but_session_survives(runner):
    host, port = runner.tcp_addr.rsplit(":", 1)
    with socket.create_connection((host, int(port)), timeout=5.0) as sock:
        # Pure noise: no magic byte anywhere.
        sock.sendall(bytes(range(0x60, 0xA0)))
        # A valid command right behind it must still be answered.
        sock.sendall(protocol.encode(protocol.GetStatus()))
        decoder = protocol.StreamDecoder()
        info = None
        deadline = time.monotonic() + 5.0
        while info is None and time.monotonic() < deadline:
            for event in decoder.feed(sock.recv(4096)):
                if isinstance(event, protocol.DeviceInfo):
                    info = event
                    break
                assert not isinstance(event, protocol.Reject)
        assert info is not None and info.name == "StimulHeat-SIM"


def test_one_dying_session_leaves_others_running(runner):
    with connect(runner.tcp_addr) as session:
        # Open a second session, write half a frame, and slam it shut.
        host, port = runner.tcp_addr.rsplit(":", 1)
        rude = socket.create_connection((host, int(port)))
        rude.sendall(protocol.encode(protocol.GetStatus())[:3])
        rude.close()
        time.sleep(0.1)
        assert isinstance(session.request(protocol.GetStatus()),
                          protocol.DeviceInfo)
        assert session.next_telemetry().timestamp_ms > 0


def test_headless_simulation_advances_without_clients(runner):
    time.sleep(0.3)
    with connect(runner.tcp_addr) as session:
        t = session.next_telemetry()
        # The device ran flat out before anyone connected.
        assert t.timestamp_ms > 0
        assert not t.flags & protocol.FLAG_ENABLED


# -- WebSocket sessions -----------------------------------------------------


def test_websocket_speaks_identical_frames(runner):
    with ws_connect(runner.ws_uri) as ws:
        ws.send(protocol.encode(protocol.GetStatus()))
        while True:
            msg = protocol.decode(ws.recv(timeout=5.0))
            if isinstance(msg, protocol.DeviceInfo):
                assert msg.name == "StimulHeat-SIM"
                break


def test_websocket_rejects_other_paths(runner):
    from websockets.exceptions import InvalidStatus
    bad = runner.ws_uri.replace("/ws", "/nope")
    with pytest.raises(InvalidStatus) as exc:
        ws_connect(bad)
    assert exc.value.response.status_code == 404


def test_all_subscribers_see_identical_telemetry(runner):
    with connect(runner.tcp_addr) as a, connect(runner.tcp_addr) as b, \
            ws_connect(runner.ws_uri) as ws:
        a.request(protocol.Enable(True))
        a.request(protocol.SetMode(1))
        a.request(protocol.SetHeatSetpoint(1500))

        def drain_ws(n):
            out = []
            while len(out) < n:
                msg = protocol.decode(ws.recv(timeout=5.0))
                if isinstance(msg, protocol.Telemetry):
                    out.append(msg)
            return out

        seq_a = [a.next_telemetry(fresh=False) for _ in range(25)]
        seq_b = [b.next_telemetry(fresh=False) for _ in range(25)]
        seq_w = drain_ws(25)

        by_time = {}
        for seq, tag in ((seq_a, "a"), (seq_b, "b"), (seq_w, "w")):
            for t in seq:
                by_time.setdefault(t.timestamp_ms, {})[tag] = t
        overlap = [v for v in by_time.values() if len(v) == 3]
        assert len(overlap) >= 10
        for group in overlap:
            assert group["a"] == group["b"] == group["w"]


# -- pacing -----------------------------------------------------------------


def test_realtime_pacing_matches_wall_clock(realtime_runner):
    with connect(realtime_runner.tcp_addr) as session:
        first = session.next_telemetry(fresh=False)
        start = time.monotonic()
        frames = [session.next_telemetry(fresh=False) for _ in range(10)]
        wall = time.monotonic() - start
        sim = (frames[-1].timestamp_ms - first.timestamp_ms) / 1000.0
        # 10 frames at 10 Hz: about a second of both clocks.
        assert sim == pytest.approx(1.0, abs=0.01)
        assert wall == pytest.approx(sim, rel=0.25)


def test_record_cadence_in_realtime(realtime_runner):
    with connect(realtime_runner.tcp_addr) as session:
        trace = session.record(2.0)
        # 10 Hz wire cadence, one-frame tolerance per boundary.
        assert 18 <= len(trace) <= 22
        dt = [b.time_s - a.time_s
              for a, b in zip(trace.records, trace.records[1:])]
        assert all(abs(d - 0.1) < 1e-6 for d in dt)
