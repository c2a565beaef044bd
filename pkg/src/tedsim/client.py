"""Host-side session: TCP connection to a running device service.

A background reader thread owns the socket's receive side and sorts
incoming frames into two lanes: telemetry messages land in a queue for
whoever is recording, and everything else (acks, rejects, device info)
answers the most recent request.  Commands may therefore be issued
while telemetry is flowing; ordering between the two lanes is not
guaranteed and callers must not assume it.
"""

from __future__ import annotations

import queue
import socket
import threading
import time
from typing import Optional, Tuple

from . import protocol
from .device import Trace, from_telemetry

# A server that never produces a valid frame in this many decode
# attempts is not speaking this protocol.
MISMATCH_THRESHOLD = 8

_CLOSED = object()  # reply-queue sentinel


class ProtocolMismatch(ConnectionError):
    """Peer sends bytes that never decode as protocol frames."""


class CommandRejected(Exception):
    """Device answered Reject; .reject carries the code and bounds."""

    def __init__(self, reject: protocol.Reject):
        self.reject = reject
        detail = {protocol.REJECT_RANGE: "out of range",
                  protocol.REJECT_UNKNOWN: "unknown command",
                  protocol.REJECT_STATE: "not allowed in this state"}.get(
                      reject.code, f"code {reject.code}")
        extra = ""
        if reject.code == protocol.REJECT_RANGE:
            extra = f" (legal range [{reject.minimum}, {reject.maximum}])"
        super().__init__(f"command 0x{reject.cmd:02x} rejected: "
                         f"{detail}{extra}")


def parse_address(addr: str) -> Tuple[str, int]:
    """'host:port' -> (host, port); bare 'host' keeps the default port."""
    host, sep, port = addr.rpartition(":")
    if not sep:
        return addr, 7453
    try:
        return host, int(port)
    except ValueError:
        raise ValueError(f"bad address {addr!r}, expected HOST:PORT") \
            from None


class ClientSession:
    """One live connection; see connect() for the usual entry point."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._sock.settimeout(0.1)  # reader poll interval
        self._decoder = protocol.StreamDecoder()
        self.telemetry: "queue.Queue[protocol.Telemetry]" = queue.Queue()
        self._replies: "queue.Queue[object]" = queue.Queue()
        self._send_lock = threading.Lock()
        self._closing = threading.Event()
        self._fault: Optional[Exception] = None
        self._error_count = 0
        self._good_count = 0
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self.info: protocol.DeviceInfo = self._fetch_info(timeout)

    # -- public API -------------------------------------------------------

    def request(self, msg, timeout: float = 5.0):
        """Send one command and return the device's reply message.

        Raises CommandRejected on a Reject reply, ConnectionError when
        the session died, TimeoutError when no reply arrives.
        """
        self._raise_if_dead()
        with self._send_lock:
            self._sock.sendall(protocol.encode(msg))
        try:
            reply = self._replies.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError("no reply from device") from None
        if reply is _CLOSED:
            self._raise_if_dead()
            raise ConnectionError("connection closed by peer")
        if isinstance(reply, protocol.Reject):
            raise CommandRejected(reply)
        return reply

    def record(self, duration_s: float) -> Trace:
        """Collect live telemetry for duration_s and return it as a trace."""
        # Drop whatever queued up before the call so the trace starts now.
        while True:
            try:
                self.telemetry.get_nowait()
            except queue.Empty:
                break
        records = []
        deadline = time.monotonic() + duration_s
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0.0:
                break
            try:
                msg = self.telemetry.get(timeout=remaining)
            except queue.Empty:
                break
            records.append(from_telemetry(msg))
            self._raise_if_dead()
        return Trace(records)

    def next_telemetry(self, timeout: float = 2.0,
                       fresh: bool = True) -> protocol.Telemetry:
        """Next telemetry frame; fresh=True discards the backlog first."""
        if fresh:
            while True:
                try:
                    self.telemetry.get_nowait()
                except queue.Empty:
                    break
        try:
            return self.telemetry.get(timeout=timeout)
        except queue.Empty:
            self._raise_if_dead()
            raise TimeoutError("no telemetry received") from None

    def close(self) -> None:
        self._closing.set()
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
        self._reader.join(timeout=2.0)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    # -- internals ----------------------------------------------------------

    def _fetch_info(self, timeout: float) -> protocol.DeviceInfo:
        try:
            reply = self.request(protocol.GetStatus(), timeout=timeout)
        except (TimeoutError, ConnectionError):
            self.close()
            raise
        if not isinstance(reply, protocol.DeviceInfo):
            self.close()
            raise ProtocolMismatch(
                f"expected DeviceInfo, got {type(reply).__name__}")
        return reply

    def _raise_if_dead(self) -> None:
        if self._fault is not None:
            raise self._fault
        if self._closing.is_set():
            raise ConnectionError("session closed")

    def _read_loop(self) -> None:
        while not self._closing.is_set():
            try:
                data = self._sock.recv(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            if not data:
                break
            for event in self._decoder.feed(data):
                if isinstance(event, protocol.FrameError):
                    self._error_count += 1
                    if (self._good_count == 0
                            and self._error_count >= MISMATCH_THRESHOLD):
                        self._fault = ProtocolMismatch(
                            f"{self._error_count} decode errors and no "
                            "valid frame")
                        self._closing.set()
                    continue
                self._good_count += 1
                if isinstance(event, protocol.Telemetry):
                    self.telemetry.put(event)
                else:
                    self._replies.put(event)
        self._replies.put(_CLOSED)


def connect(address: str, timeout: float = 5.0) -> ClientSession:
    """Open a session to 'host:port' and fetch the device identity.

    Raises ConnectionRefusedError when nothing listens there and
    ProtocolMismatch when whatever listens does not speak the protocol.
    """
    host, port = parse_address(address)
    return ClientSession(host, port, timeout=timeout)
