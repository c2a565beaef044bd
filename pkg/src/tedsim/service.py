"""Emulator daemon: one simulated device served over TCP and WebSocket.

A single task owns the simulation and advances it at the control rate.
Transport sessions never touch device state directly: they enqueue
decoded commands together with a reply future, the simulation task
drains the queue between ticks, and telemetry fans out to every
connected session at the telemetry rate.  TCP and WebSocket clients
receive byte-identical frames.

Faults on a session (bad frames, broken pipes) are contained to that
session; the simulation keeps running, with or without clients.
"""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import logging
import signal
from http import HTTPStatus
from typing import Optional

from websockets.asyncio.server import broadcast, serve

from . import protocol
from .config import ConfigError, DeviceConfig, load_config
from .device import Device, to_telemetry

log = logging.getLogger("tedsim.service")

DEFAULT_HOST = "127.0.0.1"


def _reply_for_fault(err: protocol.FrameError) -> Optional[bytes]:
    """Reject frame for a client-visible decode fault, None for noise.

    Range violations echo the legal bounds.  A structurally sound frame
    with an unknown type or a malformed payload earns Reject{UNKNOWN}.
    Framing-level garbage (bad magic, bad CRC, oversize length) gets no
    reply at all: the sender's framing is broken, so a frame back would
    only add to the confusion.
    """
    if isinstance(err, protocol.RangeViolation):
        return protocol.encode(protocol.Reject(
            err.msg_type, protocol.REJECT_RANGE, err.minimum, err.maximum))
    if err.msg_type is not None:
        return protocol.encode(protocol.Reject(
            err.msg_type, protocol.REJECT_UNKNOWN, 0, 0))
    return None


class DeviceService:
    """One Device bound to a TCP port and a WebSocket endpoint.

    start() binds both listeners and spawns the simulation task; stop()
    tears everything down.  Port 0 binds ephemerally; the bound ports
    are then available as tcp_port / ws_port, which is how the test
    suite runs many services in parallel.
    """

    def __init__(self, config: Optional[DeviceConfig] = None,
                 realtime: bool = False, host: str = DEFAULT_HOST):
        self.device = Device(config)
        self.realtime = realtime
        self.host = host
        self.tcp_port: Optional[int] = None
        self.ws_port: Optional[int] = None
        self._commands: asyncio.Queue = asyncio.Queue()
        self._tcp_writers: set = set()
        self._ws_clients: set = set()
        self._tcp_server = None
        self._ws_server = None
        self._sim_task: Optional[asyncio.Task] = None
        self._every = self.device.config.ticks_per_telemetry()

    # -- lifecycle ------------------------------------------------------

    async def start(self) -> None:
        cfg = self.device.config
        self._tcp_server = await asyncio.start_server(
            self._handle_tcp, self.host, cfg.tcp_port)
        self._ws_server = await serve(
            self._handle_ws, self.host, cfg.ws_port,
            process_request=self._require_ws_path)
        self.tcp_port = self._tcp_server.sockets[0].getsockname()[1]
        self.ws_port = self._ws_server.sockets[0].getsockname()[1]
        self._sim_task = asyncio.create_task(self._sim_loop())
        log.info("device %s: tcp %s:%d, ws ws://%s:%d/ws",
                 cfg.device_name, self.host, self.tcp_port,
                 self.host, self.ws_port)

    async def stop(self) -> None:
        if self._sim_task is not None:
            self._sim_task.cancel()
            try:
                await self._sim_task
            except asyncio.CancelledError:
                pass
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        for writer in list(self._tcp_writers):
            writer.close()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()

    async def run(self) -> None:
        """start() and serve until cancelled (SIGINT/SIGTERM)."""
        loop = asyncio.get_running_loop()
        stop = loop.create_future()
        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(
                    sig, lambda: stop.done() or stop.set_result(None))
            except NotImplementedError:  # non-unix event loops
                pass
        try:
            await self.start()
            await stop
        finally:
            await self.stop()

    # -- simulation task --------------------------------------------------

    async def _sim_loop(self) -> None:
        loop = asyncio.get_running_loop()
        period = 1.0 / self.device.config.control_hz
        base = loop.time()
        ticks = 0
        while True:
            while not self._commands.empty():
                msg, fut = self._commands.get_nowait()
                reply = self.device.apply_command(msg)
                if not fut.done():
                    fut.set_result(reply)
            record = self.device.tick()
            ticks += 1
            if ticks % self._every == 0:
                self._broadcast(protocol.encode(to_telemetry(record)))
            if self.realtime:
                # Fixed schedule off the start time, so a late tick does
                # not push every later tick back (no drift).
                delay = base + ticks * period - loop.time()
                await asyncio.sleep(delay if delay > 0.0 else 0.0)
            else:
                await asyncio.sleep(0)  # flat out, but let sessions run

    async def submit(self, msg) -> object:
        """Queue a command for the next tick boundary; await the reply."""
        fut = asyncio.get_running_loop().create_future()
        await self._commands.put((msg, fut))
        return await fut

    def _broadcast(self, frame: bytes) -> None:
        for writer in list(self._tcp_writers):
            if writer.is_closing():
                self._tcp_writers.discard(writer)
                continue
            writer.write(frame)
        if self._ws_clients:
            broadcast(self._ws_clients, frame)

    # -- sessions ---------------------------------------------------------

    async def _replies_for(self, data: bytes,
                           decoder: protocol.StreamDecoder) -> list:
        # Queue every command first so one read() worth of input is
        # applied at a single tick boundary, then collect the replies
        # in command order.
        loop = asyncio.get_running_loop()
        slots = []
        for event in decoder.feed(data):
            if isinstance(event, protocol.FrameError):
                reply = _reply_for_fault(event)
                if reply is not None:
                    slots.append(reply)
                continue
            fut = loop.create_future()
            await self._commands.put((event, fut))
            slots.append(fut)
        return [slot if isinstance(slot, bytes)
                else protocol.encode(await slot) for slot in slots]

    async def _handle_tcp(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        decoder = protocol.StreamDecoder()
        self._tcp_writers.add(writer)
        try:
            while True:
                data = await reader.read(4096)
                if not data:
                    break
                for reply in await self._replies_for(data, decoder):
                    writer.write(reply)
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError, OSError):
            pass
        finally:
            self._tcp_writers.discard(writer)
            writer.close()

    async def _handle_ws(self, websocket) -> None:
        decoder = protocol.StreamDecoder()
        self._ws_clients.add(websocket)
        try:
            async for data in websocket:
                if isinstance(data, str):
                    continue  # binary protocol; ignore stray text
                for reply in await self._replies_for(data, decoder):
                    await websocket.send(reply)
        except Exception:
            log.debug("websocket session ended", exc_info=True)
        finally:
            self._ws_clients.discard(websocket)

    @staticmethod
    def _require_ws_path(connection, request):
        if request.path != "/ws":
            return connection.respond(HTTPStatus.NOT_FOUND,
                                      "unknown path; connect to /ws\n")
        return None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tedsim-device",
        description="Run the simulated device and serve its wire protocol "
                    "over TCP and WebSocket.")
    parser.add_argument("--config", metavar="PATH",
                        help="key=value config file (see device.conf)")
    pace = parser.add_mutually_exclusive_group()
    pace.add_argument("--realtime", action="store_true", default=True,
                      help="pace the simulation at wall-clock rate "
                           "(default)")
    pace.add_argument("--fast", dest="realtime", action="store_false",
                      help="run the simulation as fast as possible")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="sensor noise seed (overrides config)")
    parser.add_argument("--host", default=DEFAULT_HOST,
                        help="bind address (default %(default)s)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        config = load_config(args.config) if args.config else DeviceConfig()
    except (ConfigError, OSError) as err:
        parser.exit(2, f"tedsim-device: {err}\n")
    if args.seed is not None:
        config = dataclasses.replace(config, noise_seed=args.seed)

    service = DeviceService(config, realtime=args.realtime, host=args.host)
    try:
        asyncio.run(service.run())
    except KeyboardInterrupt:
        pass
    except OSError as err:  # bind failure, typically port already in use
        parser.exit(1, f"tedsim-device: {err}\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
