"""Binary framed wire protocol spoken over TCP and WebSocket.

Frame layout, all multi-byte fields little-endian:

    offset  size  field
    0       1     magic, always 0x53 ('S')
    1       2     length: payload byte count, 0..256
    3       1     msg_type
    4       n     payload
    4+n     2     crc: CRC-16/CCITT-FALSE over msg_type + payload

Commands (client -> device):

    0x01 Enable            on: u8 (0 or 1)
    0x02 SetMode           mode: u8 (0 off, 1 heat flow, 2 temperature)
    0x03 SetLevel          level: u8 (0 very hot .. 4 very cold)
    0x04 SetHeatSetpoint   milliwatts: i32, -9000..9000
    0x05 SetTempSetpoint   centi_c: i32, 1500..4200
    0x06 SetPid            kp, ki, kd, i_limit: i32 each, gain * 1e6
    0x07 GetStatus         (empty)

Replies and telemetry (device -> client):

    0x10 Telemetry         timestamp_ms: u32, t_abs, t_emit, t_contact:
                           i16 centi-degC, current: i16 mA, heat: i16 mW,
                           setpoint_raw: i32, mode: u8, flags: u8,
                           battery_pct: u8       (21 bytes)
    0x11 Ack               cmd: u8, echo of the applied command payload
    0x12 Reject            cmd: u8, code: u8, minimum: i32, maximum: i32
    0x13 DeviceInfo        serial: u32, name_len: u8, name: utf-8

Telemetry flags: bit 0 controller saturated, bit 1 compliance limited,
bit 2 enabled.

Encoding checks only that fields fit their wire width; decoding also
enforces the semantic ranges, so a hostile or corrupted command can be
rejected with the legal bounds attached.  Every failure mode is a
distinct exception type.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

MAGIC = 0x53
MAX_PAYLOAD = 256
HEADER_LEN = 4  # magic + length + msg_type
FRAME_OVERHEAD = 6  # header + crc

FLAG_SATURATED = 0x01
FLAG_COMPLIANCE = 0x02
FLAG_ENABLED = 0x04

REJECT_RANGE = 1
REJECT_UNKNOWN = 2
REJECT_STATE = 3

PID_SCALE = 1_000_000

_I32_MIN, _I32_MAX = -(1 << 31), (1 << 31) - 1
_I16_MIN, _I16_MAX = -(1 << 15), (1 << 15) - 1


class FrameError(Exception):
    """Base class for every way a frame can fail to decode.

    msg_type is the frame's type byte when the fault happened after
    the frame was structurally sound (unknown type, bad payload size,
    range violation); None for framing-level faults.
    """

    msg_type = None


class BadMagic(FrameError):
    pass


class BadLength(FrameError):
    pass


class BadCrc(FrameError):
    pass


class UnknownType(FrameError):
    pass


class RangeViolation(FrameError):
    """Field decoded fine but lies outside its legal range.

    msg_type carries the offending command's type byte once decode()
    has attached it, so a Reject reply can name the command.
    """

    def __init__(self, msg: str, minimum: int, maximum: int,
                 msg_type: int = 0):
        super().__init__(msg)
        self.minimum = minimum
        self.maximum = maximum
        self.msg_type = msg_type


class EncodeError(ValueError):
    """Message field does not fit its wire representation."""


_CRC_TABLE = []
for _byte in range(256):
    _crc = _byte << 8
    for _ in range(8):
        _crc = ((_crc << 1) ^ 0x1021 if _crc & 0x8000 else _crc << 1) & 0xFFFF
    _CRC_TABLE.append(_crc)


def crc16(data: bytes, crc: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection."""
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[(crc >> 8) ^ b]
    return crc


@dataclass(frozen=True)
class Enable:
    on: bool


@dataclass(frozen=True)
class SetMode:
    mode: int


@dataclass(frozen=True)
class SetLevel:
    level: int


@dataclass(frozen=True)
class SetHeatSetpoint:
    milliwatts: int


@dataclass(frozen=True)
class SetTempSetpoint:
    centi_c: int


@dataclass(frozen=True)
class SetPid:
    kp_micro: int
    ki_micro: int
    kd_micro: int
    i_limit_micro: int


@dataclass(frozen=True)
class GetStatus:
    pass


@dataclass(frozen=True)
class Telemetry:
    timestamp_ms: int
    t_abs_cc: int
    t_emit_cc: int
    t_contact_cc: int
    current_ma: int
    heat_mw: int
    setpoint_raw: int
    mode: int
    flags: int
    battery_pct: int


@dataclass(frozen=True)
class Ack:
    cmd: int
    echo: bytes = field(default=b"")


@dataclass(frozen=True)
class Reject:
    cmd: int
    code: int
    minimum: int = 0
    maximum: int = 0


@dataclass(frozen=True)
class DeviceInfo:
    serial: int
    name: str


MSG_ENABLE = 0x01
MSG_SET_MODE = 0x02
MSG_SET_LEVEL = 0x03
MSG_SET_HEAT_SETPOINT = 0x04
MSG_SET_TEMP_SETPOINT = 0x05
MSG_SET_PID = 0x06
MSG_GET_STATUS = 0x07
MSG_TELEMETRY = 0x10
MSG_ACK = 0x11
MSG_REJECT = 0x12
MSG_DEVICE_INFO = 0x13

HEAT_SETPOINT_RANGE_MW = (-9000, 9000)
TEMP_SETPOINT_RANGE_CC = (1500, 4200)


def _check_width(value: int, lo: int, hi: int, what: str) -> int:
    if not isinstance(value, int) or not lo <= value <= hi:
        raise EncodeError(f"{what} {value!r} does not fit [{lo}, {hi}]")
    return value


def _encode_payload(msg) -> tuple[int, bytes]:
    if isinstance(msg, Enable):
        return MSG_ENABLE, struct.pack("<B", 1 if msg.on else 0)
    if isinstance(msg, SetMode):
        return MSG_SET_MODE, struct.pack(
            "<B", _check_width(msg.mode, 0, 255, "mode"))
    if isinstance(msg, SetLevel):
        return MSG_SET_LEVEL, struct.pack(
            "<B", _check_width(msg.level, 0, 255, "level"))
    if isinstance(msg, SetHeatSetpoint):
        return MSG_SET_HEAT_SETPOINT, struct.pack(
            "<i", _check_width(msg.milliwatts, _I32_MIN, _I32_MAX,
                               "milliwatts"))
    if isinstance(msg, SetTempSetpoint):
        return MSG_SET_TEMP_SETPOINT, struct.pack(
            "<i", _check_width(msg.centi_c, _I32_MIN, _I32_MAX, "centi_c"))
    if isinstance(msg, SetPid):
        vals = [_check_width(v, _I32_MIN, _I32_MAX, name)
                for v, name in ((msg.kp_micro, "kp"), (msg.ki_micro, "ki"),
                                (msg.kd_micro, "kd"),
                                (msg.i_limit_micro, "i_limit"))]
        return MSG_SET_PID, struct.pack("<iiii", *vals)
    if isinstance(msg, GetStatus):
        return MSG_GET_STATUS, b""
    if isinstance(msg, Telemetry):
        return MSG_TELEMETRY, struct.pack(
            "<IhhhhhiBBB",
            _check_width(msg.timestamp_ms, 0, 0xFFFFFFFF, "timestamp_ms"),
            _check_width(msg.t_abs_cc, _I16_MIN, _I16_MAX, "t_abs_cc"),
            _check_width(msg.t_emit_cc, _I16_MIN, _I16_MAX, "t_emit_cc"),
            _check_width(msg.t_contact_cc, _I16_MIN, _I16_MAX,
                         "t_contact_cc"),
            _check_width(msg.current_ma, _I16_MIN, _I16_MAX, "current_ma"),
            _check_width(msg.heat_mw, _I16_MIN, _I16_MAX, "heat_mw"),
            _check_width(msg.setpoint_raw, _I32_MIN, _I32_MAX,
                         "setpoint_raw"),
            _check_width(msg.mode, 0, 255, "mode"),
            _check_width(msg.flags, 0, 255, "flags"),
            _check_width(msg.battery_pct, 0, 100, "battery_pct"))
    if isinstance(msg, Ack):
        if len(msg.echo) > MAX_PAYLOAD - 1:
            raise EncodeError("ack echo too long")
        return MSG_ACK, struct.pack("<B", _check_width(
            msg.cmd, 0, 255, "cmd")) + bytes(msg.echo)
    if isinstance(msg, Reject):
        return MSG_REJECT, struct.pack(
            "<BBii", _check_width(msg.cmd, 0, 255, "cmd"),
            _check_width(msg.code, 0, 255, "code"),
            _check_width(msg.minimum, _I32_MIN, _I32_MAX, "minimum"),
            _check_width(msg.maximum, _I32_MIN, _I32_MAX, "maximum"))
    if isinstance(msg, DeviceInfo):
        name = msg.name.encode("utf-8")
        if len(name) > 255 or 5 + len(name) > MAX_PAYLOAD:
            raise EncodeError("device name too long")
        return MSG_DEVICE_INFO, struct.pack(
            "<IB", _check_width(msg.serial, 0, 0xFFFFFFFF, "serial"),
            len(name)) + name
    raise EncodeError(f"cannot encode {type(msg).__name__}")


def build_frame(msg_type: int, payload: bytes) -> bytes:
    """Assemble raw frame bytes; no semantic checks, test rigs use this."""
    if len(payload) > MAX_PAYLOAD:
        raise EncodeError(f"payload length {len(payload)} > {MAX_PAYLOAD}")
    body = struct.pack("<B", msg_type) + payload
    return (struct.pack("<BH", MAGIC, len(payload)) + body
            + struct.pack("<H", crc16(body)))


def encode(msg) -> bytes:
    """Message dataclass to complete frame bytes."""
    msg_type, payload = _encode_payload(msg)
    return build_frame(msg_type, payload)


def message_type(msg) -> int:
    """Wire type byte of a message dataclass instance."""
    return _encode_payload(msg)[0]


def payload_of(msg) -> bytes:
    """Encoded payload bytes of a message, e.g. for Ack echoes."""
    return _encode_payload(msg)[1]


def _require(payload: bytes, n: int, what: str) -> None:
    if len(payload) != n:
        raise BadLength(f"{what}: payload {len(payload)} bytes, want {n}")


def _range_check(value: int, lo: int, hi: int, what: str) -> int:
    if not lo <= value <= hi:
        raise RangeViolation(f"{what} {value} outside [{lo}, {hi}]", lo, hi)
    return value


def _decode_payload(msg_type: int, payload: bytes):
    if msg_type == MSG_ENABLE:
        _require(payload, 1, "Enable")
        return Enable(on=bool(_range_check(payload[0], 0, 1, "on")))
    if msg_type == MSG_SET_MODE:
        _require(payload, 1, "SetMode")
        return SetMode(mode=_range_check(payload[0], 0, 2, "mode"))
    if msg_type == MSG_SET_LEVEL:
        _require(payload, 1, "SetLevel")
        return SetLevel(level=_range_check(payload[0], 0, 4, "level"))
    if msg_type == MSG_SET_HEAT_SETPOINT:
        _require(payload, 4, "SetHeatSetpoint")
        (mw,) = struct.unpack("<i", payload)
        lo, hi = HEAT_SETPOINT_RANGE_MW
        return SetHeatSetpoint(_range_check(mw, lo, hi, "heat setpoint"))
    if msg_type == MSG_SET_TEMP_SETPOINT:
        _require(payload, 4, "SetTempSetpoint")
        (cc,) = struct.unpack("<i", payload)
        lo, hi = TEMP_SETPOINT_RANGE_CC
        return SetTempSetpoint(_range_check(cc, lo, hi, "temp setpoint"))
    if msg_type == MSG_SET_PID:
        _require(payload, 16, "SetPid")
        kp, ki, kd, il = struct.unpack("<iiii", payload)
        _range_check(kp, 0, _I32_MAX, "kp")
        _range_check(ki, 0, _I32_MAX, "ki")
        _range_check(kd, 0, _I32_MAX, "kd")
        _range_check(il, 1, _I32_MAX, "i_limit")
        return SetPid(kp, ki, kd, il)
    if msg_type == MSG_GET_STATUS:
        _require(payload, 0, "GetStatus")
        return GetStatus()
    if msg_type == MSG_TELEMETRY:
        _require(payload, 21, "Telemetry")
        fields = struct.unpack("<IhhhhhiBBB", payload)
        _range_check(fields[7], 0, 2, "mode")
        _range_check(fields[9], 0, 100, "battery_pct")
        return Telemetry(*fields)
    if msg_type == MSG_ACK:
        if len(payload) < 1:
            raise BadLength("Ack: payload empty")
        return Ack(cmd=payload[0], echo=bytes(payload[1:]))
    if msg_type == MSG_REJECT:
        _require(payload, 10, "Reject")
        cmd, code, lo, hi = struct.unpack("<BBii", payload)
        return Reject(cmd, code, lo, hi)
    if msg_type == MSG_DEVICE_INFO:
        if len(payload) < 5:
            raise BadLength("DeviceInfo: payload too short")
        serial, name_len = struct.unpack("<IB", payload[:5])
        if len(payload) != 5 + name_len:
            raise BadLength("DeviceInfo: name length mismatch")
        return DeviceInfo(serial, payload[5:].decode("utf-8"))
    raise UnknownType(f"msg_type 0x{msg_type:02x}")


def decode(buf: bytes):
    """Decode exactly one frame; raises a FrameError subclass on any fault."""
    if len(buf) < 1:
        raise BadLength("empty buffer")
    if buf[0] != MAGIC:
        raise BadMagic(f"magic 0x{buf[0]:02x}, want 0x{MAGIC:02x}")
    if len(buf) < HEADER_LEN:
        raise BadLength(f"truncated header: {len(buf)} bytes")
    (length,) = struct.unpack_from("<H", buf, 1)
    if length > MAX_PAYLOAD:
        raise BadLength(f"payload length {length} > {MAX_PAYLOAD}")
    if len(buf) != FRAME_OVERHEAD + length:
        raise BadLength(
            f"frame is {len(buf)} bytes, length field implies "
            f"{FRAME_OVERHEAD + length}")
    body = buf[3:4 + length]
    (crc,) = struct.unpack_from("<H", buf, 4 + length)
    if crc16(body) != crc:
        raise BadCrc(f"crc 0x{crc:04x}, computed 0x{crc16(body):04x}")
    try:
        return _decode_payload(buf[3], buf[4:4 + length])
    except FrameError as err:
        # Frame was structurally sound, so the fault names a command.
        err.msg_type = buf[3]
        raise


class StreamDecoder:
    """Incremental decoder that survives garbage on the stream.

    feed() returns a list of decoded messages interleaved with
    FrameError instances for everything that had to be skipped.  After
    an error only a single byte is discarded before rescanning for the
    magic, so a valid frame following garbage is always found.
    """

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list:
        self._buf.extend(data)
        events = []
        while True:
            if not self._buf:
                break
            if self._buf[0] != MAGIC:
                idx = self._buf.find(MAGIC)
                skipped = idx if idx >= 0 else len(self._buf)
                del self._buf[:skipped]
                events.append(BadMagic(f"skipped {skipped} bytes"))
                continue
            if len(self._buf) < HEADER_LEN:
                break  # wait for more data
            (length,) = struct.unpack_from("<H", self._buf, 1)
            if length > MAX_PAYLOAD:
                events.append(BadLength(f"payload length {length}"))
                del self._buf[:1]
                continue
            total = FRAME_OVERHEAD + length
            if len(self._buf) < total:
                break  # wait for more data
            frame = bytes(self._buf[:total])
            try:
                events.append(decode(frame))
                del self._buf[:total]
            except BadCrc as err:
                # Could be a false sync point; slide one byte and rescan.
                events.append(err)
                del self._buf[:1]
            except FrameError as err:
                # Framing was sound, content was not; drop the frame.
                events.append(err)
                del self._buf[:total]
        return events

    def pending(self) -> int:
        return len(self._buf)
