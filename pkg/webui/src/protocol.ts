/**
 * Binary framed wire protocol, browser side.
 *
 * Byte-for-byte the same frames the device speaks over TCP; see
 * ../protocol.md for the layout. Agreement with the reference codec
 * is proven against shared/protocol-vectors.json in the tests.
 *
 * Frame: 0x53 magic, u16 LE payload length, type byte, payload,
 * CRC-16/CCITT-FALSE (LE) over type + payload.
 */

export const MAGIC = 0x53;
export const MAX_PAYLOAD = 256;
const FRAME_OVERHEAD = 6;

export const FLAG_SATURATED = 0x01;
export const FLAG_COMPLIANCE = 0x02;
export const FLAG_ENABLED = 0x04;

export const REJECT_RANGE = 1;
export const REJECT_UNKNOWN = 2;
export const REJECT_STATE = 3;

export const HEAT_RANGE_MW: readonly [number, number] = [-9000, 9000];
export const TEMP_RANGE_CC: readonly [number, number] = [1500, 4200];

const MSG_ENABLE = 0x01;
const MSG_SET_MODE = 0x02;
const MSG_SET_LEVEL = 0x03;
const MSG_SET_HEAT_SETPOINT = 0x04;
const MSG_SET_TEMP_SETPOINT = 0x05;
const MSG_SET_PID = 0x06;
const MSG_GET_STATUS = 0x07;
const MSG_TELEMETRY = 0x10;
const MSG_ACK = 0x11;
const MSG_REJECT = 0x12;
const MSG_DEVICE_INFO = 0x13;

// Field names follow the wire reference so the shared vectors compare
// structurally.

export interface Enable { type: "Enable"; on: boolean }
export interface SetMode { type: "SetMode"; mode: number }
export interface SetLevel { type: "SetLevel"; level: number }
export interface SetHeatSetpoint { type: "SetHeatSetpoint"; milliwatts: number }
export interface SetTempSetpoint { type: "SetTempSetpoint"; centi_c: number }
export interface SetPid {
  type: "SetPid";
  kp_micro: number;
  ki_micro: number;
  kd_micro: number;
  i_limit_micro: number;
}
export interface GetStatus { type: "GetStatus" }

export interface Telemetry {
  type: "Telemetry";
  timestamp_ms: number;
  t_abs_cc: number;
  t_emit_cc: number;
  t_contact_cc: number;
  current_ma: number;
  heat_mw: number;
  setpoint_raw: number;
  mode: number;
  flags: number;
  battery_pct: number;
}
export interface Ack { type: "Ack"; cmd: number; echo: Uint8Array }
export interface Reject {
  type: "Reject";
  cmd: number;
  code: number;
  minimum: number;
  maximum: number;
}
export interface DeviceInfo { type: "DeviceInfo"; serial: number; name: string }

export type Command =
  | Enable | SetMode | SetLevel | SetHeatSetpoint | SetTempSetpoint
  | SetPid | GetStatus;
export type Reply = Telemetry | Ack | Reject | DeviceInfo;
export type Message = Command | Reply;

export class FrameError extends Error {
  msgType: number | null = null;
  constructor(message: string) {
    super(message);
    this.name = "FrameError";
  }
}
export class BadMagic extends FrameError {
  constructor(message: string) { super(message); this.name = "BadMagic"; }
}
export class BadLength extends FrameError {
  constructor(message: string) { super(message); this.name = "BadLength"; }
}
export class BadCrc extends FrameError {
  constructor(message: string) { super(message); this.name = "BadCrc"; }
}
export class UnknownType extends FrameError {
  constructor(message: string) { super(message); this.name = "UnknownType"; }
}
export class RangeViolation extends FrameError {
  constructor(message: string, public minimum: number,
              public maximum: number) {
    super(message);
    this.name = "RangeViolation";
  }
}

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection.
const CRC_TABLE = new Uint16Array(256);
for (let byte = 0; byte < 256; byte++) {
  let crc = byte << 8;
  for (let bit = 0; bit < 8; bit++) {
    crc = crc & 0x8000 ? ((crc << 1) ^ 0x1021) & 0xffff : (crc << 1) & 0xffff;
  }
  CRC_TABLE[byte] = crc;
}

export function crc16(data: Uint8Array): number {
  let crc = 0xffff;
  for (const byte of data) {
    crc = ((crc << 8) & 0xffff) ^ CRC_TABLE[(crc >> 8) ^ byte];
  }
  return crc;
}

class Writer {
  private view: DataView;
  private pos = 0;
  constructor(size: number, private buf = new Uint8Array(size)) {
    this.view = new DataView(buf.buffer);
  }
  u8(v: number): this { this.view.setUint8(this.pos, v); this.pos += 1; return this; }
  i16(v: number): this { this.view.setInt16(this.pos, v, true); this.pos += 2; return this; }
  u32(v: number): this { this.view.setUint32(this.pos, v, true); this.pos += 4; return this; }
  i32(v: number): this { this.view.setInt32(this.pos, v, true); this.pos += 4; return this; }
  bytes(v: Uint8Array): this { this.buf.set(v, this.pos); this.pos += v.length; return this; }
  done(): Uint8Array {
    if (this.pos !== this.buf.length) {
      throw new Error(`wrote ${this.pos} of ${this.buf.length} bytes`);
    }
    return this.buf;
  }
}

function encodePayload(msg: Message): [number, Uint8Array] {
  switch (msg.type) {
    case "Enable":
      return [MSG_ENABLE, new Writer(1).u8(msg.on ? 1 : 0).done()];
    case "SetMode":
      return [MSG_SET_MODE, new Writer(1).u8(msg.mode).done()];
    case "SetLevel":
      return [MSG_SET_LEVEL, new Writer(1).u8(msg.level).done()];
    case "SetHeatSetpoint":
      return [MSG_SET_HEAT_SETPOINT, new Writer(4).i32(msg.milliwatts).done()];
    case "SetTempSetpoint":
      return [MSG_SET_TEMP_SETPOINT, new Writer(4).i32(msg.centi_c).done()];
    case "SetPid":
      return [MSG_SET_PID, new Writer(16)
        .i32(msg.kp_micro).i32(msg.ki_micro)
        .i32(msg.kd_micro).i32(msg.i_limit_micro).done()];
    case "GetStatus":
      return [MSG_GET_STATUS, new Uint8Array(0)];
    case "Telemetry":
      return [MSG_TELEMETRY, new Writer(21)
        .u32(msg.timestamp_ms).i16(msg.t_abs_cc).i16(msg.t_emit_cc)
        .i16(msg.t_contact_cc).i16(msg.current_ma).i16(msg.heat_mw)
        .i32(msg.setpoint_raw).u8(msg.mode).u8(msg.flags)
        .u8(msg.battery_pct).done()];
    case "Ack":
      return [MSG_ACK, new Writer(1 + msg.echo.length)
        .u8(msg.cmd).bytes(msg.echo).done()];
    case "Reject":
      return [MSG_REJECT, new Writer(10)
        .u8(msg.cmd).u8(msg.code).i32(msg.minimum).i32(msg.maximum).done()];
    case "DeviceInfo": {
      const name = new TextEncoder().encode(msg.name);
      return [MSG_DEVICE_INFO, new Writer(5 + name.length)
        .u32(msg.serial).u8(name.length).bytes(name).done()];
    }
  }
}

export function encode(msg: Message): Uint8Array {
  const [msgType, payload] = encodePayload(msg);
  const frame = new Uint8Array(FRAME_OVERHEAD + payload.length);
  const view = new DataView(frame.buffer);
  frame[0] = MAGIC;
  view.setUint16(1, payload.length, true);
  frame[3] = msgType;
  frame.set(payload, 4);
  view.setUint16(4 + payload.length,
                 crc16(frame.subarray(3, 4 + payload.length)), true);
  return frame;
}

function rangeCheck(value: number, lo: number, hi: number,
                    what: string): number {
  if (value < lo || value > hi) {
    throw new RangeViolation(`${what} ${value} outside [${lo}, ${hi}]`,
                             lo, hi);
  }
  return value;
}

function requireLen(payload: Uint8Array, n: number, what: string): void {
  if (payload.length !== n) {
    throw new BadLength(`${what}: payload ${payload.length} bytes, want ${n}`);
  }
}

function decodePayload(msgType: number, payload: Uint8Array): Message {
  const view = new DataView(payload.buffer, payload.byteOffset,
                            payload.byteLength);
  switch (msgType) {
    case MSG_ENABLE:
      requireLen(payload, 1, "Enable");
      return { type: "Enable",
               on: rangeCheck(payload[0], 0, 1, "on") === 1 };
    case MSG_SET_MODE:
      requireLen(payload, 1, "SetMode");
      return { type: "SetMode", mode: rangeCheck(payload[0], 0, 2, "mode") };
    case MSG_SET_LEVEL:
      requireLen(payload, 1, "SetLevel");
      return { type: "SetLevel",
               level: rangeCheck(payload[0], 0, 4, "level") };
    case MSG_SET_HEAT_SETPOINT:
      requireLen(payload, 4, "SetHeatSetpoint");
      return { type: "SetHeatSetpoint",
               milliwatts: rangeCheck(view.getInt32(0, true),
                                      HEAT_RANGE_MW[0], HEAT_RANGE_MW[1],
                                      "heat setpoint") };
    case MSG_SET_TEMP_SETPOINT:
      requireLen(payload, 4, "SetTempSetpoint");
      return { type: "SetTempSetpoint",
               centi_c: rangeCheck(view.getInt32(0, true),
                                   TEMP_RANGE_CC[0], TEMP_RANGE_CC[1],
                                   "temp setpoint") };
    case MSG_SET_PID: {
      requireLen(payload, 16, "SetPid");
      const [kp, ki, kd, il] = [0, 4, 8, 12].map(o => view.getInt32(o, true));
      rangeCheck(kp, 0, 0x7fffffff, "kp");
      rangeCheck(ki, 0, 0x7fffffff, "ki");
      rangeCheck(kd, 0, 0x7fffffff, "kd");
      rangeCheck(il, 1, 0x7fffffff, "i_limit");
      return { type: "SetPid", kp_micro: kp, ki_micro: ki, kd_micro: kd,
               i_limit_micro: il };
    }
    case MSG_GET_STATUS:
      requireLen(payload, 0, "GetStatus");
      return { type: "GetStatus" };
    case MSG_TELEMETRY:
      requireLen(payload, 21, "Telemetry");
      return {
        type: "Telemetry",
        timestamp_ms: view.getUint32(0, true),
        t_abs_cc: view.getInt16(4, true),
        t_emit_cc: view.getInt16(6, true),
        t_contact_cc: view.getInt16(8, true),
        current_ma: view.getInt16(10, true),
        heat_mw: view.getInt16(12, true),
        setpoint_raw: view.getInt32(14, true),
        mode: rangeCheck(payload[18], 0, 2, "mode"),
        flags: payload[19],
        battery_pct: rangeCheck(payload[20], 0, 100, "battery_pct"),
      };
    case MSG_ACK:
      if (payload.length < 1) throw new BadLength("Ack: payload empty");
      return { type: "Ack", cmd: payload[0], echo: payload.slice(1) };
    case MSG_REJECT:
      requireLen(payload, 10, "Reject");
      return { type: "Reject", cmd: payload[0], code: payload[1],
               minimum: view.getInt32(2, true),
               maximum: view.getInt32(6, true) };
    case MSG_DEVICE_INFO: {
      if (payload.length < 5) {
        throw new BadLength("DeviceInfo: payload too short");
      }
      const nameLen = payload[4];
      if (payload.length !== 5 + nameLen) {
        throw new BadLength("DeviceInfo: name length mismatch");
      }
      return { type: "DeviceInfo", serial: view.getUint32(0, true),
               name: new TextDecoder().decode(payload.subarray(5)) };
    }
    default:
      throw new UnknownType(
        `msg_type 0x${msgType.toString(16).padStart(2, "0")}`);
  }
}

/** Decode exactly one frame; throws a FrameError subclass on any fault. */
export function decode(buf: Uint8Array): Message {
  if (buf.length < 1) throw new BadLength("empty buffer");
  if (buf[0] !== MAGIC) {
    throw new BadMagic(`magic 0x${buf[0].toString(16)}, want 0x53`);
  }
  if (buf.length < 4) throw new BadLength(`truncated header: ${buf.length}`);
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const length = view.getUint16(1, true);
  if (length > MAX_PAYLOAD) {
    throw new BadLength(`payload length ${length} > ${MAX_PAYLOAD}`);
  }
  if (buf.length !== FRAME_OVERHEAD + length) {
    throw new BadLength(`frame is ${buf.length} bytes, length field ` +
                        `implies ${FRAME_OVERHEAD + length}`);
  }
  const body = buf.subarray(3, 4 + length);
  const crc = view.getUint16(4 + length, true);
  if (crc16(body) !== crc) {
    throw new BadCrc(`crc 0x${crc.toString(16)}, computed ` +
                     `0x${crc16(body).toString(16)}`);
  }
  try {
    return decodePayload(buf[3], buf.subarray(4, 4 + length));
  } catch (err) {
    if (err instanceof FrameError) err.msgType = buf[3];
    throw err;
  }
}

/**
 * Incremental decoder that survives garbage on the stream: scans to
 * the next magic byte, slides one byte on CRC failures (false sync),
 * and consumes whole frames whose framing was sound but content was
 * not. feed() returns decoded messages interleaved with FrameErrors.
 */
export class StreamDecoder {
  private buf = new Uint8Array(0);

  feed(data: Uint8Array): Array<Message | FrameError> {
    const joined = new Uint8Array(this.buf.length + data.length);
    joined.set(this.buf);
    joined.set(data, this.buf.length);
    this.buf = joined;

    const events: Array<Message | FrameError> = [];
    for (;;) {
      if (this.buf.length === 0) break;
      if (this.buf[0] !== MAGIC) {
        const idx = this.buf.indexOf(MAGIC);
        const skipped = idx >= 0 ? idx : this.buf.length;
        this.buf = this.buf.subarray(skipped);
        events.push(new BadMagic(`skipped ${skipped} bytes`));
        continue;
      }
      if (this.buf.length < 4) break;
      const length = this.buf[1] | (this.buf[2] << 8);
      if (length > MAX_PAYLOAD) {
        events.push(new BadLength(`payload length ${length}`));
        this.buf = this.buf.subarray(1);
        continue;
      }
      const total = FRAME_OVERHEAD + length;
      if (this.buf.length < total) break;
      const frame = this.buf.slice(0, total);
      try {
        events.push(decode(frame));
        this.buf = this.buf.subarray(total);
      } catch (err) {
        if (err instanceof BadCrc) {
          events.push(err);
          this.buf = this.buf.subarray(1);
        } else if (err instanceof FrameError) {
          events.push(err);
          this.buf = this.buf.subarray(total);
        } else {
          throw err;
        }
      }
    }
    return events;
  }

  pending(): number {
    return this.buf.length;
  }
}

export function toHex(data: Uint8Array): string {
  return Array.from(data, b => b.toString(16).padStart(2, "0")).join("");
}

export function fromHex(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}
