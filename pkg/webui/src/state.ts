/**
 * Panel session state and its reducer.
 *
 * The invariant everything here serves: UI state derives only from
 * decoded device traffic (telemetry, acks, rejects), never from a
 * locally assumed success. Sending a command changes nothing until
 * the device confirms it.
 */

import {
  FLAG_ENABLED,
  Message,
  REJECT_RANGE,
  REJECT_STATE,
  Reject,
  Telemetry,
} from "./protocol.js";

export type Phase = "idle" | "connecting" | "connected" | "disconnected";

export interface PanelState {
  phase: Phase;
  info: { serial: number; name: string } | null;
  enabled: boolean;
  mode: number; // 0 off, 1 heat, 2 temperature, per telemetry
  setpointRaw: number;
  flags: number;
  battery: number | null;
  telemetry: Telemetry | null;
  heatError: string | null; // inline message under the heat control
  tempError: string | null; // inline message under the temp control
  note: string | null; // anything else the device refused
}

export const initialState: PanelState = {
  phase: "idle",
  info: null,
  enabled: false,
  mode: 0,
  setpointRaw: 0,
  flags: 0,
  battery: null,
  telemetry: null,
  heatError: null,
  tempError: null,
  note: null,
};

export type PanelEvent =
  | { kind: "connect-start" }
  | { kind: "socket-open" }
  | { kind: "socket-close" }
  | { kind: "message"; msg: Message };

const MSG_SET_HEAT_SETPOINT = 0x04;
const MSG_SET_TEMP_SETPOINT = 0x05;

function rejectText(msg: Reject): string {
  if (msg.code === REJECT_RANGE) {
    if (msg.cmd === MSG_SET_HEAT_SETPOINT) {
      return `out of range; legal range [${msg.minimum / 1000}, ` +
             `${msg.maximum / 1000}] W`;
    }
    if (msg.cmd === MSG_SET_TEMP_SETPOINT) {
      return `out of range; legal range [${msg.minimum / 100}, ` +
             `${msg.maximum / 100}] °C`;
    }
    return `out of range [${msg.minimum}, ${msg.maximum}]`;
  }
  if (msg.code === REJECT_STATE) {
    return "refused: enable the device and select a mode first";
  }
  return `command 0x${msg.cmd.toString(16)} not understood`;
}

function applyMessage(state: PanelState, msg: Message): PanelState {
  switch (msg.type) {
    case "DeviceInfo":
      return { ...state, info: { serial: msg.serial, name: msg.name } };
    case "Telemetry":
      return {
        ...state,
        telemetry: msg,
        enabled: (msg.flags & FLAG_ENABLED) !== 0,
        mode: msg.mode,
        setpointRaw: msg.setpoint_raw,
        flags: msg.flags,
        battery: msg.battery_pct,
      };
    case "Ack":
      // A confirmed command clears the complaint on its own control.
      if (msg.cmd === MSG_SET_HEAT_SETPOINT) {
        return { ...state, heatError: null, note: null };
      }
      if (msg.cmd === MSG_SET_TEMP_SETPOINT) {
        return { ...state, tempError: null, note: null };
      }
      return { ...state, note: null };
    case "Reject": {
      const text = rejectText(msg);
      if (msg.cmd === MSG_SET_HEAT_SETPOINT && msg.code === REJECT_RANGE) {
        return { ...state, heatError: text };
      }
      if (msg.cmd === MSG_SET_TEMP_SETPOINT && msg.code === REJECT_RANGE) {
        return { ...state, tempError: text };
      }
      return { ...state, note: text };
    }
    default:
      return state; // commands echoed on the wire concern us not
  }
}

export function reduce(state: PanelState, event: PanelEvent): PanelState {
  switch (event.kind) {
    case "connect-start":
      return { ...initialState, phase: "connecting" };
    case "socket-open":
      return { ...state, phase: "connected", note: null };
    case "socket-close":
      // Controls must drop dead; telemetry-derived fields are stale
      // the moment the stream stops.
      return {
        ...state,
        phase: "disconnected",
        enabled: false,
        telemetry: null,
        heatError: null,
        tempError: null,
      };
    case "message":
      return applyMessage(state, event.msg);
  }
}
