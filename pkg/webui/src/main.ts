/**
 * DOM wiring: one socket, one reducer, three charts.
 *
 * Every user action turns into a frame on the wire; everything shown
 * comes back out of telemetry or acks. The render pass is a function
 * of PanelState alone, so the panel can never show a state the device
 * did not confirm.
 */

import { TelemetryBuffers } from "./buffers.js";
import { StripChart } from "./charts.js";
import { PanelSocket } from "./connection.js";
import {
  Command,
  FLAG_COMPLIANCE,
  FLAG_SATURATED,
  HEAT_RANGE_MW,
  TEMP_RANGE_CC,
} from "./protocol.js";
import { PanelState, initialState, reduce } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const endpoint = el<HTMLInputElement>("endpoint");
const connectBtn = el<HTMLButtonElement>("connect");
const statusPill = el<HTMLSpanElement>("status");
const devName = el<HTMLSpanElement>("dev-name");
const battery = el<HTMLProgressElement>("battery");
const batteryPct = el<HTMLSpanElement>("battery-pct");
const modeText = el<HTMLSpanElement>("mode-text");
const setpointText = el<HTMLSpanElement>("setpoint-text");
const badgeSat = el<HTMLSpanElement>("badge-saturated");
const badgeComp = el<HTMLSpanElement>("badge-compliance");
const noteLine = el<HTMLDivElement>("note");

const btnOn = el<HTMLButtonElement>("btn-on");
const btnOff = el<HTMLButtonElement>("btn-off");
const modeRadios = Array.from(
  document.querySelectorAll<HTMLInputElement>("input[name=mode]"));

const heatSlider = el<HTMLInputElement>("heat-slider");
const heatNumber = el<HTMLInputElement>("heat-number");
const heatSend = el<HTMLButtonElement>("heat-send");
const heatError = el<HTMLDivElement>("heat-error");
const tempSlider = el<HTMLInputElement>("temp-slider");
const tempNumber = el<HTMLInputElement>("temp-number");
const tempSend = el<HTMLButtonElement>("temp-send");
const tempError = el<HTMLDivElement>("temp-error");
const levelButtons = Array.from(
  document.querySelectorAll<HTMLButtonElement>("button[data-level]"));

let state: PanelState = initialState;
let socket: PanelSocket | null = null;
const buffers = new TelemetryBuffers();
let chartsDirty = true;

const charts = [
  new StripChart(el<HTMLCanvasElement>("chart-temps"), {
    title: "face temperatures",
    unit: "°C",
    series: [
      { buffer: buffers.channels.t_abs_c, label: "contact", color: "#e05252" },
      { buffer: buffers.channels.t_emit_c, label: "sink", color: "#e0a152" },
    ],
  }),
  new StripChart(el<HTMLCanvasElement>("chart-current"), {
    title: "drive current",
    unit: "A",
    series: [{ buffer: buffers.channels.current_a, label: "current",
               color: "#52a8e0" }],
  }),
  new StripChart(el<HTMLCanvasElement>("chart-heat"), {
    title: "heat drawn from skin",
    unit: "W",
    series: [{ buffer: buffers.channels.heat_w, label: "heat",
               color: "#65c97a" }],
  }),
];

const MODE_NAMES = ["off", "heat flow", "temperature"];

function dispatch(event: Parameters<typeof reduce>[1]): void {
  state = reduce(state, event);
  render();
}

function send(cmd: Command): void {
  socket?.send(cmd);
}

function render(): void {
  statusPill.textContent = state.phase;
  statusPill.dataset.phase = state.phase;

  devName.textContent = state.info
    ? `${state.info.name} #${state.info.serial.toString(16)
        .toUpperCase().padStart(4, "0")}`
    : "—";
  battery.value = state.battery ?? 0;
  batteryPct.textContent = state.battery === null
    ? "—" : `${state.battery}%`;

  modeText.textContent = state.enabled
    ? MODE_NAMES[state.mode] : "output off";
  if (state.telemetry === null || state.mode === 0) {
    setpointText.textContent = "—";
  } else if (state.mode === 1) {
    setpointText.textContent = `${(state.setpointRaw / 1000).toFixed(1)} W`;
  } else {
    setpointText.textContent =
      `${(state.setpointRaw / 100).toFixed(1)} °C`;
  }
  badgeSat.hidden = (state.flags & FLAG_SATURATED) === 0;
  badgeComp.hidden = (state.flags & FLAG_COMPLIANCE) === 0;

  const connected = state.phase === "connected";
  btnOn.disabled = !connected;
  btnOff.disabled = !connected;
  for (const radio of modeRadios) {
    radio.disabled = !connected;
    radio.checked = Number(radio.value) === state.mode && state.enabled;
  }
  // Setpoints need a live, enabled device to mean anything.
  for (const node of [heatSlider, heatNumber, heatSend,
                      tempSlider, tempNumber, tempSend]) {
    node.disabled = !connected || !state.enabled;
  }
  for (const btn of levelButtons) {
    btn.disabled = !connected || !state.enabled || state.mode === 0;
  }

  heatError.textContent = state.heatError ?? "";
  tempError.textContent = state.tempError ?? "";
  noteLine.textContent = state.note ?? "";
}

function connect(): void {
  socket?.close();
  buffers.clear();
  chartsDirty = true;
  dispatch({ kind: "connect-start" });
  socket = new PanelSocket(endpoint.value, {
    onOpen() {
      dispatch({ kind: "socket-open" });
      send({ type: "GetStatus" });
    },
    onClose() {
      dispatch({ kind: "socket-close" });
    },
    onMessage(msg) {
      if (msg.type === "Telemetry") {
        buffers.push(msg);
        chartsDirty = true;
      }
      dispatch({ kind: "message", msg });
    },
    onFault(err) {
      console.warn("frame fault:", err.name, err.message);
    },
  });
}

connectBtn.addEventListener("click", connect);
btnOn.addEventListener("click", () => send({ type: "Enable", on: true }));
btnOff.addEventListener("click", () => send({ type: "Enable", on: false }));
for (const radio of modeRadios) {
  radio.addEventListener("change", () => {
    if (radio.checked) {
      send({ type: "SetMode", mode: Number(radio.value) });
    }
  });
}

function pair(slider: HTMLInputElement, num: HTMLInputElement): void {
  slider.addEventListener("input", () => { num.value = slider.value; });
  num.addEventListener("input", () => {
    const v = Number(num.value);
    if (isFinite(v)) slider.value = num.value;
  });
}
pair(heatSlider, heatNumber);
pair(tempSlider, tempNumber);

// Out-of-range values are sent as-is: the device answers Reject with
// the legal bounds, and that reply is what renders the inline error.
// The panel does not second-guess the wire contract locally.
const I32_MIN = -2147483648;
const I32_MAX = 2147483647;

heatSend.addEventListener("click", () => {
  const watts = Number(heatNumber.value);
  if (!isFinite(watts)) return;
  const mw = Math.round(watts * 1000);
  if (mw < I32_MIN || mw > I32_MAX) {
    // Does not even fit the wire field; show the same bounds the
    // device would have answered with.
    dispatch({ kind: "message", msg: {
      type: "Reject", cmd: 0x04, code: 1,
      minimum: HEAT_RANGE_MW[0], maximum: HEAT_RANGE_MW[1] } });
    return;
  }
  send({ type: "SetMode", mode: 1 });
  send({ type: "SetHeatSetpoint", milliwatts: mw });
});
tempSend.addEventListener("click", () => {
  const degC = Number(tempNumber.value);
  if (!isFinite(degC)) return;
  const cc = Math.round(degC * 100);
  if (cc < I32_MIN || cc > I32_MAX) {
    dispatch({ kind: "message", msg: {
      type: "Reject", cmd: 0x05, code: 1,
      minimum: TEMP_RANGE_CC[0], maximum: TEMP_RANGE_CC[1] } });
    return;
  }
  send({ type: "SetMode", mode: 2 });
  send({ type: "SetTempSetpoint", centi_c: cc });
});
for (const btn of levelButtons) {
  btn.addEventListener("click", () =>
    send({ type: "SetLevel", level: Number(btn.dataset.level) }));
}

function frame(): void {
  if (chartsDirty) {
    for (const chart of charts) chart.draw();
    chartsDirty = false;
  }
  requestAnimationFrame(frame);
}

render();
requestAnimationFrame(frame);
