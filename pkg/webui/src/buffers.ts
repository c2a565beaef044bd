/**
 * Rolling telemetry buffers behind the strip charts.
 *
 * Samples are kept for a fixed window keyed on the device's own
 * timestamp, and a gap (missed frames, reconnect) is preserved so the
 * chart can lift the pen instead of drawing a lie across it.
 */

import { FLAG_SATURATED, Telemetry } from "./protocol.js";

export interface Sample {
  t: number; // seconds of device time
  v: number;
  sat: boolean;
}

export class ChannelBuffer {
  samples: Sample[] = [];

  constructor(public readonly windowS: number = 60) {}

  push(t: number, v: number, sat: boolean): void {
    const last = this.samples[this.samples.length - 1];
    if (last !== undefined && t <= last.t) {
      // Device restarted or we reconnected to a younger stream: stale
      // points would splice two runs together, so start fresh.
      this.samples = [];
    }
    this.samples.push({ t, v, sat });
    const cutoff = t - this.windowS;
    let drop = 0;
    while (drop < this.samples.length && this.samples[drop].t < cutoff) {
      drop++;
    }
    if (drop > 0) this.samples = this.samples.slice(drop);
  }

  clear(): void {
    this.samples = [];
  }

  get latest(): Sample | null {
    return this.samples[this.samples.length - 1] ?? null;
  }
}

/** Engineering-unit channel values of one telemetry frame. */
export function channelValues(msg: Telemetry): Record<string, number> {
  return {
    t_abs_c: msg.t_abs_cc / 100,
    t_emit_c: msg.t_emit_cc / 100,
    current_a: msg.current_ma / 1000,
    heat_w: msg.heat_mw / 1000,
  };
}

export class TelemetryBuffers {
  readonly channels: Record<string, ChannelBuffer> = {
    t_abs_c: new ChannelBuffer(),
    t_emit_c: new ChannelBuffer(),
    current_a: new ChannelBuffer(),
    heat_w: new ChannelBuffer(),
  };

  push(msg: Telemetry): void {
    const t = msg.timestamp_ms / 1000;
    const sat = (msg.flags & FLAG_SATURATED) !== 0;
    for (const [key, value] of Object.entries(channelValues(msg))) {
      this.channels[key].push(t, value, sat);
    }
  }

  clear(): void {
    for (const buf of Object.values(this.channels)) buf.clear();
  }
}
