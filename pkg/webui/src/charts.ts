/**
 * Hand-rolled canvas strip charts: a sliding 60 s window, one or two
 * series per chart, saturation flags drawn as markers, and explicit
 * breaks where telemetry was missing.
 */

import { ChannelBuffer, Sample } from "./buffers.js";

export interface SeriesSpec {
  buffer: ChannelBuffer;
  label: string;
  color: string;
}

export interface ChartSpec {
  title: string;
  unit: string;
  series: SeriesSpec[];
}

// Telemetry runs at 10 Hz; anything over ~3 missed frames is a hole.
const GAP_S = 0.35;
const PAD = { left: 44, right: 10, top: 20, bottom: 18 };

function niceRange(lo: number, hi: number): [number, number] {
  if (!isFinite(lo) || !isFinite(hi)) return [0, 1];
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const margin = 0.1 * (hi - lo);
  return [lo - margin, hi + margin];
}

export class StripChart {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement,
              private spec: ChartSpec,
              private windowS: number = 60) {
    const ctx = canvas.getContext("2d");
    if (ctx === null) throw new Error("no 2d context");
    this.ctx = ctx;
  }

  draw(): void {
    const { ctx, canvas, spec } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#11151c";
    ctx.fillRect(0, 0, w, h);

    const samples = spec.series.flatMap(s => s.buffer.samples);
    const tEnd = samples.length
      ? Math.max(...samples.map(s => s.t))
      : this.windowS;
    const tStart = tEnd - this.windowS;
    const [vLo, vHi] = niceRange(
      Math.min(...samples.map(s => s.v)),
      Math.max(...samples.map(s => s.v)));

    const x = (t: number) =>
      PAD.left + ((t - tStart) / this.windowS) * (w - PAD.left - PAD.right);
    const y = (v: number) =>
      h - PAD.bottom - ((v - vLo) / (vHi - vLo)) * (h - PAD.top - PAD.bottom);

    // frame, gridlines, y labels
    ctx.strokeStyle = "#2a3140";
    ctx.fillStyle = "#8b93a5";
    ctx.font = "10px system-ui, sans-serif";
    ctx.lineWidth = 1;
    for (let i = 0; i <= 2; i++) {
      const v = vLo + (i / 2) * (vHi - vLo);
      const yy = y(v);
      ctx.beginPath();
      ctx.moveTo(PAD.left, yy);
      ctx.lineTo(w - PAD.right, yy);
      ctx.stroke();
      ctx.fillText(v.toFixed(Math.abs(vHi - vLo) < 5 ? 1 : 0), 4, yy + 3);
    }

    ctx.fillStyle = "#c7cdd9";
    ctx.font = "11px system-ui, sans-serif";
    ctx.fillText(`${spec.title} [${spec.unit}]`, PAD.left, 12);

    let legendX = w - PAD.right;
    for (const series of [...spec.series].reverse()) {
      const text = series.label;
      legendX -= ctx.measureText(text).width + 18;
      ctx.fillStyle = series.color;
      ctx.fillRect(legendX, 5, 10, 3);
      ctx.fillStyle = "#8b93a5";
      ctx.fillText(text, legendX + 13, 12);
    }

    for (const series of spec.series) {
      this.polyline(series.buffer.samples, series.color, x, y);
    }
  }

  private polyline(samples: Sample[], color: string,
                   x: (t: number) => number,
                   y: (v: number) => number): void {
    const { ctx } = this;
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let penDown = false;
    let prev: Sample | null = null;
    for (const s of samples) {
      if (prev !== null && s.t - prev.t > GAP_S) penDown = false;
      if (penDown) {
        ctx.lineTo(x(s.t), y(s.v));
      } else {
        ctx.moveTo(x(s.t), y(s.v));
        penDown = true;
      }
      prev = s;
    }
    ctx.stroke();

    // saturation markers above the affected points, sparsely
    ctx.fillStyle = "#e6b450";
    for (let i = 0; i < samples.length; i += 2) {
      const s = samples[i];
      if (!s.sat) continue;
      ctx.beginPath();
      ctx.arc(x(s.t), y(s.v) - 5, 1.8, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
