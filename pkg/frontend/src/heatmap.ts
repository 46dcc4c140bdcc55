// Pure view-model for the posterior heatmap.  Bins are the literal grid
// cells of the two chosen axes, no interpolation: each cell carries the
// service's probability untouched and a color derived from it.

import type { SlicePayload } from "./api.js";

export interface HeatmapCell {
  xi: number;
  yi: number;
  p: number;
  color: string;
}

export interface HeatmapMark {
  xi: number;
  yi: number;
  x: number;
  y: number;
  outcome: 0 | 1;
  origin: string;
}

export interface HeatmapModel {
  axisX: string;
  axisY: string;
  columns: number;
  rows: number;
  cells: HeatmapCell[];
  marks: HeatmapMark[];
}

// dark blue -> teal -> warm yellow
const STOPS: Array<[number, [number, number, number]]> = [
  [0.0, [14, 22, 52]],
  [0.5, [24, 120, 130]],
  [1.0, [248, 222, 80]],
];

export function colorFor(p: number): string {
  const t = Math.min(1, Math.max(0, p));
  for (let i = 1; i < STOPS.length; i++) {
    const [t1, c1] = STOPS[i]!;
    const [t0, c0] = STOPS[i - 1]!;
    if (t <= t1) {
      const f = t1 === t0 ? 0 : (t - t0) / (t1 - t0);
      const mix = c0.map((a, j) => Math.round(a + f * (c1[j]! - a)));
      return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
    }
  }
  const last = STOPS[STOPS.length - 1]![1];
  return `rgb(${last[0]},${last[1]},${last[2]})`;
}

function gridIndex(values: number[], v: number): number {
  const exact = values.indexOf(v);
  if (exact >= 0) return exact;
  // the service sends marks lying exactly on grid values; nearest is a
  // defensive fallback only
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    if (Math.abs(values[i]! - v) < Math.abs(values[best]! - v)) best = i;
  }
  return best;
}

export function buildHeatmap(slice: SlicePayload): HeatmapModel {
  const cells: HeatmapCell[] = [];
  for (let yi = 0; yi < slice.y_values.length; yi++) {
    const row = slice.matrix[yi] ?? [];
    for (let xi = 0; xi < slice.x_values.length; xi++) {
      const p = row[xi] ?? 0;
      cells.push({ xi, yi, p, color: colorFor(p) });
    }
  }
  const marks: HeatmapMark[] = slice.observations.map((o) => ({
    xi: gridIndex(slice.x_values, o.x),
    yi: gridIndex(slice.y_values, o.y),
    x: o.x,
    y: o.y,
    outcome: o.outcome,
    origin: o.origin,
  }));
  return {
    axisX: slice.axis_x,
    axisY: slice.axis_y,
    columns: slice.x_values.length,
    rows: slice.y_values.length,
    cells,
    marks,
  };
}
