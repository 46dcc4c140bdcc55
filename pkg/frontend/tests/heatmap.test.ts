import { describe, expect, it } from "vitest";

import type { SlicePayload } from "../src/api.js";
import { buildHeatmap, colorFor } from "../src/heatmap.js";

const slice: SlicePayload = {
  axis_x: "x",
  axis_y: "y",
  x_values: [0, 1, 2],
  y_values: [0, 1],
  matrix: [
    [0.05, 0.2, 0.05],
    [0.35, 0.05, 0.9],
  ],
  observations: [
    { x: 1, y: 0, outcome: 1, origin: "suggested" },
    { x: 2, y: 1, outcome: 0, origin: "seed" },
  ],
  state_version: 5,
};

describe("heatmap model", () => {
  it("passes every probability through untouched, cell for cell", () => {
    const model = buildHeatmap(slice);
    expect(model.columns).toBe(3);
    expect(model.rows).toBe(2);
    expect(model.cells).toHaveLength(6);
    for (const cell of model.cells) {
      // the client computes no probabilities: the cell value IS the matrix value
      expect(cell.p).toBe(slice.matrix[cell.yi]![cell.xi]);
    }
  });

  it("keeps cells in row-major order over the literal grid", () => {
    const model = buildHeatmap(slice);
    const coords = model.cells.map((c) => [c.xi, c.yi]);
    expect(coords).toEqual([
      [0, 0], [1, 0], [2, 0],
      [0, 1], [1, 1], [2, 1],
    ]);
  });

  it("places overlay marks on their exact grid cells with outcomes intact", () => {
    const model = buildHeatmap(slice);
    expect(model.marks).toEqual([
      { xi: 1, yi: 0, x: 1, y: 0, outcome: 1, origin: "suggested" },
      { xi: 2, yi: 1, x: 2, y: 1, outcome: 0, origin: "seed" },
    ]);
  });

  it("renders an empty-data field uniformly", () => {
    const uniform: SlicePayload = {
      ...slice,
      matrix: [
        [0.05, 0.05, 0.05],
        [0.05, 0.05, 0.05],
      ],
      observations: [],
    };
    const model = buildHeatmap(uniform);
    const colors = new Set(model.cells.map((c) => c.color));
    expect(colors.size).toBe(1);
    expect(model.marks).toHaveLength(0);
  });
});

describe("color scale", () => {
  it("is valid css and clamps out-of-range input", () => {
    for (const p of [-1, 0, 0.25, 0.5, 0.7, 1, 2]) {
      expect(colorFor(p)).toMatch(/^rgb\(\d+,\d+,\d+\)$/);
    }
    expect(colorFor(-5)).toBe(colorFor(0));
    expect(colorFor(5)).toBe(colorFor(1));
  });

  it("separates low from high probability", () => {
    expect(colorFor(0)).not.toBe(colorFor(1));
    expect(colorFor(0.05)).not.toBe(colorFor(0.9));
  });
});
