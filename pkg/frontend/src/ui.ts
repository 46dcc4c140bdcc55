// DOM rendering.  Everything here is a projection of DashboardStore; no
// campaign math happens in this file.

import type { AxisInfo, Suggestion } from "./api.js";
import { buildHeatmap, colorFor } from "./heatmap.js";
import type { DashboardStore } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : String(Number(v.toPrecision(6)));
}

export interface SliceSelection {
  x: string;
  y: string;
  pins: Record<string, number>;
}

export function defaultSelection(axes: AxisInfo[]): SliceSelection {
  const x = axes[0]?.name ?? "";
  const y = axes[1]?.name ?? "";
  const pins: Record<string, number> = {};
  for (const a of axes.slice(2)) pins[a.name] = a.low;
  return { x, y, pins };
}

export class DashboardUI {
  private selection: SliceSelection | null = null;

  constructor(
    private readonly store: DashboardStore,
    private readonly root: HTMLElement,
  ) {
    store.onChange = () => this.render();
  }

  sliceSelection(): SliceSelection | null {
    return this.selection;
  }

  private ensureSelection(): SliceSelection | null {
    const axes = this.store.status?.space.axes ?? [];
    if (axes.length < 2) return null;
    if (!this.selection) this.selection = defaultSelection(axes);
    return this.selection;
  }

  private requestSlice(): void {
    const sel = this.ensureSelection();
    if (sel) void this.store.loadSlice(sel.x, sel.y, sel.pins);
  }

  render(): void {
    const s = this.store;
    this.root.replaceChildren();

    if (s.banner) {
      this.root.append(el("div", `banner banner-${s.banner.kind}`, s.banner.text));
    }

    const grid = el("div", "layout");
    grid.append(this.statusPanel(), this.batchPanel(), this.slicePanel());
    grid.append(this.historyPanel(), this.logPanel());
    this.root.append(grid);
  }

  private statusPanel(): HTMLElement {
    const s = this.store;
    const panel = el("section", "panel status-panel");
    panel.append(el("h2", undefined, "campaign"));
    if (!s.status) {
      panel.append(el("p", "muted", "connecting..."));
      return panel;
    }
    const m = s.status.metrics;
    const rows: Array<[string, string]> = [
      ["budget", `${m.experiments_used} / ${m.budget} experiments used`],
      ["discoveries", `${m.discovery_rate} within budget (${m.total_successes} total)`],
      ["seed observations", String(m.seed_observations)],
      ["space size", m.space_cardinality.toLocaleString("en-US")],
      ["fraction explored", m.fraction_explored.toExponential(3)],
      ["state version", String(s.status.state_version)],
    ];
    const dl = el("dl");
    for (const [k, v] of rows) {
      dl.append(el("dt", undefined, k), el("dd", undefined, v));
    }
    panel.append(dl);

    const ctx = Object.entries(s.status.space.fixed_context);
    if (ctx.length) {
      panel.append(
        el(
          "p",
          "muted",
          "fixed: " + ctx.map(([k, v]) => `${k}=${fmt(v)}`).join(", "),
        ),
      );
    }

    if (s.extendPrompt || s.budgetExhausted) {
      const prompt = el("div", "extend-prompt");
      prompt.append(el("p", undefined, "budget exhausted - extend to continue"));
      const input = el("input") as HTMLInputElement;
      input.type = "number";
      input.min = "1";
      input.value = "5";
      const btn = el("button", "confirm", "extend budget");
      btn.onclick = () => void this.store.extendBudget(Number(input.value));
      prompt.append(input, btn);
      panel.append(prompt);
    }
    return panel;
  }

  private batchPanel(): HTMLElement {
    const s = this.store;
    const panel = el("section", "panel batch-panel");
    panel.append(el("h2", undefined, "suggested batch"));
    if (!s.suggestions.length) {
      panel.append(
        el("p", "muted", s.budgetExhausted ? "no budget left" : "no open batch"),
      );
      return panel;
    }
    const axes = s.status?.space.axes ?? [];
    for (const sug of s.suggestions) {
      panel.append(this.card(sug, axes));
    }
    return panel;
  }

  private card(sug: Suggestion, axes: AxisInfo[]): HTMLElement {
    const s = this.store;
    const card = el("article", "card");
    card.dataset["index"] = String(sug.index);
    card.append(el("h3", undefined, `configuration ${sug.index}`));
    const table = el("table", "values");
    sug.values.forEach((v, i) => {
      const tr = el("tr");
      tr.append(el("td", undefined, axes[i]?.name ?? `axis ${i}`));
      tr.append(el("td", "num", fmt(v)));
      table.append(tr);
    });
    card.append(table);
    card.append(el("p", "prob", `p ${sug.p.toFixed(4)}  score ${sug.alpha.toFixed(4)}`));

    const picked = s.picks.get(sug.index);
    const controls = el("div", "controls");
    const failed = el("button", picked === 0 ? "pick picked" : "pick", "failed");
    const worked = el("button", picked === 1 ? "pick picked" : "pick", "worked");
    failed.disabled = worked.disabled = !s.recordEnabled;
    failed.onclick = () => s.pick(sug.index, 0);
    worked.onclick = () => s.pick(sug.index, 1);
    controls.append(failed, worked);
    if (picked !== undefined) {
      const confirm = el(
        "button",
        "confirm",
        `confirm ${picked === 1 ? "success" : "failure"}`,
      );
      confirm.disabled = !s.recordEnabled;
      confirm.onclick = () => void s.confirm(sug.index);
      controls.append(confirm);
    }
    card.append(controls);
    return card;
  }

  private slicePanel(): HTMLElement {
    const s = this.store;
    const panel = el("section", "panel slice-panel");
    const head = el("div", "slice-head");
    head.append(el("h2", undefined, "posterior slice"));
    const axes = s.status?.space.axes ?? [];
    const sel = this.ensureSelection();
    if (sel && axes.length >= 2) {
      head.append(this.axisPicker("x", sel, axes));
      head.append(this.axisPicker("y", sel, axes));
    }
    panel.append(head);

    if (sel) {
      for (const a of axes) {
        if (a.name === sel.x || a.name === sel.y) continue;
        panel.append(this.pinSlider(a, sel));
      }
    }

    if (!s.slice) {
      panel.append(el("p", "muted", "no slice loaded"));
      const btn = el("button", "confirm", "load slice");
      btn.onclick = () => this.requestSlice();
      panel.append(btn);
      return panel;
    }

    if (s.slice.stale) {
      panel.append(el("div", "stale-badge", "stale - service unreachable, showing last render"));
    }

    const model = buildHeatmap(s.slice.payload);
    const canvas = el("canvas", "heatmap") as HTMLCanvasElement;
    const cw = Math.max(3, Math.floor(480 / model.columns));
    const ch = Math.max(3, Math.floor(360 / model.rows));
    canvas.width = model.columns * cw;
    canvas.height = model.rows * ch;
    const ctx = canvas.getContext("2d");
    if (ctx) {
      for (const cell of model.cells) {
        ctx.fillStyle = cell.color;
        // y axis grows upward: last matrix row paints at the top
        ctx.fillRect(cell.xi * cw, (model.rows - 1 - cell.yi) * ch, cw, ch);
      }
      for (const mark of model.marks) {
        const cx = mark.xi * cw + cw / 2;
        const cy = (model.rows - 1 - mark.yi) * ch + ch / 2;
        const r = Math.max(3, Math.min(cw, ch) / 2 - 1);
        if (mark.outcome === 1) {
          ctx.strokeStyle = "#ffffff";
          ctx.fillStyle = "#2eaf5f";
          ctx.beginPath();
          ctx.arc(cx, cy, r, 0, Math.PI * 2);
          ctx.fill();
          ctx.stroke();
        } else {
          ctx.strokeStyle = "#e2493b";
          ctx.lineWidth = 2;
          ctx.beginPath();
          ctx.moveTo(cx - r, cy - r);
          ctx.lineTo(cx + r, cy + r);
          ctx.moveTo(cx + r, cy - r);
          ctx.lineTo(cx - r, cy + r);
          ctx.stroke();
          ctx.lineWidth = 1;
        }
      }
    }
    panel.append(canvas);

    const legend = el("div", "legend");
    legend.append(el("span", undefined, "p 0"));
    const bar = el("div", "legend-bar");
    for (let i = 0; i <= 20; i++) {
      const chip = el("span", "legend-chip");
      chip.style.background = colorFor(i / 20);
      bar.append(chip);
    }
    legend.append(bar, el("span", undefined, "1"));
    panel.append(legend);
    panel.append(
      el("p", "muted", `${model.axisX} across, ${model.axisY} up; o success, x failure`),
    );
    return panel;
  }

  private axisPicker(which: "x" | "y", sel: SliceSelection, axes: AxisInfo[]): HTMLElement {
    const wrap = el("label", "axis-pick", `${which}: `);
    const select = el("select") as HTMLSelectElement;
    for (const a of axes) {
      const opt = el("option", undefined, a.name) as HTMLOptionElement;
      opt.value = a.name;
      if (sel[which] === a.name) opt.selected = true;
      select.append(opt);
    }
    select.onchange = () => {
      const name = select.value;
      const other = which === "x" ? "y" : "x";
      if (sel[other] === name) sel[other] = sel[which];
      sel[which] = name;
      // re-derive pins for the new free pair
      const pins: Record<string, number> = {};
      for (const a of axes) {
        if (a.name !== sel.x && a.name !== sel.y) {
          pins[a.name] = sel.pins[a.name] ?? a.low;
        }
      }
      sel.pins = pins;
      this.requestSlice();
    };
    wrap.append(select);
    return wrap;
  }

  private pinSlider(axis: AxisInfo, sel: SliceSelection): HTMLElement {
    const wrap = el("label", "pin");
    const current = sel.pins[axis.name] ?? axis.low;
    const caption = el("span", undefined, `${axis.name} = ${fmt(current)}`);
    const input = el("input") as HTMLInputElement;
    input.type = "range";
    input.min = String(axis.low);
    input.max = String(axis.high);
    input.step = String(axis.step);
    input.value = String(current);
    input.oninput = () => {
      sel.pins[axis.name] = Number(input.value);
      caption.textContent = `${axis.name} = ${fmt(Number(input.value))}`;
    };
    input.onchange = () => this.requestSlice();
    wrap.append(caption, input);
    return wrap;
  }

  private historyPanel(): HTMLElement {
    const s = this.store;
    const panel = el("section", "panel history-panel");
    panel.append(el("h2", undefined, "history"));
    if (!s.observations.length) {
      panel.append(el("p", "muted", "no observations yet"));
      return panel;
    }
    const axes = s.status?.space.axes ?? [];
    const table = el("table", "history");
    const head = el("tr");
    head.append(el("th", undefined, "#"));
    for (const a of axes) head.append(el("th", undefined, a.name));
    head.append(el("th", undefined, "outcome"), el("th", undefined, "origin"));
    table.append(head);
    for (const o of [...s.observations].reverse()) {
      const tr = el("tr", o.outcome === 1 ? "row-success" : "row-failure");
      tr.append(el("td", "num", String(o.index)));
      for (const v of o.values) tr.append(el("td", "num", fmt(v)));
      tr.append(el("td", undefined, o.outcome === 1 ? "success" : "failure"));
      tr.append(el("td", `origin origin-${o.origin}`, o.origin));
      table.append(tr);
    }
    panel.append(table);
    return panel;
  }

  private logPanel(): HTMLElement {
    const panel = el("section", "panel log-panel");
    panel.append(el("h2", undefined, "action log"));
    if (!this.store.log.length) {
      panel.append(el("p", "muted", "nothing recorded this session"));
      return panel;
    }
    const list = el("ul", "log");
    for (const entry of this.store.log) {
      list.append(el("li", undefined, `${entry.at}  ${entry.text}`));
    }
    panel.append(list);
    return panel;
  }
}
