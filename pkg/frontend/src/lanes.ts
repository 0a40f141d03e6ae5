/** SVG lane rendering: a phone lane on top, then one editable lane per
 * feature showing normalized values as bars with sigma gridlines at
 * +-0.25 and +-0.5, plus a measured-value overlay after synthesis. */

import type { FeatureName, SessionView } from "./api.js";
import { FEATURES } from "./api.js";

export const LANE_HEIGHT = 120;
export const PHONE_LANE_HEIGHT = 34;
export const SIGMA_RANGE = 2.0;         // lane maps [-2, +2] sigma
export const GRIDLINES = [-0.5, -0.25, 0.25, 0.5];

/** y pixel for a sigma value inside one lane (0 at top). */
export function sigmaToY(sigma: number, laneHeight = LANE_HEIGHT): number {
  const clamped = Math.max(-SIGMA_RANGE, Math.min(SIGMA_RANGE, sigma));
  return laneHeight / 2 - (clamped / SIGMA_RANGE) * (laneHeight / 2);
}

/** Inverse of sigmaToY: pointer position to sigma, quantized to 0.05. */
export function yToSigma(y: number, laneHeight = LANE_HEIGHT): number {
  const raw = ((laneHeight / 2 - y) / (laneHeight / 2)) * SIGMA_RANGE;
  const clamped = Math.max(-SIGMA_RANGE, Math.min(SIGMA_RANGE, raw));
  return Math.round(clamped * 20) / 20;
}

/** Phone x-extents proportional to realized (measured) durations when
 * available, otherwise to the requested raw durations. */
export function phoneExtents(view: SessionView, width: number,
                             measured: number[][] | null): { x: number; w: number }[] {
  const durations = view.phones.map((p, i) => {
    if (p.kind !== "phone") return 0.6; // slim marker column
    const row = measured?.[i] ?? view.raw[i];
    return Math.max(1, row[2]);
  });
  const total = durations.reduce((a, b) => a + b, 0);
  const out: { x: number; w: number }[] = [];
  let x = 0;
  for (const d of durations) {
    const w = (d / total) * width;
    out.push({ x, w });
    x += w;
  }
  return out;
}

export interface DragCallbacks {
  onDrag(index: number, feature: FeatureName, valueSigma: number): void;
  onToggleSelect(index: number): void;
}

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof SVGElementTagNameMap>(name: K,
    attrs: Record<string, string | number>): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  return node;
}

const LANE_COLORS: Record<FeatureName, string> = {
  f0: "#3b6ea5", energy: "#a4653b", duration: "#4a8a57",
};

export function renderLanes(svg: SVGSVGElement, view: SessionView,
                            baseMeasured: number[][] | null, selected: number[],
                            callbacks: DragCallbacks): void {
  const width = svg.viewBox.baseVal.width || svg.clientWidth || 900;
  svg.replaceChildren();
  const extents = phoneExtents(view, width, view.measured);

  // phone lane: symbols, stress badges, boundary markers
  view.phones.forEach((p, i) => {
    const { x, w } = extents[i];
    const g = el("g", { transform: `translate(${x},0)` });
    if (p.kind === "phone") {
      g.appendChild(el("rect", {
        x: 1, y: 2, width: Math.max(1, w - 2), height: PHONE_LANE_HEIGHT - 4,
        rx: 4, fill: selected.includes(i) ? "#ffe9a8" : "#f2f2f2",
        stroke: "#999", "stroke-width": 1,
      }));
      const label = el("text", {
        x: w / 2, y: PHONE_LANE_HEIGHT / 2 + 4, "text-anchor": "middle",
        "font-size": 13, "font-family": "monospace",
      });
      label.textContent = p.symbol + (p.stressed ? "ˈ" : "");
      g.appendChild(label);
      g.addEventListener("click", (ev) => {
        if ((ev as MouseEvent).shiftKey) callbacks.onToggleSelect(i);
      });
    } else {
      g.appendChild(el("line", {
        x1: w / 2, y1: 4, x2: w / 2, y2: PHONE_LANE_HEIGHT - 4,
        stroke: "#bbb", "stroke-width": 2, "stroke-dasharray": "3,2",
      }));
    }
    svg.appendChild(g);
  });

  FEATURES.forEach((feature, lane) => {
    const j = FEATURES.indexOf(feature);
    const top = PHONE_LANE_HEIGHT + 8 + lane * (LANE_HEIGHT + 14);
    const laneGroup = el("g", { transform: `translate(0,${top})` });
    laneGroup.appendChild(el("rect", {
      x: 0, y: 0, width, height: LANE_HEIGHT, fill: "#fbfbfb", stroke: "#ddd",
    }));
    for (const gl of [0, ...GRIDLINES]) {
      const y = sigmaToY(gl);
      laneGroup.appendChild(el("line", {
        x1: 0, y1: y, x2: width, y2: y,
        stroke: gl === 0 ? "#bbb" : "#e4e4e4", "stroke-width": 1,
      }));
      if (gl !== 0) {
        const txt = el("text", { x: 4, y: y - 2, "font-size": 8, fill: "#999" });
        txt.textContent = `${gl > 0 ? "+" : ""}${gl}σ`;
        laneGroup.appendChild(txt);
      }
    }
    const title = el("text", { x: width - 6, y: 12, "text-anchor": "end",
                               "font-size": 11, fill: LANE_COLORS[feature] });
    title.textContent = feature;
    laneGroup.appendChild(title);

    view.phones.forEach((p, i) => {
      if (p.kind !== "phone") return; // boundary tokens are not editable
      const { x, w } = extents[i];
      const z = view.normalized[i][j];
      const y = sigmaToY(z);
      const zero = sigmaToY(0);
      const bar = el("rect", {
        x: x + 2, y: Math.min(y, zero), width: Math.max(1, w - 4),
        height: Math.max(2, Math.abs(zero - y)),
        fill: LANE_COLORS[feature], "fill-opacity": 0.55, cursor: "ns-resize",
      });
      bar.appendChild(el("title", {})).textContent =
        `${p.symbol}: ${z.toFixed(3)}σ (raw ${view.raw[i][j].toFixed(j === 1 ? 4 : 1)})`;
      attachDrag(bar, laneGroup, i, feature, callbacks);
      laneGroup.appendChild(bar);
      // realized-vs-requested overlay from the latest rendition
      const measuredRow = view.measured?.[i];
      const baseRow = baseMeasured?.[i];
      if (measuredRow && baseRow) {
        const stats = view.stats[feature];
        const mz = stats.std > 0 ? (measuredRow[j] - stats.mean) / stats.std : 0;
        laneGroup.appendChild(el("line", {
          x1: x + 2, y1: sigmaToY(mz), x2: x + w - 2, y2: sigmaToY(mz),
          stroke: "#222", "stroke-width": 1.5, "stroke-dasharray": "4,2",
        }));
      }
    });
    svg.appendChild(laneGroup);
  });

  const totalHeight = PHONE_LANE_HEIGHT + 8 + FEATURES.length * (LANE_HEIGHT + 14);
  svg.setAttribute("viewBox", `0 0 ${width} ${totalHeight}`);
  svg.setAttribute("height", String(totalHeight));
}

function attachDrag(bar: SVGRectElement, lane: SVGGElement, index: number,
                    feature: FeatureName, callbacks: DragCallbacks): void {
  bar.addEventListener("pointerdown", (down) => {
    down.preventDefault();
    bar.setPointerCapture(down.pointerId);
    const rect = lane.getBoundingClientRect();
    const move = (ev: PointerEvent) => {
      const sigma = yToSigma(ev.clientY - rect.top);
      bar.setAttribute("data-drag-sigma", String(sigma));
    };
    const up = (ev: PointerEvent) => {
      bar.removeEventListener("pointermove", move);
      bar.removeEventListener("pointerup", up);
      const sigma = yToSigma(ev.clientY - rect.top);
      callbacks.onDrag(index, feature, sigma);
    };
    bar.addEventListener("pointermove", move);
    bar.addEventListener("pointerup", up);
  });
}
