// Distance density panel: two-color histogram with fp0, fn0, and the
// active threshold as vertical markers. Purely presentational; every
// number comes from the density payload.

import { DensityPayload } from "./api.js";

export interface DensityBar {
  x0: number;
  x1: number;
  keyword: number;
  other: number;
}

export interface DensityView {
  bars: DensityBar[];
  maxCount: number;
  min: number;
  max: number;
}

export function toDensityView(payload: DensityPayload): DensityView {
  const bars: DensityBar[] = [];
  let maxCount = 0;
  for (let i = 0; i < payload.keyword_counts.length; i++) {
    const keyword = payload.keyword_counts[i];
    const other = payload.other_counts[i];
    bars.push({ x0: payload.bin_edges[i], x1: payload.bin_edges[i + 1], keyword, other });
    maxCount = Math.max(maxCount, keyword, other);
  }
  const edges = payload.bin_edges;
  return { bars, maxCount, min: edges[0], max: edges[edges.length - 1] };
}

/** Pixel offset of a distance value on the panel's linear x axis. */
export function xOffset(value: number, view: DensityView, width: number): number {
  if (view.max === view.min) return 0;
  return ((value - view.min) / (view.max - view.min)) * width;
}

const PANEL_WIDTH = 360;
const PANEL_HEIGHT = 140;
const SVG_NS = "http://www.w3.org/2000/svg";

const MARKER_LABELS: Record<string, string> = {
  fn0: "FN0",
  fp0: "FP0",
  threshold: "active",
};

export function renderDensity(container: HTMLElement, payload: DensityPayload): void {
  container.replaceChildren();
  if (payload.sample_count === 0) {
    const empty = document.createElement("p");
    empty.className = "density-empty";
    empty.textContent = "no scored crops in this class yet";
    container.appendChild(empty);
    return;
  }
  const view = toDensityView(payload);
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${PANEL_WIDTH} ${PANEL_HEIGHT}`);
  svg.setAttribute("class", "density-plot");
  const scaleY = (count: number) =>
    view.maxCount === 0 ? 0 : (count / view.maxCount) * (PANEL_HEIGHT - 20);
  for (const bar of view.bars) {
    const x = xOffset(bar.x0, view, PANEL_WIDTH);
    const w = Math.max(xOffset(bar.x1, view, PANEL_WIDTH) - x, 1);
    for (const [series, count] of [["keyword", bar.keyword], ["other", bar.other]] as const) {
      if (count === 0) continue;
      const h = scaleY(count);
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(series === "keyword" ? x : x + w / 2));
      rect.setAttribute("width", String(w / 2));
      rect.setAttribute("y", String(PANEL_HEIGHT - h));
      rect.setAttribute("height", String(h));
      rect.setAttribute("class", `density-bar ${series}`);
      svg.appendChild(rect);
    }
  }
  for (const [name, value] of Object.entries(payload.markers)) {
    const x = xOffset(value, view, PANEL_WIDTH);
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(x));
    line.setAttribute("x2", String(x));
    line.setAttribute("y1", "0");
    line.setAttribute("y2", String(PANEL_HEIGHT));
    line.setAttribute("class", `density-marker ${name}`);
    line.dataset.marker = name;
    line.dataset.value = String(value);
    svg.appendChild(line);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(Math.min(x + 3, PANEL_WIDTH - 30)));
    label.setAttribute("y", "12");
    label.setAttribute("class", `density-marker-label ${name}`);
    label.textContent = MARKER_LABELS[name] ?? name;
    svg.appendChild(label);
  }
  container.appendChild(svg);
}

/** Missing profile: the panel becomes a calibrate call-to-action. */
export function renderCalibratePrompt(
  container: HTMLElement,
  className: string,
  onCalibrate: () => void,
): void {
  container.replaceChildren();
  const prompt = document.createElement("div");
  prompt.className = "density-missing";
  const text = document.createElement("p");
  text.textContent = `no calibrated profile for ${className}`;
  const button = document.createElement("button");
  button.type = "button";
  button.className = "calibrate-cta";
  button.textContent = "calibrate now";
  button.addEventListener("click", onCalibrate);
  prompt.append(text, button);
  container.appendChild(prompt);
}
