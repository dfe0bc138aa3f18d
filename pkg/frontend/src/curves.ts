// Live progress charts: accuracy and discovered classes against labeled
// samples. Values are plotted verbatim from the service's curve data; the
// discovery series is drawn as a step function.

import type { CurveData } from "./types.js";

interface Series {
  xs: number[];
  ys: number[];
}

const W = 320;
const H = 140;
const PAD = 34;

function scale(values: number[], lo: number, hi: number) {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return (v: number) => lo + ((v - min) / span) * (hi - lo);
}

function axisLabel(text: string, x: number, y: number, rotate = false) {
  const el = document.createElementNS("http://www.w3.org/2000/svg", "text");
  el.textContent = text;
  el.setAttribute("x", String(x));
  el.setAttribute("y", String(y));
  el.setAttribute("class", "axis-label");
  if (rotate) el.setAttribute("transform", `rotate(-90 ${x} ${y})`);
  return el;
}

function chart(
  series: Series,
  yLabel: string,
  step: boolean,
): SVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
  svg.setAttribute("class", "curve-chart");
  svg.dataset.yLabel = yLabel;

  const sx = scale(series.xs, PAD, W - 8);
  const sy = scale(series.ys, H - PAD, 10);
  const coords: string[] = [];
  series.xs.forEach((x, i) => {
    const y = series.ys[i]!;
    if (step && i > 0) {
      coords.push(`${sx(x).toFixed(1)},${sy(series.ys[i - 1]!).toFixed(1)}`);
    }
    coords.push(`${sx(x).toFixed(1)},${sy(y).toFixed(1)}`);
  });
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", coords.join(" "));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  line.setAttribute("stroke-width", "1.5");
  svg.appendChild(line);

  for (let i = 0; i < series.xs.length; i++) {
    const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
    dot.setAttribute("cx", sx(series.xs[i]!).toFixed(1));
    dot.setAttribute("cy", sy(series.ys[i]!).toFixed(1));
    dot.setAttribute("r", "2.5");
    dot.dataset.x = String(series.xs[i]);
    dot.dataset.y = String(series.ys[i]);
    svg.appendChild(dot);
  }

  svg.appendChild(axisLabel("Number of added Samples", W / 2, H - 6));
  svg.appendChild(axisLabel(yLabel, 12, H / 2, true));
  return svg;
}

export function renderCurves(container: HTMLElement, curves: CurveData): void {
  container.textContent = "";
  if (curves.labeled_counts.length === 0) {
    throw new Error("history is empty");
  }
  const base = curves.labeled_counts[0]!;
  const added = curves.labeled_counts.map((c) => c - base);

  const accuracyKnown = curves.accuracy_pct.every((v) => v !== null);
  if (accuracyKnown) {
    container.appendChild(
      chart(
        { xs: added, ys: curves.accuracy_pct.map((v) => v as number) },
        "Average Accuracy [%]",
        false,
      ),
    );
  }
  container.appendChild(
    chart(
      { xs: added, ys: curves.discovered_classes },
      "# Discovered Classes",
      true,
    ),
  );
}
