import type { CurvePoint } from "./types.js";

const WIDTH = 460;
const HEIGHT = 180;
const PAD = { left: 42, right: 12, top: 10, bottom: 24 };

function scale(value: number, lo: number, hi: number, outLo: number, outHi: number): number {
  if (hi === lo) {
    return (outLo + outHi) / 2;
  }
  return outLo + ((value - lo) / (hi - lo)) * (outHi - outLo);
}

/**
 * Accuracy-vs-iteration line chart as inline SVG.
 *
 * Every rendered circle carries the exact source values in data attributes
 * (data-iteration / data-accuracy / data-labeled-size), so the displayed
 * chart can be checked field-for-field against the API payload.
 */
export function renderCurveChart(container: HTMLElement, points: CurvePoint[]): void {
  container.replaceChildren();
  container.classList.add("curve-chart");
  if (points.length === 0) {
    const empty = document.createElement("p");
    empty.className = "chart-empty";
    empty.textContent = "No checkpoints yet";
    container.append(empty);
    return;
  }

  const iterations = points.map((p) => p.iteration);
  const xLo = Math.min(...iterations);
  const xHi = Math.max(...iterations);
  const x = (it: number) => scale(it, xLo, xHi, PAD.left, WIDTH - PAD.right);
  const y = (acc: number) => scale(acc, 0, 1, HEIGHT - PAD.bottom, PAD.top);

  const svgNs = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(svgNs, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", "learning curve");

  for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
    const line = document.createElementNS(svgNs, "line");
    line.setAttribute("x1", String(PAD.left));
    line.setAttribute("x2", String(WIDTH - PAD.right));
    line.setAttribute("y1", String(y(tick)));
    line.setAttribute("y2", String(y(tick)));
    line.setAttribute("class", "grid-line");
    svg.append(line);
    const label = document.createElementNS(svgNs, "text");
    label.setAttribute("x", String(PAD.left - 6));
    label.setAttribute("y", String(y(tick) + 3));
    label.setAttribute("class", "tick-label");
    label.setAttribute("text-anchor", "end");
    label.textContent = tick.toFixed(2);
    svg.append(label);
  }

  const path = document.createElementNS(svgNs, "polyline");
  path.setAttribute(
    "points",
    points.map((p) => `${x(p.iteration)},${y(p.accuracy)}`).join(" "),
  );
  path.setAttribute("class", "curve-line");
  path.setAttribute("fill", "none");
  svg.append(path);

  for (const point of points) {
    const dot = document.createElementNS(svgNs, "circle");
    dot.setAttribute("cx", String(x(point.iteration)));
    dot.setAttribute("cy", String(y(point.accuracy)));
    dot.setAttribute("r", "3");
    dot.setAttribute("class", "curve-dot");
    dot.dataset.iteration = String(point.iteration);
    dot.dataset.accuracy = String(point.accuracy);
    dot.dataset.labeledSize = String(point.labeled_size);
    const title = document.createElementNS(svgNs, "title");
    title.textContent =
      `iteration ${point.iteration}: accuracy ${point.accuracy.toFixed(3)}, ` +
      `${point.labeled_size} labeled`;
    dot.append(title);
    svg.append(dot);
  }

  container.append(svg);
}

/** Read back the values rendered into the chart, in display order. */
export function chartValues(container: HTMLElement): CurvePoint[] {
  return Array.from(container.querySelectorAll<SVGCircleElement>("circle.curve-dot")).map(
    (dot) => ({
      iteration: Number(dot.dataset.iteration),
      accuracy: Number(dot.dataset.accuracy),
      labeled_size: Number(dot.dataset.labeledSize),
    }),
  );
}
