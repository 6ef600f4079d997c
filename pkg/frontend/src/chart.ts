/** Dependency-free SVG line chart for demand series comparisons. */

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ChartSeries {
  name: string;
  values: number[];
  color: string;
}

export function renderChart(
  series: ChartSeries[],
  width = 420,
  height = 160,
  pad = 10,
): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("role", "img");

  const all = series.flatMap((s) => s.values);
  if (!all.length) {
    return svg;
  }
  const maxV = Math.max(...all, 1e-9);
  const n = Math.max(...series.map((s) => s.values.length));
  const x = (i: number) => pad + (i * (width - 2 * pad)) / Math.max(1, n - 1);
  const y = (v: number) => height - pad - (v / maxV) * (height - 2 * pad);

  for (const s of series) {
    const polyline = document.createElementNS(SVG_NS, "polyline");
    polyline.setAttribute("fill", "none");
    polyline.setAttribute("stroke", s.color);
    polyline.setAttribute("stroke-width", "2");
    polyline.setAttribute("data-series", s.name);
    polyline.setAttribute(
      "points",
      s.values.map((v, i) => `${x(i).toFixed(1)},${y(v).toFixed(1)}`).join(" "),
    );
    svg.appendChild(polyline);
  }
  return svg;
}
