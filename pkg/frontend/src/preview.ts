/** Render the declarative chart JSON (the data-complete artifact) to SVG.
 *
 * Covers the marks the pipeline emits: line, area, bar (plain, grouped,
 * stacked), point, arc, rect, boxplot. Approximate on purpose; raters need
 * the shape of the chart, not publication output.
 */

const WIDTH = 420;
const HEIGHT = 260;
const PAD = { left: 46, right: 14, top: 26, bottom: 34 };

const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

type Row = Record<string, unknown>;

interface Channel {
  field?: string;
  type?: string;
  aggregate?: string;
  bin?: boolean;
}

interface ChartDoc {
  title?: string;
  data?: { values?: Row[] };
  mark?: { type?: string } | string;
  encoding?: Record<string, Channel>;
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function markType(doc: ChartDoc): string {
  if (typeof doc.mark === "string") return doc.mark;
  return doc.mark?.type ?? "point";
}

function numbers(rows: Row[], field: string | undefined): number[] {
  if (!field) return [];
  return rows
    .map((row) => row[field])
    .filter((v): v is number => typeof v === "number" && Number.isFinite(v));
}

function labels(rows: Row[], field: string | undefined): string[] {
  if (!field) return [];
  const seen: string[] = [];
  for (const row of rows) {
    const value = String(row[field]);
    if (!seen.includes(value)) seen.push(value);
  }
  return seen;
}

interface Scale {
  (value: number): number;
  min: number;
  max: number;
}

function linearScale(values: number[], outLo: number, outHi: number): Scale {
  const min = values.length ? Math.min(...values) : 0;
  const max = values.length ? Math.max(...values) : 1;
  const span = max - min || 1;
  const fn = ((v: number) =>
    outLo + ((v - min) / span) * (outHi - outLo)) as Scale;
  fn.min = min;
  fn.max = max;
  return fn;
}

function frame(doc: ChartDoc, body: string, xLabel: string, yLabel: string): string {
  const title = esc(doc.title ?? "");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `width="${WIDTH}" height="${HEIGHT}" role="img">` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>` +
    `<text x="${WIDTH / 2}" y="16" text-anchor="middle" font-size="12" ` +
    `font-weight="bold">${title}</text>` +
    `<line x1="${PAD.left}" y1="${HEIGHT - PAD.bottom}" x2="${WIDTH - PAD.right}" ` +
    `y2="${HEIGHT - PAD.bottom}" stroke="#444"/>` +
    `<line x1="${PAD.left}" y1="${PAD.top}" x2="${PAD.left}" ` +
    `y2="${HEIGHT - PAD.bottom}" stroke="#444"/>` +
    `<text x="${WIDTH / 2}" y="${HEIGHT - 8}" text-anchor="middle" ` +
    `font-size="10" fill="#555">${esc(xLabel)}</text>` +
    `<text x="12" y="${HEIGHT / 2}" text-anchor="middle" font-size="10" ` +
    `fill="#555" transform="rotate(-90 12 ${HEIGHT / 2})">${esc(yLabel)}</text>` +
    body +
    `</svg>`
  );
}

function xPositions(rows: Row[], x: Channel): number[] {
  const lo = PAD.left + 10;
  const hi = WIDTH - PAD.right - 10;
  if (x.type === "quantitative" && x.field) {
    const values = rows.map((r) => Number(r[x.field!]));
    const scale = linearScale(values.filter(Number.isFinite), lo, hi);
    return values.map((v) => scale(v));
  }
  const count = Math.max(rows.length, 1);
  return rows.map((_, i) => lo + ((hi - lo) * (count === 1 ? 0.5 : i / (count - 1))));
}

function yPositions(values: number[]): Scale {
  const padded = values.length ? values : [0, 1];
  const scale = linearScale(padded, HEIGHT - PAD.bottom, PAD.top);
  return scale;
}

function renderLineish(doc: ChartDoc, rows: Row[], filled: boolean): string {
  const enc = doc.encoding ?? {};
  const ys = numbers(rows, enc.y?.field);
  const scaleY = yPositions(ys);
  const xs = xPositions(rows, enc.x ?? {});
  const points = rows
    .map((row, i) => `${xs[i].toFixed(1)},${scaleY(Number(row[enc.y?.field ?? ""])).toFixed(1)}`)
    .join(" ");
  const base = HEIGHT - PAD.bottom;
  if (filled) {
    const first = xs[0]?.toFixed(1) ?? PAD.left;
    const last = xs[xs.length - 1]?.toFixed(1) ?? PAD.left;
    return (
      `<polygon points="${first},${base} ${points} ${last},${base}" ` +
      `fill="${PALETTE[0]}" opacity="0.45"/>` +
      `<polyline points="${points}" fill="none" stroke="${PALETTE[0]}" stroke-width="2"/>`
    );
  }
  return (
    `<polyline points="${points}" fill="none" stroke="${PALETTE[0]}" stroke-width="2"/>` +
    rows
      .map((_, i) => `<circle cx="${xs[i].toFixed(1)}" cy="${points.split(" ")[i].split(",")[1]}" r="2.5" fill="${PALETTE[0]}"/>`)
      .join("")
  );
}

function renderBars(doc: ChartDoc, rows: Row[]): string {
  const enc = doc.encoding ?? {};
  const xField = enc.x?.field;
  const yField = enc.y?.field;
  const seriesField = enc.color?.field;
  const cats = labels(rows, xField);
  const series: (string | null)[] = seriesField ? labels(rows, seriesField) : [null];
  const stacked = (enc.y as { stack?: unknown } | undefined)?.stack === "zero";

  const totals = new Map<string, number>();
  for (const row of rows) {
    const key = String(row[xField ?? ""]);
    totals.set(key, (totals.get(key) ?? 0) + Math.max(Number(row[yField ?? ""]) || 0, 0));
  }
  const maxValue = stacked
    ? Math.max(...totals.values(), 1)
    : Math.max(...numbers(rows, yField).map(Math.abs), 1);

  const innerW = WIDTH - PAD.left - PAD.right;
  const slot = innerW / Math.max(cats.length, 1);
  const base = HEIGHT - PAD.bottom;
  const usable = base - PAD.top;
  let svg = "";
  const stackOffset = new Map<string, number>();
  cats.forEach((cat, ci) => {
    const inSlot = rows.filter((r) => String(r[xField ?? ""]) === cat);
    const groupWidth = slot * 0.72;
    const barWidth = stacked || series[0] === null
      ? groupWidth
      : groupWidth / series.length;
    inSlot.forEach((row) => {
      const sIdx = seriesField ? series.indexOf(String(row[seriesField])) : 0;
      const value = Math.max(Number(row[yField ?? ""]) || 0, 0);
      const height = (value / maxValue) * usable;
      let x = PAD.left + ci * slot + (slot - groupWidth) / 2;
      let y = base - height;
      if (stacked) {
        const offset = stackOffset.get(cat) ?? 0;
        y = base - offset - height;
        stackOffset.set(cat, offset + height);
      } else if (seriesField) {
        x += sIdx * barWidth;
      }
      svg += `<rect x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${barWidth.toFixed(1)}" ` +
        `height="${height.toFixed(1)}" fill="${PALETTE[(sIdx < 0 ? 0 : sIdx) % 10]}"/>`;
    });
    svg += `<text x="${(PAD.left + ci * slot + slot / 2).toFixed(1)}" y="${base + 12}" ` +
      `text-anchor="middle" font-size="8" fill="#555">${esc(cat.slice(0, 10))}</text>`;
  });
  return svg;
}

function renderPoints(doc: ChartDoc, rows: Row[]): string {
  const enc = doc.encoding ?? {};
  const xs = xPositions(rows, enc.x ?? {});
  const ys = numbers(rows, enc.y?.field);
  const scaleY = yPositions(ys);
  const sizes = enc.size?.field ? numbers(rows, enc.size.field) : [];
  const sizeScale = sizes.length ? linearScale(sizes, 2.5, 9) : null;
  return rows
    .map((row, i) => {
      const y = scaleY(Number(row[enc.y?.field ?? ""]));
      const r = sizeScale ? sizeScale(Number(row[enc.size?.field ?? ""])) : 3;
      return `<circle cx="${xs[i].toFixed(1)}" cy="${y.toFixed(1)}" r="${r.toFixed(1)}" ` +
        `fill="${PALETTE[0]}" opacity="0.7"/>`;
    })
    .join("");
}

function renderArcs(doc: ChartDoc, rows: Row[]): string {
  const enc = doc.encoding ?? {};
  const catField = enc.color?.field;
  const valueField = enc.theta?.field;
  const totals = new Map<string, number>();
  for (const row of rows) {
    const key = String(row[catField ?? ""]);
    totals.set(key, (totals.get(key) ?? 0) + (Number(row[valueField ?? ""]) || 0));
  }
  const total = [...totals.values()].reduce((a, b) => a + b, 0) || 1;
  const cx = WIDTH / 2;
  const cy = (HEIGHT + PAD.top) / 2 - 8;
  const radius = Math.min(WIDTH, HEIGHT) / 3;
  let angle = -Math.PI / 2;
  let svg = "";
  let index = 0;
  for (const [name, value] of totals) {
    const sweep = (value / total) * Math.PI * 2;
    const x1 = cx + radius * Math.cos(angle);
    const y1 = cy + radius * Math.sin(angle);
    const x2 = cx + radius * Math.cos(angle + sweep);
    const y2 = cy + radius * Math.sin(angle + sweep);
    const large = sweep > Math.PI ? 1 : 0;
    svg += `<path d="M${cx},${cy} L${x1.toFixed(1)},${y1.toFixed(1)} ` +
      `A${radius},${radius} 0 ${large} 1 ${x2.toFixed(1)},${y2.toFixed(1)} Z" ` +
      `fill="${PALETTE[index % 10]}" stroke="white"/>`;
    const mid = angle + sweep / 2;
    svg += `<text x="${(cx + (radius + 14) * Math.cos(mid)).toFixed(1)}" ` +
      `y="${(cy + (radius + 14) * Math.sin(mid)).toFixed(1)}" font-size="8" ` +
      `text-anchor="middle" fill="#333">${esc(name.slice(0, 12))}</text>`;
    angle += sweep;
    index += 1;
  }
  return svg;
}

function renderRects(doc: ChartDoc, rows: Row[]): string {
  const enc = doc.encoding ?? {};
  const xCats = labels(rows, enc.x?.field);
  const yCats = labels(rows, enc.y?.field);
  const values = numbers(rows, enc.color?.field);
  const scale = linearScale(values, 0.12, 1);
  const cellW = (WIDTH - PAD.left - PAD.right) / Math.max(xCats.length, 1);
  const cellH = (HEIGHT - PAD.top - PAD.bottom) / Math.max(yCats.length, 1);
  let svg = "";
  for (const row of rows) {
    const xi = xCats.indexOf(String(row[enc.x?.field ?? ""]));
    const yi = yCats.indexOf(String(row[enc.y?.field ?? ""]));
    const opacity = scale(Number(row[enc.color?.field ?? ""]) || 0);
    svg += `<rect x="${(PAD.left + xi * cellW).toFixed(1)}" ` +
      `y="${(PAD.top + yi * cellH).toFixed(1)}" width="${cellW.toFixed(1)}" ` +
      `height="${cellH.toFixed(1)}" fill="${PALETTE[0]}" ` +
      `opacity="${opacity.toFixed(3)}" stroke="white"/>`;
  }
  return svg;
}

function quantile(sorted: number[], q: number): number {
  const pos = (sorted.length - 1) * q;
  const lo = Math.floor(pos);
  const frac = pos - lo;
  return lo + 1 < sorted.length
    ? sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    : sorted[lo];
}

function renderBox(doc: ChartDoc, rows: Row[]): string {
  const enc = doc.encoding ?? {};
  const values = numbers(rows, enc.y?.field).sort((a, b) => a - b);
  if (!values.length) return "";
  const scale = yPositions(values);
  const q1 = scale(quantile(values, 0.25));
  const q2 = scale(quantile(values, 0.5));
  const q3 = scale(quantile(values, 0.75));
  const lo = scale(values[0]);
  const hi = scale(values[values.length - 1]);
  const cx = WIDTH / 2;
  const half = 48;
  return (
    `<line x1="${cx}" y1="${lo}" x2="${cx}" y2="${hi}" stroke="#444"/>` +
    `<rect x="${cx - half}" y="${q3}" width="${half * 2}" height="${Math.max(q1 - q3, 1)}" ` +
    `fill="${PALETTE[0]}" opacity="0.55" stroke="#1a5276"/>` +
    `<line x1="${cx - half}" y1="${q2}" x2="${cx + half}" y2="${q2}" ` +
    `stroke="#1a5276" stroke-width="2"/>`
  );
}

/** Parse and render the declarative artifact; a fallback card on bad input. */
export function renderPreview(declarativeCode: string | null): string {
  if (!declarativeCode) {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="60">` +
      `<text x="10" y="30" font-size="12">No declarative artifact for this chart.</text></svg>`;
  }
  let doc: ChartDoc;
  try {
    doc = JSON.parse(declarativeCode) as ChartDoc;
  } catch {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="60">` +
      `<text x="10" y="30" font-size="12">Could not parse chart JSON.</text></svg>`;
  }
  const rows = doc.data?.values ?? [];
  const enc = doc.encoding ?? {};
  const xLabel = enc.x?.field ?? "";
  const yLabel = enc.y?.field ?? enc.theta?.field ?? "";
  const mark = markType(doc);
  let body: string;
  switch (mark) {
    case "line":
      body = renderLineish(doc, rows, false);
      break;
    case "area":
      body = renderLineish(doc, rows, true);
      break;
    case "bar":
      body = renderBars(doc, rows);
      break;
    case "point":
      body = renderPoints(doc, rows);
      break;
    case "arc":
      return frame(doc, renderArcs(doc, rows), "", "");
    case "rect":
      body = renderRects(doc, rows);
      break;
    case "boxplot":
      body = renderBox(doc, rows);
      break;
    default:
      body = renderPoints(doc, rows);
  }
  return frame(doc, body, xLabel, yLabel);
}
