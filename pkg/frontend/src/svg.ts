/**
 * Minimal deterministic SVG chart rendering.
 *
 * No timestamps, no randomness: identical inputs produce identical bytes.
 * Axes are linear or base-10 logarithmic with decade ticks.
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  dashed?: boolean;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xLog: boolean;
  yLog: boolean;
  series: Series[];
}

const WIDTH = 640;
const HEIGHT = 440;
const MARGIN = { left: 70, right: 20, top: 36, bottom: 48 };

function fmt(v: number): string {
  return v.toPrecision(6).replace(/\.?0+$/, "").replace(/\.?0+e/, "e");
}

function tickLabel(v: number, log: boolean): string {
  if (log) {
    const e = Math.round(Math.log10(v));
    return `1e${e}`;
  }
  return fmt(v);
}

interface Scale {
  (v: number): number;
  ticks: number[];
}

function makeScale(values: number[], log: boolean, range: [number, number]): Scale {
  const finite = values.filter((v) => Number.isFinite(v) && (!log || v > 0));
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (!(hi > lo)) {
    lo = log ? lo / 2 : lo - 1;
    hi = log ? hi * 2 : hi + 1;
  }
  let t0: number;
  let t1: number;
  let ticks: number[];
  if (log) {
    t0 = Math.log10(lo);
    t1 = Math.log10(hi);
    const pad = 0.05 * (t1 - t0 || 1);
    t0 -= pad;
    t1 += pad;
    ticks = [];
    for (let e = Math.ceil(t0); e <= Math.floor(t1); e++) ticks.push(10 ** e);
  } else {
    const pad = 0.05 * (hi - lo || 1);
    t0 = lo - pad;
    t1 = hi + pad;
    const step = niceStep(t1 - t0);
    ticks = [];
    for (let v = Math.ceil(t0 / step) * step; v <= t1 + 1e-12 * step; v += step) {
      ticks.push(Number(v.toPrecision(12)));
    }
  }
  const scale = ((v: number) => {
    const t = log ? Math.log10(v) : v;
    return range[0] + ((t - t0) / (t1 - t0)) * (range[1] - range[0]);
  }) as Scale;
  scale.ticks = ticks;
  return scale;
}

function niceStep(span: number): number {
  const raw = span / 6;
  const mag = 10 ** Math.floor(Math.log10(raw));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(spec: ChartSpec): string {
  const xs = spec.series.flatMap((s) => s.x);
  const ys = spec.series.flatMap((s) => s.y);
  const sx = makeScale(xs, spec.xLog, [MARGIN.left, WIDTH - MARGIN.right]);
  const sy = makeScale(ys, spec.yLog, [HEIGHT - MARGIN.bottom, MARGIN.top]);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica,Arial,sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="15">` +
    `${esc(spec.title)}</text>`,
  );

  // frame and ticks
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" ` +
    `fill="none" stroke="black" stroke-width="1"/>`,
  );
  for (const t of sx.ticks) {
    const px = fmt(sx(t));
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${px}" y="${y0 + 18}" text-anchor="middle" font-size="11">` +
      `${tickLabel(t, spec.xLog)}</text>`,
    );
    parts.push(
      `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y1}" stroke="#dddddd" stroke-width="0.5"/>`,
    );
  }
  for (const t of sy.ticks) {
    const py = fmt(sy(t));
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${py}" text-anchor="end" dominant-baseline="middle" ` +
      `font-size="11">${tickLabel(t, spec.yLog)}</text>`,
    );
    parts.push(
      `<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#dddddd" stroke-width="0.5"/>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="13">` +
    `${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" ` +
    `transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(spec.yLabel)}</text>`,
  );

  // series
  spec.series.forEach((s) => {
    const pts: string[] = [];
    for (let i = 0; i < s.x.length; i++) {
      const vx = s.x[i];
      const vy = s.y[i];
      if (!Number.isFinite(vx) || !Number.isFinite(vy)) continue;
      if ((spec.xLog && vx <= 0) || (spec.yLog && vy <= 0)) continue;
      pts.push(`${fmt(sx(vx))},${fmt(sy(vy))}`);
    }
    if (pts.length === 0) return;
    const dash = s.dashed ? ` stroke-dasharray="6,4"` : "";
    parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${s.color}" ` +
      `stroke-width="1.5"${dash}/>`,
    );
    if (!s.dashed) {
      for (const p of pts) {
        const [px, py] = p.split(",");
        parts.push(`<circle cx="${px}" cy="${py}" r="2.5" fill="${s.color}"/>`);
      }
    }
  });

  // legend
  let ly = y1 + 14;
  for (const s of spec.series) {
    const dash = s.dashed ? ` stroke-dasharray="6,4"` : "";
    parts.push(
      `<line x1="${x1 - 150}" y1="${ly - 4}" x2="${x1 - 120}" y2="${ly - 4}" ` +
      `stroke="${s.color}" stroke-width="1.5"${dash}/>`,
    );
    parts.push(
      `<text x="${x1 - 114}" y="${ly}" font-size="11">${esc(s.label)}</text>`,
    );
    ly += 16;
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
