/**
 * The five benchmark figure types.
 *
 * Reference slopes on log-log figures come from the (k, r, s, d) metadata
 * that the benchmark CLI embeds as CSV header comments: errors decay like
 * h^min(k, r+s), i.e. like N^(-min(k, r+s)/d) in the total unknown count,
 * and setup/solve times scale about linearly in n.
 */

import { RunTable, errorOrder, dimension, ColumnName } from "./csv.js";
import { ChartSpec, Series, renderChart } from "./svg.js";

export const FIGURE_KINDS = [
  "error_vs_h",
  "error_vs_N",
  "mtilde_vs_n",
  "iters_vs_n",
  "timings_vs_n",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function seriesLabel(table: RunTable): string {
  const s = table.meta["s"];
  const r = table.meta["r"];
  if (s !== undefined && r !== undefined) return `s=${s}, r=${r}`;
  return table.path.split("/").pop() ?? table.path;
}

function dataSeries(tables: RunTable[], x: ColumnName, y: ColumnName): Series[] {
  return tables.map((t, i) => ({
    label: seriesLabel(t),
    x: t.columns[x],
    y: t.columns[y],
    color: PALETTE[i % PALETTE.length],
  }));
}

/** dashed guide through the last data point with the requested slope */
function slopeGuide(table: RunTable, x: ColumnName, y: ColumnName,
                    slope: number, label: string, span = 8.0): Series {
  const xs = table.columns[x];
  const ys = table.columns[y];
  let anchorX = NaN;
  let anchorY = NaN;
  for (let i = xs.length - 1; i >= 0; i--) {
    if (Number.isFinite(xs[i]) && Number.isFinite(ys[i]) && xs[i] > 0 && ys[i] > 0) {
      anchorX = xs[i];
      anchorY = ys[i] * 1.3;
      break;
    }
  }
  const xFar = anchorX / span;
  const yFar = anchorY * Math.pow(1 / span, slope);
  return {
    label,
    x: [xFar, anchorX],
    y: [yFar, anchorY],
    color: "#555555",
    dashed: true,
  };
}

export function buildFigure(kind: FigureKind, tables: RunTable[]): ChartSpec {
  if (tables.length === 0) throw new Error("no input tables");
  const first = tables[0];
  const order = errorOrder(first.meta);
  const d = dimension(first.meta);
  switch (kind) {
    case "error_vs_h": {
      const series = dataSeries(tables, "h", "h1alpha_error");
      series.push(slopeGuide(first, "h", "h1alpha_error", order,
        `slope ${round3(order)}`));
      return {
        title: "energy-norm error vs mesh size",
        xLabel: "h", yLabel: "H1-alpha error", xLog: true, yLog: true, series,
      };
    }
    case "error_vs_N": {
      const slope = -order / d;
      const series = dataSeries(tables, "N", "h1alpha_error");
      series.push(slopeGuide(first, "N", "h1alpha_error", slope,
        `slope ${round3(slope)}`, 64));
      return {
        title: "energy-norm error vs total unknowns",
        xLabel: "N = n * M_tilde", yLabel: "H1-alpha error",
        xLog: true, yLog: true, series,
      };
    }
    case "mtilde_vs_n":
      return {
        title: "distinct spectral modes vs unknowns",
        xLabel: "n", yLabel: "M_tilde", xLog: true, yLog: false,
        series: dataSeries(tables, "n", "M_tilde"),
      };
    case "iters_vs_n":
      return {
        title: "mean preconditioned CG iterations vs unknowns",
        xLabel: "n", yLabel: "mean iterations", xLog: true, yLog: false,
        series: dataSeries(tables, "n", "mean_cg_iters"),
      };
    case "timings_vs_n": {
      const series: Series[] = [];
      tables.forEach((t, i) => {
        const setup = t.columns.setup_ms.map((v, j) => v + t.columns.eig_ms[j]);
        series.push({
          label: `${seriesLabel(t)} setup`, x: t.columns.n, y: setup,
          color: PALETTE[(2 * i) % PALETTE.length],
        });
        series.push({
          label: `${seriesLabel(t)} solve`, x: t.columns.n, y: t.columns.solve_ms,
          color: PALETTE[(2 * i + 1) % PALETTE.length],
        });
      });
      const guide = slopeGuide(first, "n", "solve_ms", 1.0, "slope 1", 64);
      if (Number.isFinite(guide.x[0])) series.push(guide);
      return {
        title: "setup and solve wall time vs unknowns",
        xLabel: "n", yLabel: "wall time [ms]", xLog: true, yLog: true, series,
      };
    }
  }
}

function round3(v: number): string {
  return String(Math.round(v * 1000) / 1000);
}

export function renderFigure(kind: FigureKind, tables: RunTable[]): string {
  return renderChart(buildFigure(kind, tables));
}
