/**
 * Reader for the benchmark CSV emitted by the fracpoisson CLI.
 *
 * Files carry the run configuration in leading `# key=value` comment lines,
 * then the fixed column header, then one row per refinement level.
 */

export const EXPECTED_COLUMNS = [
  "level", "h", "n", "M", "M_tilde", "N",
  "h1alpha_error", "fitted_rate", "mean_cg_iters",
  "setup_ms", "eig_ms", "solve_ms",
] as const;

export type ColumnName = (typeof EXPECTED_COLUMNS)[number];

export interface RunTable {
  /** configuration key/value pairs from the comment header */
  meta: Record<string, string>;
  /** column-major numeric data */
  columns: Record<ColumnName, number[]>;
  /** number of data rows */
  length: number;
  /** source path, used for messages and legend fallbacks */
  path: string;
}

export class SchemaError extends Error {
  constructor(path: string, missing: string[]) {
    super(`${path}: header mismatch, missing columns: ${missing.join(", ")}`);
    this.name = "SchemaError";
  }
}

export function parseRunCsv(text: string, path = "<string>"): RunTable {
  const lines = text.split(/\r?\n/).filter((ln) => ln.trim().length > 0);
  const meta: Record<string, string> = {};
  let headerIndex = -1;
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line.startsWith("#")) {
      const body = line.replace(/^#\s*/, "");
      const eq = body.indexOf("=");
      if (eq > 0) meta[body.slice(0, eq).trim()] = body.slice(eq + 1).trim();
    } else {
      headerIndex = i;
      break;
    }
  }
  if (headerIndex < 0) throw new SchemaError(path, [...EXPECTED_COLUMNS]);
  const header = lines[headerIndex].split(",").map((h) => h.trim());
  const missing = EXPECTED_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) throw new SchemaError(path, missing);

  const columns = Object.fromEntries(
    EXPECTED_COLUMNS.map((c) => [c, [] as number[]]),
  ) as Record<ColumnName, number[]>;
  let length = 0;
  for (const line of lines.slice(headerIndex + 1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) continue;
    for (const col of EXPECTED_COLUMNS) {
      columns[col].push(Number(parts[header.indexOf(col)]));
    }
    length += 1;
  }
  return { meta, columns, length, path };
}

/** min(k, r+s), the error-decay order of the discretization */
export function errorOrder(meta: Record<string, string>): number {
  const k = Number(meta["k"] ?? 1);
  const r = Number(meta["r"] ?? 0.5);
  const s = Number(meta["s"] ?? 0.5);
  return Math.min(k, r + s);
}

export function dimension(meta: Record<string, string>): number {
  return Number(meta["d"] ?? 2);
}
