/**
 * Command line: render one figure kind from one or more benchmark CSVs.
 *
 *   node dist/cli.js --kind error_vs_h --out fig.svg run1.csv run2.csv
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseRunCsv, SchemaError } from "./csv.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

export function main(argv: string[]): number {
  let kind: string | undefined;
  let out: string | undefined;
  const inputs: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--kind") kind = argv[++i];
    else if (arg === "--out") out = argv[++i];
    else if (arg === "--help" || arg === "-h") {
      console.log(`usage: cli --kind <${FIGURE_KINDS.join("|")}> --out <file.svg> <csv...>`);
      return 0;
    } else inputs.push(arg);
  }
  if (!kind || !(FIGURE_KINDS as readonly string[]).includes(kind)) {
    console.error(`error: --kind must be one of ${FIGURE_KINDS.join(", ")}`);
    return 2;
  }
  if (!out || inputs.length === 0) {
    console.error("error: --out and at least one input CSV are required");
    return 2;
  }
  try {
    const tables = inputs.map((p) => parseRunCsv(readFileSync(p, "utf-8"), p));
    writeFileSync(out, renderFigure(kind as FigureKind, tables));
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
