#!/usr/bin/env python3
"""Drive the full benchmark matrix and collect CSV results.

Reproduces the experiment grid behind the acceptance suite: four disc P1
configurations, two square P2 configurations and one cube P1 configuration.
Each run writes one CSV under the output directory; pass --quick for a
reduced level range when smoke testing.
"""

import argparse
import pathlib
import subprocess
import sys

EXPERIMENTS = [
    # (name, domain, s, r, order, levels, extra flags)
    ("disc_s025_r05", "disc", 0.25, 0.5, 1, (2, 7), []),
    ("disc_s025_r2", "disc", 0.25, 2.0, 1, (2, 7), []),
    ("disc_s075_r05", "disc", 0.75, 0.5, 1, (2, 7), []),
    ("disc_s075_r2", "disc", 0.75, 2.0, 1, (2, 7), []),
    ("square_s025_r2", "square", 0.25, 2.0, 2, (2, 8), ["--cm", "0.1", "--ch", "2.0"]),
    ("square_s025_r05", "square", 0.25, 0.5, 2, (2, 8), ["--ccross", "3.0", "--ch", "2.0"]),
    ("cube_s025_r2", "cube", 0.25, 2.0, 1, (1, 6), ["--cm", "0.1"]),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results", type=pathlib.Path)
    ap.add_argument("--quick", action="store_true", help="drop the two finest levels")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    status = 0
    for name, domain, s, r, order, (lo, hi), extra in EXPERIMENTS:
        if args.quick:
            hi = max(lo, hi - 2)
        out = args.out_dir / f"{name}.csv"
        cmd = [sys.executable, "-m", "fracpoisson.cli",
               "--domain", domain, "--s", str(s), "--r", str(r),
               "--order", str(order), "--levels", f"{lo}..{hi}",
               "--threads", str(args.threads), "--out", str(out), *extra]
        print("running:", " ".join(cmd), flush=True)
        rc = subprocess.call(cmd)
        if rc != 0:
            print(f"  -> FAILED ({name})", file=sys.stderr)
            status = 1
        else:
            print(f"  -> wrote {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
