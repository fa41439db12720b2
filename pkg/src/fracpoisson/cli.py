"""Benchmark CLI: convergence sweeps over refinement levels.

Writes one row per level with mesh size, problem dimensions, the exact
energy-norm error, the fitted log-log rate between consecutive levels,
solver iteration counts and wall times.  Output is CSV (with the run
configuration in leading comment lines) or JSON with the same fields plus
the full spectrum diagnostic.
"""

import argparse
import json
import math
import sys

from .errors import ConfigurationError
from .extension import FractionalParams
from .solver import ProblemSpec, SolveContext, solve
from . import verify

__all__ = ["RunConfig", "build_arg_parser", "run_convergence", "main"]

CSV_HEADER = ("level,h,n,M,M_tilde,N,h1alpha_error,fitted_rate,"
              "mean_cg_iters,setup_ms,eig_ms,solve_ms")
_COLUMNS = CSV_HEADER.split(",")


class RunConfig:
    """Validated configuration of one convergence run."""

    def __init__(self, domain="disc", s=0.25, r=2.0, k=1, min_level=2, max_level=6,
                 cg_tol=1e-10, c_m=1.0, c_cross=1.0, c_h=1.0, out="-",
                 fmt="csv", threads=1, base_resolution=1, timings=True):
        if min_level > max_level:
            raise ConfigurationError("min_level must be <= max_level")
        if not (0.0 < s < 1.0):
            raise ConfigurationError("s must lie in (0, 1)")
        if k not in (1, 2):
            raise ConfigurationError("order k must be 1 or 2")
        if fmt not in ("csv", "json"):
            raise ConfigurationError("format must be csv or json")
        self.domain, self.s, self.r, self.k = domain, s, r, k
        self.min_level, self.max_level = min_level, max_level
        self.cg_tol, self.c_m, self.c_cross, self.c_h = cg_tol, c_m, c_cross, c_h
        self.out, self.fmt, self.threads = out, fmt, threads
        self.base_resolution, self.timings = base_resolution, timings


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _metadata(config, dim, measure):
    return {
        "domain": config.domain, "s": config.s, "r": config.r, "k": config.k,
        "d": dim, "measure": measure, "cg_tol": config.cg_tol,
        "c_m": config.c_m, "c_cross": config.c_cross, "c_h": config.c_h,
        "threads": config.threads, "base_resolution": config.base_resolution,
    }


def run_convergence(config, stream=None, diag=sys.stderr):
    """Run all requested levels; returns (exit_status, rows, metadata).

    Rows already computed are kept (and written) even if a later level
    fails.
    """
    params = FractionalParams(s=config.s, r=config.r)
    context = SolveContext(config.domain, config.k, config.base_resolution)
    dim = context.hierarchy.levels[0].dim
    meta = _metadata(config, dim, context.hierarchy.domain_measure)

    rows = []
    spectra = {}
    status = 0
    try:
        series = verify.energy(config.domain, params)
        prev = None
        for level in range(config.min_level, config.max_level + 1):
            problem = ProblemSpec(
                domain_tag=config.domain, params=params, k=config.k, level=level,
                base_resolution=config.base_resolution, c_m=config.c_m,
                c_cross=config.c_cross, c_h=config.c_h, cg_tol=config.cg_tol,
                threads=config.threads)
            sol = solve(problem, context=context)
            err = verify.h1alpha_error(problem, sol, series)
            h = context.hierarchy.h_per_level[level]
            rep = sol.report
            if prev is None or err.value <= 0.0 or prev[1] <= 0.0:
                rate = math.nan
            else:
                rate = math.log(prev[1] / err.value) / math.log(prev[0] / h)
            prev = (h, err.value)
            row = {
                "level": level, "h": h, "n": rep.n, "M": rep.M,
                "M_tilde": rep.m_tilde, "N": rep.N,
                "h1alpha_error": err.value, "fitted_rate": rate,
                "mean_cg_iters": rep.mean_cg_iterations,
                "setup_ms": rep.setup_ms if config.timings else 0.0,
                "eig_ms": rep.eig_ms if config.timings else 0.0,
                "solve_ms": rep.solve_ms if config.timings else 0.0,
            }
            rows.append(row)
            spectra[level] = {
                "values": rep.spectrum.values.tolist(),
                "provenance": list(rep.spectrum.provenance),
                "multiplicity": rep.spectrum.multiplicity.tolist(),
                "fem_modes": rep.fem_modes,
                "eig_level": rep.eig_level,
            }
    except Exception as exc:  # partial results are still written below
        print(f"error: {exc}", file=diag)
        status = 1

    if stream is not None:
        _write(config, meta, rows, spectra, stream)
    return status, rows, meta


def _write(config, meta, rows, spectra, stream):
    if config.fmt == "csv":
        for key, val in meta.items():
            stream.write(f"# {key}={_fmt(val)}\n")
        stream.write(CSV_HEADER + "\n")
        for row in rows:
            stream.write(",".join(_fmt(row[c]) for c in _COLUMNS) + "\n")
    else:
        payload = {"config": meta, "rows": [
            {c: (None if isinstance(row[c], float) and math.isnan(row[c]) else row[c])
             for c in _COLUMNS} for row in rows],
            "spectrum": spectra}
        json.dump(payload, stream, indent=2)
        stream.write("\n")


def build_arg_parser():
    p = argparse.ArgumentParser(
        prog="fracpoisson",
        description="Convergence benchmark for the spectral fractional Poisson solver")
    p.add_argument("--domain", choices=["disc", "square", "cube"], default="disc")
    p.add_argument("--s", type=float, default=0.25, help="fractional order in (0,1)")
    p.add_argument("--r", type=float, default=2.0, help="data regularity index")
    p.add_argument("--order", type=int, default=1, choices=[1, 2], help="element order k")
    p.add_argument("--levels", default="2..6", help="refinement level range A..B")
    p.add_argument("--cg-tol", type=float, default=1e-10)
    p.add_argument("--cm", type=float, default=1.0, help="mode count constant")
    p.add_argument("--ccross", type=float, default=1.0, help="FEM/Weyl crossover constant")
    p.add_argument("--ch", type=float, default=1.0, help="eigensolve coarsening constant")
    p.add_argument("--out", default="-", help="output path, - for stdout")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--base-resolution", type=int, default=1)
    p.add_argument("--no-timings", action="store_true",
                   help="write zeros in the timing columns (byte-reproducible output)")
    return p


def _parse_levels(text):
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise ConfigurationError(f"cannot parse level range {text!r}, expected A..B") from None


def main(argv=None):
    args = build_arg_parser().parse_args(argv)
    try:
        lo, hi = _parse_levels(args.levels)
        config = RunConfig(domain=args.domain, s=args.s, r=args.r, k=args.order,
                           min_level=lo, max_level=hi, cg_tol=args.cg_tol,
                           c_m=args.cm, c_cross=args.ccross, c_h=args.ch,
                           out=args.out, fmt=args.format, threads=args.threads,
                           base_resolution=args.base_resolution,
                           timings=not args.no_timings)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if config.out == "-":
        status, _, _ = run_convergence(config, stream=sys.stdout)
    else:
        with open(config.out, "w") as fh:
            status, _, _ = run_convergence(config, stream=fh)
    return status


if __name__ == "__main__":
    sys.exit(main())
