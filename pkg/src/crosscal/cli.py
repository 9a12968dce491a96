"""Batch command line for cross-calibration analyses.

Subcommands mirror the library: `cep`, `lra`, `sra`, `mct` run tests on an
ingested CSV panel; `diag-marginal` and `diag-pithist` emit diagnostic plot
data; `simulate` writes a scenario draw as CSV; `fs` reproduces the interval
cross-calibration pass-rate table; `power` runs a Monte Carlo power study.

Every command writes a JSON report (validated against the bundled schema) and
a CSV with the plot- or table-ready numbers.  Runs are deterministic: the same
inputs and seed produce byte-identical outputs.  Exit status is 0 on success,
1 for input problems and 2 for statistical degeneracies.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .cep import DEFAULT_BOOTSTRAP_DATA, CepConfig, cep_test, data_grid, simulation_grid
from .csvio import dump_csv, ingest_csv, parse_family_spec
from .dataset import PredictionDataset
from .diagnostics import (
    ConditioningSpec,
    conditional_pit_histogram,
    conditioning_values,
    equal_count_bins,
    marginal_cross_calibration_curve,
)
from .errors import DegeneracyError, InputDataError
from .lra import lra_test
from .mct import TABLE_GRIDS, mct_test
from .schemas import validate_report
from .scenarios import (
    SCENARIO_NAMES,
    PowerStudySpec,
    ScenarioSpec,
    TestSpec,
    power_study,
    simulate,
)
from .sra import sra_test

_SERIAL_WARNING = (
    "warning: dataset marked serially dependent; the score regression "
    "approach assumes independent forecast-observation tuples"
)


def _write_json(report: dict, path: str) -> None:
    validate_report(report)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(rows, header, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(c) for c in row])


def _cell(c):
    return repr(float(c)) if isinstance(c, (float, np.floating)) else c


def _load(args) -> PredictionDataset:
    families = parse_family_spec(args.families) if args.families else None
    ds = ingest_csv(args.input, families=families, serial=getattr(args, "serial", False))
    if args.randomizer_seed is not None:
        ds = ds.with_randomizers(args.randomizer_seed)
    return ds


def _add_io_args(p, needs_j=True):
    p.add_argument("input", help="forecast-observation CSV (see docs for the layout)")
    p.add_argument("--families", help="family declarations, e.g. 'f1=normal,f2=student-t' "
                                      "(overrides the file's metadata line)")
    p.add_argument("--tested", type=int, default=1, help="forecaster under test (default 1)")
    if needs_j:
        p.add_argument("--wrt", type=int, nargs="*", default=[],
                       help="conditioning forecaster indices (empty = probabilistic calibration)")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--json-out", required=True, help="path of the JSON report")
    p.add_argument("--csv-out", required=True, help="path of the CSV output")
    p.add_argument("--randomizer-seed", type=int, default=None,
                   help="seed for PIT randomizers when the file has no v column "
                        "and a forecaster's CDF has jumps")
    p.add_argument("--serial", action="store_true",
                   help="mark the rows as serially dependent (affects warnings only)")


def _cmd_cep(args) -> int:
    ds = _load(args)
    if args.grid == "simulation":
        grid = simulation_grid()
    elif args.grid == "data":
        grid = data_grid()
    else:
        grid = np.asarray(sorted(float(z) for z in args.grid.split(",")))
    config = CepConfig(grid=grid, bootstrap=args.bootstrap, alpha=args.alpha, seed=args.seed)
    report = cep_test(ds, args.tested, args.wrt, config)
    _write_json(report.to_dict(), args.json_out)
    _write_csv(
        [(p.z, p.adjusted) for p in report.pointwise],
        ["z", "adjusted_pvalue"],
        args.csv_out,
    )
    print(f"cep: tested={args.tested} wrt={args.wrt or 'none'} "
          f"min adjusted p={report.min_adjusted:.6g} reject@{args.alpha}={report.reject}")
    return 0


def _cmd_lra(args) -> int:
    ds = _load(args)
    report = lra_test(ds, args.tested, args.wrt)
    _write_json(report.to_dict(), args.json_out)
    _write_csv(
        [("lra", args.tested, " ".join(map(str, args.wrt)), report.p_f, report.p_normal, report.p_adjusted)],
        ["test", "tested", "wrt", "p_f", "p_ad", "p_adjusted"],
        args.csv_out,
    )
    print(f"lra: p_F={report.p_f:.6g} p_AD={report.p_normal:.6g} p_adjusted={report.p_adjusted:.6g} "
          f"reject@{args.alpha}={report.p_adjusted <= args.alpha}")
    return 0


def _cmd_sra(args) -> int:
    ds = _load(args)
    if ds.serial:
        print(_SERIAL_WARNING, file=sys.stderr)
    report = sra_test(ds, args.tested, args.wrt, score=args.score)
    _write_json(report.to_dict(), args.json_out)
    _write_csv(
        [(args.score, args.tested, " ".join(map(str, report.conditioning)), report.statistic, report.pvalue)],
        ["score", "tested", "wrt", "statistic", "pvalue"],
        args.csv_out,
    )
    print(f"sra[{args.score}]: T={report.statistic:.6g} p={report.pvalue:.6g} "
          f"reject@{args.alpha}={report.pvalue <= args.alpha}")
    return 0


def _cmd_mct(args) -> int:
    ds = _load(args)
    if args.grid in TABLE_GRIDS:
        grid = np.asarray(TABLE_GRIDS[args.grid])
    else:
        grid = np.asarray(sorted(float(y) for y in args.grid.split(",")))
    report = mct_test(ds, args.tested, args.reference, grid)
    _write_json(report.to_dict(), args.json_out)
    _write_csv(
        [(len(report.grid), report.statistic, report.pvalue)],
        ["grid_size", "statistic", "pvalue"],
        args.csv_out,
    )
    print(f"mct (fragile: p-values are sensitive to the grid choice): "
          f"T={report.statistic:.6g} p={report.pvalue:.6g} reject@{args.alpha}={report.pvalue <= args.alpha}")
    return 0


def _cmd_diag_marginal(args) -> int:
    ds = _load(args)
    grid = None
    if args.grid:
        grid = np.asarray(sorted(float(y) for y in args.grid.split(",")))
    curve = marginal_cross_calibration_curve(ds, args.tested, args.reference, grid)
    report = {
        "test": "diag-marginal",
        "tested": args.tested,
        "reference": args.reference,
        "sup_abs_delta": float(np.max(np.abs(curve.delta))),
        "points": len(curve.grid),
    }
    _write_json(report, args.json_out)
    _write_csv(curve.rows(), ["y", "delta"], args.csv_out)
    print(f"diag-marginal: sup|delta| = {report['sup_abs_delta']:.6g} over {report['points']} grid points")
    return 0


def _cmd_diag_pithist(args) -> int:
    ds = _load(args)
    if args.equal_count:
        values = conditioning_values(ds, args.on, args.parameter)
        bins = equal_count_bins(values, args.equal_count)
    else:
        edges = [float(e) for e in args.bin_edges.split(",")]
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise InputDataError("--bin-edges must be at least two strictly increasing numbers")
        bins = list(zip(edges[:-1], edges[1:]))
    hist = conditional_pit_histogram(
        ds, args.tested, ConditioningSpec(args.on, args.parameter, bins), cells=args.cells
    )
    report = {
        "test": "diag-pithist",
        "tested": args.tested,
        "conditioning_forecaster": args.on,
        "conditioning_parameter": args.parameter,
        "bins": [[float(a), float(b)] for a, b in bins],
        "cells": args.cells,
        "unbinned": hist.unbinned,
    }
    _write_json(report, args.json_out)
    rows = [
        (b, f"({bins[b][0]:g},{bins[b][1]:g}]", cell, int(hist.counts[b, cell]))
        for b in range(len(bins))
        for cell in range(args.cells)
    ]
    _write_csv(rows, ["bin", "interval", "pit_cell", "count"], args.csv_out)
    print(f"diag-pithist: {len(bins)} bins x {args.cells} cells, "
          f"{hist.total - hist.unbinned} rows binned, {hist.unbinned} unbinned")
    return 0


def _cmd_simulate(args) -> int:
    spec = ScenarioSpec(args.scenario, args.rows, seed=args.seed)
    data = simulate(spec)
    if args.scenario == "binary-beta":
        raise InputDataError(
            "binary-beta yields interval forecasts, not a CSV panel; use the fs subcommand"
        )
    if args.with_randomizers:
        data = data.with_randomizers(args.seed)
    dump_csv(data, args.output)
    print(f"simulate: wrote {data.n_rows} rows x {data.n_forecasters} forecasters to {args.output}")
    return 0


def _cmd_fs(args) -> int:
    rows = []
    for length in args.lengths:
        spec = PowerStudySpec(
            scenario=ScenarioSpec("binary-beta", length),
            test=TestSpec("fs", tested=args.forecaster),
            replications=args.replications,
            alpha=args.alpha,
            seed=args.seed,
        )
        res = power_study(spec)
        rows.append({"length": length, "pass_rate": res.rate, "stderr": res.stderr,
                     "replications": res.completed})
        print(f"fs: T={length} pass rate {res.rate:.3f} +- {res.stderr:.3f}")
    report = {"test": "fs", "forecaster": args.forecaster, "rows": rows}
    _write_json(report, args.json_out)
    _write_csv([(r["length"], r["pass_rate"]) for r in rows], ["length", "pass_rate"], args.csv_out)
    return 0


def _cmd_power(args) -> int:
    options = {}
    if args.test == "cep":
        options["bootstrap"] = args.bootstrap
        options["grid"] = simulation_grid() if args.grid == "simulation" else data_grid()
    elif args.test == "sra":
        options["score"] = args.score
    elif args.test == "mct":
        options["grid"] = np.asarray(
            TABLE_GRIDS[args.mct_grid]
            if args.mct_grid in TABLE_GRIDS
            else [float(y) for y in args.mct_grid.split(",")]
        )
    elif args.test == "lra":
        options["statistic"] = args.statistic
    spec = PowerStudySpec(
        scenario=ScenarioSpec(args.scenario, args.rows),
        test=TestSpec(args.test, args.tested, tuple(args.wrt), options),
        replications=args.replications,
        alpha=args.alpha,
        seed=args.seed,
    )
    res = power_study(spec)
    report = {
        "test": "power",
        "scenario": args.scenario,
        "inner_test": args.test,
        "tested": args.tested,
        "wrt": list(args.wrt),
        "rows": args.rows,
        "rate": res.rate,
        "stderr": res.stderr,
        "replications": args.replications,
        "completed": res.completed,
        "failed": len(res.errors),
        "alpha": args.alpha,
        "seed": args.seed,
    }
    _write_json(report, args.json_out)
    _write_csv(
        [(args.scenario, args.test, args.tested, " ".join(map(str, args.wrt)), args.rows, res.rate, res.stderr)],
        ["scenario", "test", "tested", "wrt", "rows", "rate", "stderr"],
        args.csv_out,
    )
    print(f"power: {res}")
    if res.errors:
        print(f"power: {len(res.errors)} replicates failed "
              f"(first: replicate {res.errors[0][0]}: {res.errors[0][1]})", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crosscal",
        description="Cross-calibration diagnostics and tests for probabilistic forecasts",
    )
    parser.add_argument("--version", action="version", version=f"crosscal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cep", help="conditional exceedance probability test")
    _add_io_args(p)
    p.add_argument("--grid", default="data",
                   help="'simulation' (20 levels), 'data' (150 levels) or comma-separated levels")
    p.add_argument("--bootstrap", type=int, default=DEFAULT_BOOTSTRAP_DATA,
                   help=f"bootstrap resamples for the adjusted p-values (default {DEFAULT_BOOTSTRAP_DATA})")
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed (default 0)")
    p.set_defaults(fn=_cmd_cep)

    p = sub.add_parser("lra", help="linear regression approach test")
    _add_io_args(p)
    p.set_defaults(fn=_cmd_lra)

    p = sub.add_parser("sra", help="score regression approach test")
    _add_io_args(p)
    p.add_argument("--score", choices=["crps", "dss"], default="crps")
    p.set_defaults(fn=_cmd_sra)

    p = sub.add_parser("mct", help="marginal cross-calibration chi-squared test (fragile)")
    _add_io_args(p, needs_j=False)
    p.add_argument("--reference", type=int, required=True, help="reference forecaster j")
    p.add_argument("--grid", default="m4",
                   help="preset m3/m4/m9 or comma-separated grid values (default m4)")
    p.set_defaults(fn=_cmd_mct)

    p = sub.add_parser("diag-marginal", help="marginal cross-calibration curve data")
    _add_io_args(p, needs_j=False)
    p.add_argument("--reference", type=int, required=True, help="reference forecaster j")
    p.add_argument("--grid", default=None, help="comma-separated y grid (default: data-driven)")
    p.set_defaults(fn=_cmd_diag_marginal)

    p = sub.add_parser("diag-pithist", help="conditional PIT histogram data")
    _add_io_args(p, needs_j=False)
    p.add_argument("--on", type=int, required=True, help="conditioning forecaster index")
    p.add_argument("--parameter", required=True,
                   help="conditioning parameter name, or 'sd' for the predictive standard deviation")
    p.add_argument("--bin-edges", default=None,
                   help="comma-separated bin edges; bins are (lo, hi] between consecutive edges")
    p.add_argument("--equal-count", type=int, default=None,
                   help="number of equal-count quantile bins (alternative to --bin-edges)")
    p.add_argument("--cells", type=int, default=10, help="PIT histogram cells (default 10)")
    p.set_defaults(fn=_cmd_diag_pithist)

    p = sub.add_parser("simulate", help="draw a bundled scenario and write it as CSV")
    p.add_argument("scenario", choices=[s for s in SCENARIO_NAMES])
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--with-randomizers", action="store_true",
                   help="include a v column of PIT randomizers")
    p.add_argument("--output", required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("fs", help="interval cross-calibration pass-rate table")
    p.add_argument("--lengths", type=int, nargs="+", required=True,
                   help="series lengths T to simulate")
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--forecaster", type=int, choices=[1, 2], default=1)
    p.add_argument("--alpha", type=float, default=0.05, help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json-out", required=True)
    p.add_argument("--csv-out", required=True)
    p.set_defaults(fn=_cmd_fs)

    p = sub.add_parser("power", help="Monte Carlo power study on a bundled scenario")
    p.add_argument("scenario", choices=[s for s in SCENARIO_NAMES if s != "binary-beta"])
    p.add_argument("--test", choices=["cep", "lra", "sra", "mct"], required=True)
    p.add_argument("--tested", type=int, default=1)
    p.add_argument("--wrt", type=int, nargs="*", default=[])
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bootstrap", type=int, default=500, help="cep only (default 500)")
    p.add_argument("--grid", default="simulation", help="cep only: simulation or data")
    p.add_argument("--score", choices=["crps", "dss"], default="crps", help="sra only")
    p.add_argument("--statistic", choices=["adjusted", "f"], default="adjusted", help="lra only")
    p.add_argument("--mct-grid", default="m4", help="mct only: preset or comma-separated values")
    p.add_argument("--json-out", required=True)
    p.add_argument("--csv-out", required=True)
    p.set_defaults(fn=_cmd_power)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DegeneracyError as exc:
        print(f"error (statistical degeneracy): {exc}", file=sys.stderr)
        return 2
    except (InputDataError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
