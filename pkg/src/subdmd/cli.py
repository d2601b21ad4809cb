"""Command-line front end.

Subcommands::

    subdmd simulate SPEC.json --out snapshots.csv [--seed S]
    subdmd dmd SNAPSHOTS.csv --method {standard,tls,nc,subspace} [--rank R] [--sigma-o S] [--out result.json]
    subdmd experiment CONFIG.json [--trials N] [--seed S] [--out DIR]

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
``KOOPMAN_THREADS`` caps the number of threads used for experiment trials.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, dmd, io, stats, systems
from .errors import NumericalError, ParameterError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

SWEEP_PARAMS = ("sigma_o", "sigma_p", "m", "rank")


def simulate_from_doc(doc: dict, seed: int | None = None) -> dmd.SnapshotMatrix:
    spec = io.system_from_json(doc.get("system"))
    noise = io.noise_from_json(doc.get("noise"))
    if seed is not None:
        noise = replace(noise, seed=seed)
    if isinstance(spec, systems.BurgersSpec):
        return systems.burgers_solve(spec, noise)
    if "m" not in doc:
        raise ParameterError("config needs the snapshot count 'm'")
    m = int(doc["m"])
    if isinstance(spec, systems.LTISpec):
        return systems.lti_trajectory(spec, noise, m)
    return systems.stuart_landau_snapshots(spec, noise, m)


def cmd_simulate(args) -> int:
    y = simulate_from_doc(io.load_json(args.spec), args.seed)
    out = args.out or Path(args.spec).with_suffix(".csv")
    io.write_snapshot_csv(out, y)
    print(f"n={y.n} m={y.m} dt={io.fmt(y.dt)}")
    return EXIT_OK


def outcome_to_json(outcome: dmd.DmdOutcome) -> dict:
    cont = dmd.to_continuous(outcome.eigenvalues, outcome.dt)
    return {
        "schema_version": io.SCHEMA_VERSION,
        "version": __version__,
        "method": outcome.method,
        "dt": outcome.dt,
        "retained_rank": outcome.retained_rank,
        "eigenvalues": [io.complex_to_json(v) for v in outcome.eigenvalues],
        "continuous_eigenvalues": [io.complex_to_json(v) for v in np.atleast_1d(cont)],
        "modes": [[io.complex_to_json(v) for v in outcome.modes[:, i]]
                  for i in range(outcome.modes.shape[1])],
    }


def cmd_dmd(args) -> int:
    y = io.read_snapshot_csv(args.input)
    if args.method == "nc" and args.sigma_o is None:
        raise ParameterError("--method nc requires --sigma-o")
    outcome = dmd.run_method(args.method, y, rank=args.rank, sigma_o=args.sigma_o)
    doc = outcome_to_json(outcome)
    if args.out:
        io.dump_json(args.out, doc)
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def _experiment_points(doc: dict):
    """Expand the method list and optional sweep into ``(method, param, value)``."""
    methods = doc.get("method", "subspace")
    methods = [methods] if isinstance(methods, str) else list(methods)
    sweep = doc.get("sweep")
    if sweep is None:
        return [(m, None, None) for m in methods]
    param, values = sweep.get("param"), sweep.get("values")
    if param not in SWEEP_PARAMS or not isinstance(values, list) or not values:
        raise ParameterError(f"sweep needs 'param' in {SWEEP_PARAMS} and a nonempty 'values' list")
    return [(m, param, v) for m, v in itertools.product(methods, values)]


def experiment_config(doc: dict, method: str, param=None, value=None,
                      trials: int | None = None, seed: int | None = None) -> stats.ExperimentConfig:
    system = io.system_from_json(doc.get("system"))
    noise = io.noise_from_json(doc.get("noise"))
    fields = {
        "m": int(doc.get("m", 1000)),
        "trials": int(trials if trials is not None else doc.get("trials", 100)),
        "base_seed": int(seed if seed is not None else doc.get("base_seed", 0)),
        "rank": doc.get("rank"),
    }
    truth = doc.get("truth")
    if truth is not None:
        truth = io.complex_array_from_json(truth)
    if param in ("sigma_o", "sigma_p"):
        noise = replace(noise, **{param: float(value)})
    elif param is not None:
        fields[param] = int(value)
    return stats.ExperimentConfig(system, noise, method=method, truth=truth, **fields)


def stats_to_json(result: stats.TrialStats, method: str, param, value) -> dict:
    eigs = []
    for j, truth in enumerate(result.truth):
        re_lo, re_hi, im_lo, im_hi = result.interval[j]
        eigs.append({
            "truth": io.complex_to_json(truth),
            "mean": io.complex_to_json(result.mean[j]),
            "interval": {k: io._json_float(v) for k, v in
                         zip(("re_lo", "re_hi", "im_lo", "im_hi"), (re_lo, re_hi, im_lo, im_hi))},
            "median_epsilon": io._json_float(result.median_error[j]),
            "contains_truth": result.contains(j) if not np.isnan(re_lo) else False,
        })
    return {
        "method": method,
        "sweep": None if param is None else {"param": param, "value": value},
        "trials": result.trials,
        "failed": result.failed,
        "eigenvalues": eigs,
    }


def table_rows(result: stats.TrialStats, method: str, value) -> list[str]:
    rows = []
    sweep = "" if value is None else str(value)
    for t in range(result.trials):
        for j in range(result.truth.size):
            z = result.estimates[t, j]
            rows.append(",".join([method, sweep, str(t), str(j), io.fmt(z.real), io.fmt(z.imag),
                                  io.fmt(result.errors[t, j])]))
    return rows


def cmd_experiment(args) -> int:
    doc = io.load_json(args.config)
    points = _experiment_points(doc)
    configs = [experiment_config(doc, *p, trials=args.trials, seed=args.seed) for p in points]
    outputs = doc.get("outputs", {})
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        stats_path, table_path = out_dir / "stats.json", out_dir / "trials.csv"
    else:
        base = Path(args.config).with_suffix("")
        stats_path = Path(outputs.get("stats", f"{base}.stats.json"))
        table_path = Path(outputs.get("table", f"{base}.trials.csv"))
    results, rows = [], ["method,sweep_value,trial,eig,re,im,epsilon"]
    for (method, param, value), config in zip(points, configs):
        result = stats.run_trials(config)
        results.append(stats_to_json(result, method, param, value))
        rows += table_rows(result, method, value)
        print(f"{method}" + ("" if param is None else f" {param}={value}")
              + f": median epsilon {np.round(result.median_error, 5).tolist()}, failed {len(result.failed)}")
    io.dump_json(stats_path, {
        "schema_version": io.SCHEMA_VERSION,
        "version": __version__,
        "interval_convention": stats.INTERVAL_CONVENTION,
        "results": results,
    })
    io.atomic_write(table_path, "\n".join(rows) + "\n")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subdmd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a system to a snapshot CSV")
    p.add_argument("spec", help="system/noise JSON file")
    p.add_argument("--seed", type=int, help="override the noise seed")
    p.add_argument("--out", help="output CSV path (default: SPEC with .csv suffix)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dmd", help="decompose a snapshot CSV")
    p.add_argument("input", help="snapshot CSV file")
    p.add_argument("--method", choices=("standard", "tls", "nc", "subspace"), default="subspace")
    p.add_argument("--rank", type=int)
    p.add_argument("--sigma-o", dest="sigma_o", type=float,
                   help="observation-noise std (required by nc)")
    p.add_argument("--out", help="result JSON path (default: stdout)")
    p.set_defaults(func=cmd_dmd)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment config")
    p.add_argument("config", help="experiment JSON file")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="override base_seed")
    p.add_argument("--out", help="output directory for stats.json and trials.csv")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"subdmd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"subdmd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"subdmd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
