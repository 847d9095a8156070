"""Command-line front end.

    kdeavg estimate DATA [--grid lo:hi:points] [--mode linear|convex] [--plot]
    kdeavg weights DATA [--format json|csv]
    kdeavg simulate --density Norm,Mix03 --n 200,1000 --methods nrd0,AV --reps 50
    kdeavg densities [--grid lo:hi:points]
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from kdeavg.averaging import average_estimator
from kdeavg.bandwidth import DEFAULT_SELECTORS, BandwidthSet
from kdeavg.bench.densities import DENSITIES
from kdeavg.bench.harness import METHODS, BenchmarkConfig, parse_list, run_benchmark
from kdeavg.bench.splitting import SplitScheme

log = logging.getLogger("kdeavg")


class CliError(Exception):
    pass


def read_sample(path) -> np.ndarray:
    """One decimal number per line; blank lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise CliError(f"input file not found: {path}")
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                v = float(text)
            except ValueError:
                raise CliError(f"{path}:{lineno}: cannot parse {text!r} as a number") from None
            if not math.isfinite(v):
                raise CliError(f"{path}:{lineno}: non-finite value {text!r}")
            values.append(v)
    if len(values) < 4:
        raise CliError(f"need at least 4 observations, {path} has {len(values)}")
    return np.array(values)


def parse_grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, points = text.split(":")
        lo, hi, points = float(lo), float(hi), int(points)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:points, got {text!r}") from None
    if points < 2 or not hi > lo:
        raise argparse.ArgumentTypeError("grid needs hi > lo and at least 2 points")
    return lo, hi, points


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_table(path: Path, columns: dict[str, np.ndarray], fmt: str) -> Path:
    names = list(columns)
    if fmt == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps({k: v.tolist() for k, v in columns.items()}) + "\n")
        return path
    path = path.with_suffix(".csv")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*columns.values()):
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def cmd_estimate(args) -> int:
    x = read_sample(args.input)
    est = average_estimator(x, DEFAULT_SELECTORS, args.mode)
    if args.grid is None:
        pad = 3.0 * est.max_bandwidth
        lo, hi, points = float(x.min()) - pad, float(x.max()) + pad, 401
    else:
        lo, hi, points = args.grid
    grid = np.linspace(lo, hi, points)
    columns = {"x": grid, "AV": np.asarray(est(grid))}
    for expert in est.experts:
        columns[expert.label] = expert(grid)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = _write_table(out / "estimate", columns, args.format)
    diag = dict(est.diagnostics)
    diag["weights_sum"] = float(est.weights.weights.sum())
    (out / "diagnostics.json").write_text(json.dumps(diag, indent=2) + "\n")
    written = [table, out / "diagnostics.json"]
    if args.plot:
        from kdeavg.plotting import plot_estimates

        curves = {k: v for k, v in columns.items() if k != "x"}
        written.append(plot_estimates(grid, curves, out / "estimate.svg", sample=x))
    for p in written:
        print(p)
    return 0


def cmd_weights(args) -> int:
    x = read_sample(args.input)
    bws = BandwidthSet.select(x, DEFAULT_SELECTORS)
    lin = average_estimator(x, bws, "linear")
    conv = average_estimator(x, bws, "convex")
    d = lin.diagnostics
    if args.format == "json":
        payload = {
            "n": d["n"],
            "bandwidths": d["bandwidths"],
            "gamma_hat": d["gamma_hat"],
            "pilot_bandwidth": d["pilot_bandwidth"],
            "gamma_degenerate": d["gamma_degenerate"],
            "condition_estimate": d["condition_estimate"],
            "weights_linear": lin.diagnostics["weights"],
            "weights_convex": conv.diagnostics["weights"],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "bandwidth", "weight_linear", "weight_convex"])
        for (label, h), wl, wc in zip(bws.entries, lin.weights, conv.weights):
            w.writerow([label, _fmt(h), _fmt(wl), _fmt(wc)])
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    densities = parse_list(args.density) or ["Norm"]
    unknown = [d for d in densities if d not in DENSITIES]
    if unknown:
        raise CliError(f"unknown density {', '.join(unknown)}; choose from {', '.join(DENSITIES)}")
    methods = parse_list(args.methods) or list(METHODS)
    lookup = {m.lower(): m for m in METHODS}
    bad = [m for m in methods if m.lower() not in lookup]
    if bad:
        raise CliError(f"unknown method {', '.join(bad)}; choose from {', '.join(METHODS)}")
    try:
        ns = parse_list(args.n, int) or [200]
    except ValueError:
        raise CliError(f"--n expects integers, got {args.n}") from None
    config = BenchmarkConfig(
        densities=densities,
        ns=ns,
        methods=[lookup[m.lower()] for m in methods],
        replications=args.reps,
        seed=args.seed,
        scheme=SplitScheme(num_splits=args.splits),
        workers=args.workers,
    )
    report = run_benchmark(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        path = out / "mise.json"
        path.write_text(report.to_json())
    else:
        path = out / "mise.csv"
        path.write_text(report.to_csv())
    sys.stdout.write(report.format_table())
    print(path)
    if args.plot:
        from kdeavg.plotting import plot_mise

        print(plot_mise(report, out / "mise.svg"))
    return 0


def cmd_densities(args) -> int:
    lo, hi, points = args.grid or (-6.0, 8.0, 1401)
    grid = np.linspace(lo, hi, points)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    columns = {"x": grid, **{name: np.asarray(d.pdf(grid), dtype=float) for name, d in DENSITIES.items()}}
    print(_write_table(out / "densities", columns, args.format))
    from kdeavg.plotting import plot_densities

    print(plot_densities(list(DENSITIES.values()), out / "densities.svg", lo, hi, points))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdeavg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="averaged density estimate of a data file on a grid")
    p.add_argument("input")
    p.add_argument("--grid", type=parse_grid, help="lo:hi:points, e.g. --grid=-4:4:201 (default: data range +- 3h, 401 points)")
    p.add_argument("--mode", choices=("linear", "convex"), default="linear")
    p.add_argument("--out", default="kdeavg-out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--plot", action="store_true", help="also write estimate.svg")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("weights", help="bandwidths, curvature and averaging weights for a data file")
    p.add_argument("input")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output file (default: standard output)")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("simulate", help="Monte-Carlo MISE comparison")
    p.add_argument("--density", action="append", help=f"one or more of {', '.join(DENSITIES)}")
    p.add_argument("--n", action="append", help="sample sizes, comma separated or repeated")
    p.add_argument("--methods", action="append", help=f"subset of {', '.join(METHODS)}")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits", type=int, default=10, help="random splits for AVsplit/RT/RTconv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="kdeavg-out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--plot", action="store_true", help="also write mise.svg")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("densities", help="curves of the benchmark densities")
    p.add_argument("--grid", type=parse_grid)
    p.add_argument("--out", default="kdeavg-out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_densities)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, np.linalg.LinAlgError) as err:
        print(f"kdeavg: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
