"""Monte-Carlo estimation of the MISE of competing density estimators."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from kdeavg.averaging import SingularSigmaError, average_estimator
from kdeavg.bandwidth import DEFAULT_SELECTORS, SELECTORS, BandwidthError, BandwidthSet
from kdeavg.bench.densities import get_density, replication_rng, sample_density
from kdeavg.bench.ise import ise
from kdeavg.bench.splitting import SplitScheme, av_split, prepare_splits, rt_aggregate
from kdeavg.curvature import DegenerateCurvatureError
from kdeavg.kernel import KdeSpec, as_sample

log = logging.getLogger(__name__)

METHODS = ("nrd", "nrd0", "sj", "AV", "AVsplit", "RT", "AVconv", "RTconv")
SINGLE_METHODS = ("nrd", "nrd0", "sj")
SPLIT_METHODS = ("AVsplit", "RT", "RTconv")
CSV_HEADER = ("density", "n", "method", "mise", "mc_se", "reps", "failed", "seed")
MAX_FAILED_FRACTION = 0.01


def canonical_method(name: str) -> str:
    lookup = {m.lower(): m for m in METHODS}
    try:
        return lookup[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}") from None


@dataclass(frozen=True)
class BenchmarkConfig:
    densities: Sequence[str] = ("Norm",)
    ns: Sequence[int] = (200,)
    methods: Sequence[str] = METHODS
    replications: int = 100
    seed: int = 0
    scheme: SplitScheme = SplitScheme()
    workers: int = 1

    def __post_init__(self):
        if self.replications < 2:
            raise ValueError("at least 2 replications are needed for a standard error")
        for name in self.densities:
            get_density(name)
        object.__setattr__(self, "densities", tuple(self.densities))
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "methods", tuple(canonical_method(m) for m in self.methods))
        if any(n < 8 for n in self.ns) and any(m in SPLIT_METHODS for m in self.methods):
            raise ValueError("split methods need n >= 8")
        if any(n < 4 for n in self.ns):
            raise ValueError("sample sizes must be at least 4")


def _reason(err: Exception) -> str:
    if isinstance(err, BandwidthError):
        return "bandwidth"
    if isinstance(err, SingularSigmaError):
        return "singular"
    if isinstance(err, DegenerateCurvatureError):
        return "curvature"
    return type(err).__name__


def run_replication(
    density: str, n: int, replication: int, methods: Sequence[str], seed: int, scheme: SplitScheme
) -> dict[str, float | str]:
    """ISE of every requested method on one sample; failures map to a reason code."""
    truth = get_density(density)
    rng = replication_rng(seed, density, n, replication)
    x = as_sample(sample_density(truth, n, rng))
    out: dict[str, float | str] = {}

    bws: dict[str, float | str] = {}
    if any(m not in SPLIT_METHODS for m in methods):
        for sel in DEFAULT_SELECTORS:
            try:
                bws[sel] = SELECTORS[sel](x)
            except (BandwidthError, ValueError) as err:
                bws[sel] = _reason(err)

    for m in methods:
        if m in SINGLE_METHODS:
            h = bws[m]
            out[m] = h if isinstance(h, str) else ise(KdeSpec(x, h, label=m), truth)
    for m, mode in (("AV", "linear"), ("AVconv", "convex")):
        if m not in methods:
            continue
        bad = [v for v in bws.values() if isinstance(v, str)]
        if bad:
            out[m] = bad[0]
            continue
        try:
            est = average_estimator(x, BandwidthSet(tuple(bws.items())), mode)
            out[m] = ise(est, truth)
        except (SingularSigmaError, ValueError) as err:
            out[m] = _reason(err)

    wanted = [m for m in methods if m in SPLIT_METHODS]
    if wanted:
        try:
            splits = prepare_splits(x, DEFAULT_SELECTORS, scheme, rng)
        except (BandwidthError, ValueError) as err:
            splits = _reason(err)
        for m in wanted:
            if isinstance(splits, str):
                out[m] = splits
                continue
            try:
                if m == "AVsplit":
                    est = av_split(x, splits=splits)
                else:
                    est = rt_aggregate(x, mode="linear" if m == "RT" else "convex", splits=splits)
                out[m] = ise(est, truth)
            except (SingularSigmaError, ValueError) as err:
                out[m] = _reason(err)
    return out


@dataclass(frozen=True)
class MiseRow:
    density: str
    n: int
    method: str
    mise: float
    mc_se: float
    reps: int
    failed: int
    seed: int
    failure_reasons: dict = field(default_factory=dict, compare=False)

    @property
    def valid(self) -> bool:
        return self.failed <= MAX_FAILED_FRACTION * self.reps


@dataclass
class MiseReport:
    """MISE estimates keyed by (density, n, method), plus the raw ISE values."""

    rows: list[MiseRow]
    ise_values: dict = field(default_factory=dict, repr=False)

    def row(self, density: str, n: int, method: str) -> MiseRow:
        for r in self.rows:
            if (r.density, r.n, r.method) == (density, n, method):
                return r
        raise KeyError((density, n, method))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            mise, se = (f"{r.mise:.17g}", f"{r.mc_se:.17g}") if r.valid else ("nan", "nan")
            w.writerow([r.density, r.n, r.method, mise, se, r.reps, r.failed, r.seed])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [
            {
                "density": r.density,
                "n": r.n,
                "method": r.method,
                "mise": r.mise if r.valid else None,
                "mc_se": r.mc_se if r.valid else None,
                "reps": r.reps,
                "failed": r.failed,
                "seed": r.seed,
                "failure_reasons": r.failure_reasons,
            }
            for r in self.rows
        ]
        return json.dumps(rows, indent=2) + "\n"

    def format_table(self, scale: float = 1e5) -> str:
        """Densities and sample sizes down, methods across; MISE times ``scale``."""
        methods = list(dict.fromkeys(r.method for r in self.rows))
        keys = list(dict.fromkeys((r.n, r.density) for r in self.rows))
        lines = [f"MISE x {scale:g} (MC standard error in parentheses)"]
        head = f"{'n':>6} {'Law':<7}" + "".join(f"{m:>16}" for m in methods)
        lines += [head, "-" * len(head)]
        for n, dens in keys:
            cells = []
            for m in methods:
                r = self.row(dens, n, m)
                cells.append(f"{r.mise * scale:9.1f} ({r.mc_se * scale:4.1f})" if r.valid else "invalid")
            lines.append(f"{n:>6} {dens:<7}" + "".join(f"{c:>16}" for c in cells))
        return "\n".join(lines) + "\n"


def _task(args):
    density, n, r, methods, seed, scheme = args
    return (density, n, r), run_replication(density, n, r, methods, seed, scheme)


def run_benchmark(config: BenchmarkConfig) -> MiseReport:
    """Estimate MISE for every (density, n, method) of the configuration.

    Replication r of (density, n) is seeded from (seed, density, n, r), so
    results do not depend on ``workers`` or execution order.
    """
    tasks = [
        (d, n, r, config.methods, config.seed, config.scheme)
        for d in config.densities
        for n in config.ns
        for r in range(config.replications)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = dict(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * config.workers))))
    else:
        results = dict(map(_task, tasks))

    rows, values = [], {}
    for d in config.densities:
        for n in config.ns:
            for m in config.methods:
                outcomes = [results[(d, n, r)][m] for r in range(config.replications)]
                good = np.array([v for v in outcomes if not isinstance(v, str)], dtype=float)
                reasons: dict[str, int] = {}
                for v in outcomes:
                    if isinstance(v, str):
                        reasons[v] = reasons.get(v, 0) + 1
                failed = config.replications - good.size
                if good.size >= 2:
                    mise, se = float(good.mean()), float(good.std(ddof=1) / np.sqrt(good.size))
                else:
                    mise = se = float("nan")
                if failed:
                    log.warning("%s n=%d %s: %d failed replications %s", d, n, m, failed, reasons)
                rows.append(MiseRow(d, n, m, mise, se, config.replications, failed, config.seed, reasons))
                values[(d, n, m)] = good
    return MiseReport(rows, values)


def parse_list(values: Iterable[str] | str | None, cast=str) -> list:
    """Flatten repeated and comma-separated option values."""
    if values is None:
        return []
    if isinstance(values, str):
        values = [values]
    return [cast(item.strip()) for v in values for item in v.split(",") if item.strip()]


