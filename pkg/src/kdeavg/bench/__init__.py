"""Benchmark densities, ISE quadrature, split baselines and the MISE harness."""

from kdeavg.bench.densities import DENSITIES, DensitySpec, get_density, replication_rng, sample_density
from kdeavg.bench.harness import METHODS, BenchmarkConfig, MiseReport, run_benchmark
from kdeavg.bench.ise import asymptotic_ise, empirical_sigma, ise, ise_exact
from kdeavg.bench.splitting import SplitScheme, av_split, rt_aggregate
