"""Monte-Carlo study of the curvature estimator on standard-normal samples.

Writes tests/fixtures/gamma_calibration.json, which pins the threshold used
by the acceptance suite. Re-run only when the estimator itself changes:

    python scripts/calibrate_gamma.py
"""

import json
from pathlib import Path

import numpy as np

from kdeavg.bench.densities import replication_rng, sample_density
from kdeavg.curvature import NORMAL_GAMMA, estimate_gamma

N = 2000
REPS = 200
SEED = 20240101
OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "gamma_calibration.json"


def main():
    rel = np.empty(REPS)
    for r in range(REPS):
        x = sample_density("Norm", N, replication_rng(SEED, "Norm", N, r))
        rel[r] = estimate_gamma(x).gamma_hat / NORMAL_GAMMA - 1.0
    probs = [0.05, 0.25, 0.5, 0.75, 0.95]
    absrel = np.abs(rel)
    result = {
        "density": "Norm",
        "n": N,
        "replications": REPS,
        "seed": SEED,
        "true_gamma": NORMAL_GAMMA,
        "signed_relative_error_quantiles": dict(zip(map(str, probs), np.quantile(rel, probs).tolist())),
        "abs_relative_error_quantiles": dict(zip(map(str, probs), np.quantile(absrel, probs).tolist())),
        # a median over fresh replications should sit well below the
        # population 75th percentile of |relative error|
        "median_abs_relative_error_threshold": float(np.quantile(absrel, 0.75)),
        "max_abs_relative_error": float(absrel.max()),
    }
    OUT.write_text(json.dumps(result, indent=2) + "\n")
    print(json.dumps(result, indent=2))


if __name__ == "__main__":
    main()
