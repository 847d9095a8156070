"""Weighted combinations of Gaussian kernel density estimates whose
bandwidths come from several selectors, plus a Monte-Carlo bench."""

from kdeavg.averaging import (
    AveragedEstimator,
    SigmaModel,
    WeightVector,
    average_estimator,
    build_A,
    build_B,
    build_sigma,
    solve_weights_convex,
    solve_weights_linear,
)
from kdeavg.bandwidth import BandwidthSet, bw_nrd, bw_nrd0, bw_sheather_jones, bw_silverman
from kdeavg.curvature import CurvatureEstimate, estimate_gamma, gamma_true
from kdeavg.kernel import GAUSSIAN, KdeSpec, gram_inner, kde_eval, kernel_deriv, kernel_eval

__version__ = "0.1.0"
