"""Static figures written next to the CSV/JSON outputs.

SVG output is made byte-reproducible: no creation date and a fixed hash
salt for element ids.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "svg.hashsalt": "kdeavg",
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    meta = {"Date": None} if path.suffix == ".svg" else None
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_estimates(x: np.ndarray, curves: Mapping[str, np.ndarray], path, sample=None, title=None) -> Path:
    """Overlay of density estimates on a common grid, with an optional rug."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for label, y in curves.items():
            lw = 2.0 if label == "AV" else 1.0
            ax.plot(x, y, lw=lw, label=label)
        if sample is not None:
            ymax = ax.get_ylim()[1]
            ax.plot(sample, np.full(len(sample), -0.02 * ymax), "|", color="0.4", ms=6)
        ax.set_xlabel("x")
        ax.set_ylabel("density")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_mise(report, path, scale: float = 1e5) -> Path:
    """MISE against n per method, one panel per density, log-log axes."""
    densities = list(dict.fromkeys(r.density for r in report.rows))
    methods = list(dict.fromkeys(r.method for r in report.rows))
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, len(densities), figsize=(3.2 * len(densities), 3.2), squeeze=False)
        for ax, dens in zip(axes[0], densities):
            for m in methods:
                rows = sorted((r for r in report.rows if r.density == dens and r.method == m), key=lambda r: r.n)
                rows = [r for r in rows if r.valid]
                if not rows:
                    continue
                ns = np.array([r.n for r in rows])
                mise = np.array([r.mise for r in rows]) * scale
                se = np.array([r.mc_se for r in rows]) * scale
                ax.errorbar(ns, mise, yerr=2 * se, marker="o", ms=3, lw=1, capsize=2, label=m)
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_title(dens)
            ax.set_xlabel("n")
        axes[0][0].set_ylabel(f"MISE x {scale:g}")
        axes[0][-1].legend(frameon=False, loc="best")
        return _save(fig, path)


def plot_densities(densities: Sequence, path, lo: float = -6.0, hi: float = 8.0, points: int = 1401) -> Path:
    """The benchmark densities on one grid."""
    x = np.linspace(lo, hi, points)
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, len(densities), figsize=(2.6 * len(densities), 2.4), sharey=True)
        for ax, d in zip(np.atleast_1d(axes), densities):
            ax.plot(x, d.pdf(x), color="k", lw=1)
            ax.set_title(d.name)
        return _save(fig, path)
