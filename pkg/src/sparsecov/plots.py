"""Report figures, rendered headlessly to image files.

Two plots: the rate diagnostic (log mean squared Frobenius error against
the theoretical rate variable, with the fitted slope) and the model-selection
path (score against lambda with the chosen point marked).
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _rate_points(report):
    xs, ys, ps = [], [], []
    for c in report.cells:
        if c.replicates_used > 0 and math.isfinite(c.mean_sq_frobenius) and c.mean_sq_frobenius > 0.0:
            xs.append(math.log((c.p + c.s) * math.log(max(c.p, 2)) / c.n))
            ys.append(math.log(c.mean_sq_frobenius))
            ps.append(c.p)
    return np.asarray(xs), np.asarray(ys), ps


def save_rate_figure(report, path):
    """Scatter of per-cell log errors against the rate variable, with fit."""
    xs, ys, ps = _rate_points(report)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for p in sorted(set(ps)):
        sel = np.asarray([q == p for q in ps])
        ax.plot(xs[sel], ys[sel], "o", label=f"p = {p}")
    if len(xs) >= 2 and math.isfinite(report.slope):
        intercept = float(ys.mean() - report.slope * xs.mean())
        grid = np.linspace(xs.min(), xs.max(), 50)
        ax.plot(grid, intercept + report.slope * grid, "k--",
                label=f"slope {report.slope:.2f} ± {report.slope_stderr:.2f}")
    ax.set_xlabel(r"$\log\{(p + s)\,\log p \,/\, n\}$")
    ax.set_ylabel(r"$\log$ mean $\|\cdot\|_F^2$ error")
    if ps:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_selection_figure(selection, path):
    """Score against lambda (log axis), with the chosen lambda marked."""
    lams = [row.lam for row in selection.table]
    bics = [row.bic for row in selection.table]
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.plot(lams, bics, "o-", ms=4)
    ax.axvline(selection.best_lambda, color="k", ls="--", lw=1,
               label=f"chosen λ = {selection.best_lambda:.4g}")
    ax.set_xscale("log")
    ax.set_xlabel("λ")
    ax.set_ylabel("score")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
