"""Figure rendering for the CLI report paths.

Every report subcommand writes its delimited output first and then, unless
asked not to, a PNG next to it.  The CSV stays the canonical machine
interface; the figures are for eyeballing.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, out_path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def figure_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def degree_distribution_figure(rows, out_path, title="Degree distribution") -> Path:
    """Log-log scatter of degree frequencies."""
    ks = np.array([r[0] for r in rows], dtype=float)
    ps = np.array([r[1] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    positive = ks > 0
    ax.loglog(ks[positive], ps[positive], "ko", markersize=4)
    if (~positive).any():
        ax.plot([], [])  # degree-0 mass has no place on a log axis
    ax.set_xlabel("degree $k$")
    ax.set_ylabel("$p_k$")
    ax.set_title(title)
    return _save(fig, Path(out_path))


def overlay_figure(rows, out_path, title="Model fit vs observed degrees") -> Path:
    ks = np.array([r.degree for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    obs = np.array([r.observed for r in rows])
    sim = np.array([r.simulated for r in rows])
    pois = np.array([r.poisson for r in rows])
    pos = ks > 0
    m = pos & (obs > 0)
    ax.loglog(ks[m], obs[m], "ko", markersize=4, label="observed")
    m = pos & (sim > 0)
    ax.loglog(ks[m], sim[m], "o", mfc="none", mec="red", markersize=4, label="model fit")
    m = pos & (pois > 1e-12)
    ax.loglog(ks[m], pois[m], "k-.", linewidth=1, label="Poisson reference")
    ax.set_xlabel("degree $k$")
    ax.set_ylabel("$p_k$")
    ax.set_title(title)
    ax.legend()
    return _save(fig, Path(out_path))


def mc_records_figure(records, s0: int, out_path) -> Path:
    """Selected-size error counts and the spread of the beta estimation error."""
    ok = [r for r in records if not r.error]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    if ok:
        deltas = np.array([r.s_hat - s0 for r in ok])
        values, counts = np.unique(deltas, return_counts=True)
        ax1.bar(values, counts / len(ok), color="steelblue", width=0.8)
        ax2.hist([r.l1_beta_error for r in ok], bins=30, color="steelblue")
    ax1.set_xlabel(r"$\hat{s} - s_0$")
    ax1.set_ylabel("frequency")
    ax1.set_title("selected sparsity error")
    ax2.set_xlabel(r"$\|\hat{\beta} - \beta_0\|_1$")
    ax2.set_ylabel("count")
    ax2.set_title("beta estimation error")
    return _save(fig, Path(out_path))


def takeup_figure(table_rows, out_path) -> Path:
    """Coefficients with 95% bars per take-up model, intercepts omitted."""
    rows = [r for r in table_rows if r["term"] != "intercept"]
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = []
    for pos, r in enumerate(rows):
        est, se = r["estimate"], r["std_error"]
        ax.errorbar(pos, est, yerr=1.96 * se if np.isfinite(se) else 0.0,
                    fmt="o", color="black", capsize=3)
        labels.append(f"({r['model']}) {r['term']}")
    ax.axhline(0.0, color="grey", linewidth=0.8)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("coefficient")
    ax.set_title("take-up regressions")
    return _save(fig, Path(out_path))
