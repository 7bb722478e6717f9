"""Headless figure writers for scan results.

Everything renders through the Agg backend and writes straight to file;
no interactive state.  Figures are companions to the delimited outputs,
never the primary record.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .sobolev import ScalingFit  # noqa: E402

__all__ = [
    "scaling_figure",
    "series_figure",
    "separation_figure",
    "term_figure",
]


def _fit_line(ns: np.ndarray, fit: ScalingFit) -> np.ndarray:
    return np.exp(fit.intercept) * ns ** fit.slope


def scaling_figure(points, fit: ScalingFit, ylabel: str, path,
                   bound: float | None = None,
                   window: tuple[float, float] | None = None,
                   title: str | None = None) -> None:
    """Log-log scatter of (n, value) with the fitted power law.

    `bound` draws a one-sided reference slope anchored at the first
    point; `window` shades the target slope band the same way.
    """
    ns = np.array([float(n) for n, _ in points])
    vs = np.array([v for _, v in points])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(ns, vs, "o", color="tab:blue", label="measured")
    dense = np.geomspace(ns.min(), ns.max(), 64)
    ax.loglog(dense, _fit_line(dense, fit), "-", color="tab:blue", lw=1.0,
              label=f"fit slope {fit.slope:+.3f}")
    anchor = vs[0]
    if bound is not None:
        ax.loglog(dense, anchor * (dense / ns[0]) ** bound, "--",
                  color="tab:red", lw=1.0, label=f"bound slope {bound:+.3f}")
    if window is not None:
        lo = anchor * (dense / ns[0]) ** window[0]
        hi = anchor * (dense / ns[0]) ** window[1]
        ax.fill_between(dense, lo, hi, color="tab:green", alpha=0.15,
                        label=f"target [{window[0]:+.2f}, {window[1]:+.2f}]")
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def series_figure(series, labels, ylabel: str, path, logy: bool = True,
                  title: str | None = None) -> None:
    """Time series plot; `series` rows are (t, v1, v2, ...) matching
    `labels`."""
    rows = np.array([list(r) for r in series], dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    plot = ax.semilogy if logy else ax.plot
    for j, lab in enumerate(labels):
        plot(rows[:, 0], rows[:, 1 + j], lw=1.2, label=lab)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def separation_figure(summaries, path, title: str | None = None) -> None:
    """Separation ratio against the 2|sin t| profile for each n."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    tt = np.linspace(0.0, 1.0, 200)
    ax.plot(tt, 2.0 * np.abs(np.sin(tt)), "k--", lw=1.0, label="2|sin t|")
    for s in summaries:
        ts = [t for t, _ in s.ratios]
        rs = [r for _, r in s.ratios]
        ax.plot(ts, rs, "o-", ms=4, lw=1.0, label=f"n = {s.n}")
    ax.set_xlabel("t")
    ax.set_ylabel("separation ratio")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def term_figure(norms_by_label: dict, path, title: str | None = None) -> None:
    """Log-log residual-term norms against n, one curve per term label.
    Labels whose norms vanish identically are listed in the legend but
    not drawn."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    zero_labels = []
    for label, pts in sorted(norms_by_label.items()):
        ns = np.array([float(n) for n, _ in pts])
        vs = np.array([v for _, v in pts])
        if np.all(vs <= 0.0) or not np.all(np.isfinite(np.log(vs[vs > 0]))):
            zero_labels.append(label)
            continue
        style = "s-" if label.startswith("total") else "o--"
        ax.loglog(ns, vs, style, ms=3, lw=1.0, label=label)
    if zero_labels:
        ax.plot([], [], " ", label="zero: " + ", ".join(zero_labels))
    ax.set_xlabel("n")
    ax.set_ylabel("term norm")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=6, ncol=2)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
