"""Matplotlib figures rendered next to the delimited reports.

All rendering is file-based (PNG via the Agg backend) with pinned metadata,
so two runs of the same pipeline produce byte-identical images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .spectrum import SpectrumClassification, mp_density

DPI = 120
_PNG_METADATA = {"Software": "factorlens"}

_RC = {
    "figure.figsize": (8.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.1,
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, metadata=_PNG_METADATA, bbox_inches="tight")
    plt.close(fig)
    return path


def series_figure(
    series: dict[str, pd.Series],
    path: str | Path,
    title: str,
    ylabel: str,
    hlines: tuple[float, ...] = (),
) -> Path:
    """One line per named series on a shared date axis."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for name in sorted(series):
            s = series[name]
            ax.plot(s.index, s.to_numpy(), label=name)
        for y in hlines:
            ax.axhline(y, color="gray", linestyle="--", linewidth=0.8)
        ax.set_title(title)
        ax.set_ylabel(ylabel)
        if len(series) > 1:
            ax.legend(ncol=2)
        return _save(fig, path)


def cumulative_returns_figure(returns: dict[str, pd.Series], path: str | Path) -> Path:
    """Cumulative summed daily returns per factor."""
    cum = {name: s.cumsum() for name, s in returns.items()}
    return series_figure(cum, path, "Cumulative factor performance", "cumulative return")


def spectrum_histogram_figure(
    cls: SpectrumClassification, q: float, path: str | Path
) -> Path:
    """Histogram of sqrt eigenvalues with the MP density and noise edge."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        widths = np.diff(cls.bin_edges)
        ax.bar(
            cls.bin_edges[:-1],
            cls.counts,
            width=widths,
            align="edge",
            color="steelblue",
            edgecolor="white",
            label="empirical",
        )
        # MP density of lambda mapped to sqrt(lambda) bins: counts per bin.
        n_total = int(cls.counts.sum())
        grid = np.linspace(cls.bin_edges[0] + 1e-9, cls.bin_edges[-1], 400)
        lam = grid**2
        density = mp_density(lam, q) * 2.0 * grid * n_total * widths[0]
        ax.plot(grid, density, color="darkred", label="Marcenko-Pastur")
        ax.axvline(cls.threshold_sqrt, color="black", linestyle="--", linewidth=0.9,
                   label=f"noise edge {cls.threshold_sqrt:.2f}")
        ax.set_title(
            f"Eigenvalue spectrum (market mode sqrt = {cls.market_sqrt:.2f}, excluded)"
        )
        ax.set_xlabel("sqrt(eigenvalue)")
        ax.set_ylabel("count per bin")
        ax.legend()
        return _save(fig, path)


def rolling_correlation_figure(
    series: dict[str, pd.Series], band: float, path: str | Path
) -> Path:
    return series_figure(
        series,
        path,
        "Rolling correlation of vol-normalized factor returns",
        "correlation",
        hlines=(band, -band),
    )


def ladder_figure(report: pd.DataFrame, path: str | Path) -> Path:
    """Monthly volatility per factor across the A0..A6 rungs."""
    stds = report.xs("std", level="stat")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for column in stds.columns:
            ax.plot(stds.index, 100 * stds[column].to_numpy(), marker="o", label=column)
        ax.set_title("Monthly factor volatility across construction rungs")
        ax.set_ylabel("monthly std (%)")
        ax.legend(ncol=2)
        return _save(fig, path)
