"""Performance statistics for factor return series.

Conventions: a trading year is 252 days; the annualized bias is the
arithmetic (summed) cumulative return scaled to a year, since these are
dollar-neutral overlay returns (a geometric variant is available behind a
flag); the t-statistic is the Sharpe ratio times the square root of the
span in years; monthly statistics aggregate calendar months (partial edge
months included) and use t = mean / std * sqrt(n_months).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .factors import FactorReturnSeries
from .riskmetrics import FactorCorrelationMatrix

TRADING_DAYS_PER_YEAR = 252
MIN_OBSERVATIONS = 252


@dataclass(frozen=True)
class PortfolioStats:
    """Daily- and monthly-frequency summary of one factor's returns."""

    annualized_bias: float  # fraction / year
    annualized_vol: float
    sharpe: float
    t_stat: float
    span_years: float
    monthly_mean: float
    monthly_std: float
    monthly_t: float
    n_months: int


def _returns_array(fr: FactorReturnSeries | pd.Series | np.ndarray) -> np.ndarray:
    if isinstance(fr, FactorReturnSeries):
        return fr.returns
    if isinstance(fr, pd.Series):
        return fr.to_numpy(dtype=float)
    return np.asarray(fr, dtype=float)


def annualized_bias(
    fr: FactorReturnSeries | pd.Series | np.ndarray, compounding: str = "arithmetic"
) -> float:
    """Annualized cumulative return between the first and last observation.

    ``arithmetic`` sums daily returns and scales by 252/n; ``geometric``
    compounds them.  Requires at least a year of observations.
    """
    r = _returns_array(fr)
    if r.size < MIN_OBSERVATIONS:
        raise ValueError(f"need >= {MIN_OBSERVATIONS} observations, got {r.size}")
    n = r.size
    if compounding == "arithmetic":
        return float(r.sum() * TRADING_DAYS_PER_YEAR / n)
    if compounding == "geometric":
        return float(np.prod(1.0 + r) ** (TRADING_DAYS_PER_YEAR / n) - 1.0)
    raise ValueError(f"unknown compounding {compounding!r}")


def monthly_aggregate(fr: FactorReturnSeries | pd.Series) -> pd.Series:
    """Calendar-month sums of daily returns (edge months kept as partial)."""
    s = fr.as_series() if isinstance(fr, FactorReturnSeries) else fr
    periods = s.index.to_period("M")
    if periods.nunique() < 2:
        raise ValueError("series must span at least two calendar months")
    out = s.groupby(periods).sum()
    out.index = out.index.astype(str)
    return out


def stats(fr: FactorReturnSeries | pd.Series, compounding: str = "arithmetic") -> PortfolioStats:
    """All summary statistics of a daily factor return series."""
    s = fr.as_series() if isinstance(fr, FactorReturnSeries) else fr
    r = s.to_numpy(dtype=float)
    bias = annualized_bias(r, compounding)
    vol = float(r.std(ddof=1) * math.sqrt(TRADING_DAYS_PER_YEAR))
    span_years = r.size / TRADING_DAYS_PER_YEAR
    sharpe = bias / vol if vol > 0 else float("nan")
    t_stat = sharpe * math.sqrt(span_years) if vol > 0 else float("nan")

    monthly = monthly_aggregate(s)
    m_mean = float(monthly.mean())
    m_std = float(monthly.std(ddof=1))
    m_t = m_mean / m_std * math.sqrt(len(monthly)) if m_std > 0 else float("nan")
    return PortfolioStats(
        annualized_bias=bias,
        annualized_vol=vol,
        sharpe=sharpe,
        t_stat=t_stat,
        span_years=span_years,
        monthly_mean=m_mean,
        monthly_std=m_std,
        monthly_t=m_t,
        n_months=len(monthly),
    )


def impact_decomposition(
    target: str,
    biases: dict[str, float],
    corr: FactorCorrelationMatrix | pd.DataFrame,
) -> tuple[dict[str, float], float]:
    """Split a factor's bias into cross-factor impacts and an intrinsic part.

    impact_j = bias_j * corr(target, j) for every other factor j, and
    intrinsic = bias_target - sum_j impact_j, so the identity
    bias_target = intrinsic + sum(impacts) holds exactly.
    """
    frame = corr.as_frame() if isinstance(corr, FactorCorrelationMatrix) else corr
    if target not in frame.index:
        raise KeyError(f"target {target!r} not in correlation matrix")
    if target not in biases:
        raise KeyError(f"target {target!r} not in biases")
    impacts: dict[str, float] = {}
    for other, rho in frame.loc[target].items():
        if other == target or other not in biases:
            continue
        impacts[str(other)] = float(biases[str(other)] * rho)
    intrinsic = float(biases[target] - sum(impacts.values()))
    return impacts, intrinsic


def implied_tstat(intrinsic_bias: float, bias: float, t_stat: float) -> float:
    """t-statistic the intrinsic bias would carry at the factor's own vol."""
    if bias == 0:
        return float("nan")
    return intrinsic_bias * t_stat / bias
