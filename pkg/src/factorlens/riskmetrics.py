"""Factor correlation level, net investment, and inter-factor correlations.

The factor correlation level (FCL) is the square root of the ratio between
the factor's smoothed realized variance and the smoothed sum of its
weighted constituent variances:

    FCL(t) = ( EMA{ r^2(t) } / EMA{ sum_i w_i^2(t) sigma_i^2(t) } )^(1/2)

with a 200-day EMA on both sides.  A portfolio of independent constituents
gives FCL near 1; co-moving constituents push it above 1, in analogy with
an eigenvalue of the correlation matrix of volatility-normalized returns.
Both sides are measured in daily variance units: the numerator uses daily
factor returns, so the annualized constituent volatilities are converted
with sigma^2 / 252 (mixing units would rescale every FCL by a constant and
break comparability with the noise floor).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .estimators import TRADING_DAYS_PER_YEAR, VolSeries, ema
from .factors import FactorReturnSeries, FactorWeights

log = logging.getLogger(__name__)

DEFAULT_FCL_PERIOD = 200
DEFAULT_CORR_NORM_PERIOD = 20
DEFAULT_ROLLING_WINDOW = 90

# Eq-12 denominators below this are treated as missing rather than divided.
DENOMINATOR_FLOOR = 1e-18

# Both EMAs are seeded on the first valid day; FCL is reported only after
# this many accumulation days to limit seed bias.
FCL_BURN_IN_DAYS = 40

MIN_CORRELATION_OVERLAP = 100


@dataclass(frozen=True)
class FclSeries:
    """Per-date factor correlation level with its two EMA accumulators."""

    indicator_id: str
    band: str
    dates: pd.DatetimeIndex
    fcl: np.ndarray  # (T,), NaN before burn-in
    num_ema: np.ndarray  # (T,) EMA of squared daily factor returns
    den_ema: np.ndarray  # (T,) EMA of sum_i w_i^2 sigma_i^2 (daily variance)
    period: int

    def as_series(self) -> pd.Series:
        return pd.Series(self.fcl, index=self.dates, name=f"{self.indicator_id}:{self.band}")

    def mean(self, skip: int = 0) -> float:
        """Average FCL over valid days, optionally skipping the first rows."""
        vals = self.fcl[skip:]
        vals = vals[np.isfinite(vals)]
        return float(vals.mean()) if vals.size else float("nan")


@dataclass(frozen=True)
class DeltaSeries:
    """Net investment per date: sum(w) / sum(|w|), in [-1, 1]."""

    indicator_id: str
    band: str
    dates: pd.DatetimeIndex
    delta: np.ndarray  # (T,)

    def as_series(self) -> pd.Series:
        return pd.Series(self.delta, index=self.dates, name=f"{self.indicator_id}:{self.band}")


@dataclass(frozen=True)
class FactorCorrelationMatrix:
    """Pearson correlations of volatility-normalized factor returns."""

    factor_ids: tuple[str, ...]
    matrix: np.ndarray  # (K, K)
    n_obs: int
    vol_window: int

    @property
    def standard_error(self) -> float:
        """Gaussian-noise standard error of one coefficient, 1/sqrt(m)."""
        return 1.0 / np.sqrt(self.n_obs)

    def as_frame(self) -> pd.DataFrame:
        ids = list(self.factor_ids)
        return pd.DataFrame(self.matrix, index=ids, columns=ids)


@dataclass(frozen=True)
class RollingCorrelation:
    """Sliding-window correlation of two vol-normalized return series."""

    dates: pd.DatetimeIndex
    values: np.ndarray
    window: int
    significance_band: float  # +/- one standard deviation under independence


def weighted_variance_input(w: FactorWeights, vols: VolSeries) -> np.ndarray:
    """Daily denominator input of the FCL: sum_i w_i^2 sigma_i^2 / 252."""
    daily_var = vols.values**2 / TRADING_DAYS_PER_YEAR
    invested = w.weights != 0.0
    dropped = int((invested & ~np.isfinite(daily_var)).sum())
    if dropped:
        log.warning(
            "%s/%s: %d member-day(s) missing sigma in the denominator",
            w.indicator_id,
            w.band.kind,
            dropped,
        )
    terms = np.where(invested & np.isfinite(daily_var), w.weights**2 * daily_var, 0.0)
    return terms.sum(axis=1)


def fcl_from_series(
    dates: pd.DatetimeIndex,
    factor_returns: np.ndarray,
    weighted_variance: np.ndarray,
    period: int = DEFAULT_FCL_PERIOD,
    indicator_id: str = "",
    band: str = "",
) -> FclSeries:
    """FCL from precomputed daily inputs (see module docstring).

    Days with no invested weight (weighted_variance = 0 or missing) are
    skipped: they leave both EMA accumulators unchanged.  The value stays
    missing until FCL_BURN_IN_DAYS valid days have accumulated and whenever
    the denominator EMA is below DENOMINATOR_FLOOR.
    """
    num_input = np.asarray(factor_returns, dtype=float) ** 2
    den_input = np.asarray(weighted_variance, dtype=float)
    active = np.isfinite(num_input) & np.isfinite(den_input) & (den_input > 0.0)
    num_ema = ema(np.where(active, num_input, np.nan), period)
    den_ema = ema(np.where(active, den_input, np.nan), period)

    seen = np.cumsum(active)
    ok = (seen >= FCL_BURN_IN_DAYS) & np.isfinite(den_ema) & (den_ema > DENOMINATOR_FLOOR)
    values = np.full(len(dates), np.nan)
    values[ok] = np.sqrt(num_ema[ok] / den_ema[ok])
    return FclSeries(
        indicator_id=indicator_id,
        band=band,
        dates=dates,
        fcl=values,
        num_ema=num_ema,
        den_ema=den_ema,
        period=int(period),
    )


def fcl(
    fr: FactorReturnSeries,
    w: FactorWeights,
    vols: VolSeries,
    period: int = DEFAULT_FCL_PERIOD,
) -> FclSeries:
    """Factor correlation level of one factor (see module docstring)."""
    if len(fr.dates) != len(w.dates) or len(fr.dates) != len(vols.dates):
        raise ValueError("factor returns, weights, and volatilities must be date-aligned")
    return fcl_from_series(
        fr.dates,
        fr.returns,
        weighted_variance_input(w, vols),
        period=period,
        indicator_id=fr.indicator_id,
        band=fr.band,
    )


def net_investment(w: FactorWeights) -> DeltaSeries:
    """Net over gross investment per day; missing when nothing is invested."""
    gross = np.abs(w.weights).sum(axis=1)
    net = w.weights.sum(axis=1)
    delta = np.full(len(w.dates), np.nan)
    invested = gross > 0
    delta[invested] = net[invested] / gross[invested]
    return DeltaSeries(w.indicator_id, w.band.kind, w.dates, delta)


def delta_from_betas(beta_long_avg: float, beta_short_avg: float) -> float:
    """Net-investment proxy from the two leg-average betas.

    delta = (<beta_S> - <beta_L>) / (<beta_S> + <beta_L>); missing when the
    denominator vanishes.
    """
    denom = beta_short_avg + beta_long_avg
    if denom == 0:
        return float("nan")
    return (beta_short_avg - beta_long_avg) / denom


def ff_beta(delta: float, avg_beta: float) -> float:
    """Market beta a nominally-neutral (delta-neutral) construction would carry.

    beta_FF = <beta_L> - <beta_S> = -2 <beta> delta.
    """
    return -2.0 * avg_beta * delta


def _vol_normalize(returns: np.ndarray, vol_window: int) -> np.ndarray:
    """Divide each column by its own lagged EMA volatility (daily units)."""
    smoothed = ema(returns**2, vol_window)
    lagged = np.full(returns.shape, np.nan)
    lagged[1:] = smoothed[:-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        sigma = np.sqrt(lagged)
        out = returns / sigma
    out[~np.isfinite(out)] = np.nan
    return out


def interfactor_correlation(
    factors: list[FactorReturnSeries | pd.Series], vol_window: int = DEFAULT_CORR_NORM_PERIOD
) -> FactorCorrelationMatrix:
    """Pearson correlation matrix of vol-normalized daily factor returns.

    Each series is divided by its own ``vol_window``-day EMA volatility
    (lagged one day) before correlating over the rows where every factor
    has a value.  The Gaussian-noise standard error 1/sqrt(m) is exposed on
    the result.
    """
    if len(factors) < 2:
        raise ValueError("need at least two factors")
    frames = [f.as_series() if isinstance(f, FactorReturnSeries) else f for f in factors]
    aligned = pd.concat(frames, axis=1, join="inner")
    if len(aligned) < 2:
        raise ValueError("factor series share fewer than 2 dates")
    normalized = _vol_normalize(aligned.to_numpy(dtype=float), vol_window)
    complete = np.isfinite(normalized).all(axis=1)
    m = int(complete.sum())
    if m < MIN_CORRELATION_OVERLAP:
        raise ValueError(f"only {m} overlapping days (< {MIN_CORRELATION_OVERLAP})")
    matrix = np.corrcoef(normalized[complete], rowvar=False)
    matrix = (matrix + matrix.T) / 2.0
    np.fill_diagonal(matrix, 1.0)
    return FactorCorrelationMatrix(
        factor_ids=tuple(str(c) for c in aligned.columns),
        matrix=matrix,
        n_obs=m,
        vol_window=int(vol_window),
    )


def rolling_correlation(
    a: FactorReturnSeries | pd.Series,
    b: FactorReturnSeries | pd.Series,
    window: int = DEFAULT_ROLLING_WINDOW,
    vol_window: int = DEFAULT_CORR_NORM_PERIOD,
) -> RollingCorrelation:
    """Trailing-window Pearson correlation of two vol-normalized series.

    The attached significance band is the standard deviation, 1/sqrt(window),
    of the same estimator applied to independent Gaussian samples.
    """
    sa = a.as_series() if isinstance(a, FactorReturnSeries) else a
    sb = b.as_series() if isinstance(b, FactorReturnSeries) else b
    aligned = pd.concat([sa, sb], axis=1, join="inner")
    normalized = _vol_normalize(aligned.to_numpy(dtype=float), vol_window)
    frame = pd.DataFrame(normalized, index=aligned.index)
    rolled = frame[0].rolling(window, min_periods=window).corr(frame[1])
    values = rolled.to_numpy(dtype=float)
    values[~np.isfinite(values)] = np.nan
    return RollingCorrelation(
        dates=pd.DatetimeIndex(aligned.index),
        values=values,
        window=int(window),
        significance_band=1.0 / np.sqrt(window),
    )
