"""Rolling volatility and beta estimators.

All estimators share one EMA convention (alpha = 1/period, seeded with the
first observation, missing inputs leave the state unchanged) and one
availability discipline: the value reported for day t is computed from data
up to and including day t-1, and stays missing until the underlying series
has accumulated ``MIN_OBSERVATIONS`` observations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .panel import ReturnPanel

TRADING_DAYS_PER_YEAR = 252

# Estimator values are reported as missing until this many observations
# have been absorbed; downstream weighting excludes assets without values.
MIN_OBSERVATIONS = 5

# Index variance below this level makes the beta ratio meaningless.
INDEX_VARIANCE_FLOOR = 1e-18

DEFAULT_VOL_PERIOD = 40
DEFAULT_BETA_PERIOD = 200


@dataclass(frozen=True)
class VolSeries:
    """Annualized per-asset volatility, aligned to a return panel."""

    dates: pd.DatetimeIndex
    assets: tuple[str, ...]
    values: np.ndarray  # (T, N), fraction/sqrt(year), NaN before burn-in
    period: int

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.dates, columns=list(self.assets))


@dataclass(frozen=True)
class BetaSeries:
    """Per-asset market sensitivity, aligned to a return panel."""

    dates: pd.DatetimeIndex
    assets: tuple[str, ...]
    values: np.ndarray  # (T, N), dimensionless, NaN before burn-in
    period: int

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.dates, columns=list(self.assets))


def ema(x: np.ndarray, period: float) -> np.ndarray:
    """Exponential moving average with alpha = 1/period.

    The recursion is y_t = (1 - alpha) * y_{t-1} + alpha * x_t, seeded with
    the first observation of each column.  A missing (NaN) input leaves the
    state unchanged for that step; outputs are NaN until the column has seen
    its first observation.  Accepts 1-D (T,) or 2-D (T, N) input with time
    along axis 0; an empty input returns an empty output.
    """
    if period < 1:
        raise ValueError(f"EMA period must be >= 1, got {period}")
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return x.copy()
    alpha = 1.0 / float(period)
    squeeze = x.ndim == 1
    v = x[:, None] if squeeze else x
    out = np.full(v.shape, np.nan)
    state = np.full(v.shape[1], np.nan)
    for t in range(v.shape[0]):
        row = v[t]
        observed = np.isfinite(row)
        fresh = observed & ~np.isfinite(state)
        state[fresh] = row[fresh]
        running = observed & ~fresh
        state[running] = (1.0 - alpha) * state[running] + alpha * row[running]
        out[t] = state
    return out[:, 0] if squeeze else out


def _shift_down(values: np.ndarray) -> np.ndarray:
    """Lag a (T,) or (T, N) array by one day, inserting NaN at the top."""
    out = np.full(values.shape, np.nan)
    out[1:] = values[:-1]
    return out


def realized_volatility(panel: ReturnPanel, period: int = DEFAULT_VOL_PERIOD) -> VolSeries:
    """Annualized EMA volatility, sigma_i(t) = sqrt(252 * EMA(r_i^2, period)).

    The value at t uses returns up to and including t-1 (no same-day
    look-ahead) and is missing until the asset has MIN_OBSERVATIONS returns.
    A zero volatility is kept as 0.0; weighting layers treat it as
    ineligible rather than dividing by it.
    """
    if panel.n_dates == 0:
        raise ValueError("cannot estimate volatility on an empty panel")
    smoothed = ema(panel.returns**2, period)
    counts = np.cumsum(np.isfinite(panel.returns), axis=0)
    values = np.full(panel.returns.shape, np.nan)
    values[1:] = np.sqrt(TRADING_DAYS_PER_YEAR * smoothed[:-1])
    values[1:][counts[:-1] < MIN_OBSERVATIONS] = np.nan
    values[0] = np.nan
    return VolSeries(panel.dates, panel.assets, values, int(period))


def estimate_beta(panel: ReturnPanel, window: int = DEFAULT_BETA_PERIOD) -> BetaSeries:
    """Market beta as a ratio of EMAs, beta_i(t) = EMA(r_i r_m) / EMA(r_m^2).

    Both EMAs run over data up to t-1.  The value is missing until the asset
    has MIN_OBSERVATIONS joint observations with the index, and whenever the
    smoothed index variance is below INDEX_VARIANCE_FLOOR.
    """
    if not np.isfinite(panel.index_returns).any():
        raise ValueError("panel has no index returns; beta is undefined")
    market = panel.index_returns
    cross = panel.returns * market[:, None]
    num = ema(cross, window)
    den = ema(market**2, window)
    counts = np.cumsum(np.isfinite(cross), axis=0)

    values = np.full(panel.returns.shape, np.nan)
    den_prev = _shift_down(den)
    num_prev = _shift_down(num)
    ok = (
        np.isfinite(num_prev)
        & np.isfinite(den_prev[:, None])
        & (den_prev[:, None] > INDEX_VARIANCE_FLOOR)
    )
    ok[1:] &= counts[:-1] >= MIN_OBSERVATIONS
    ok[0] = False
    np.divide(num_prev, den_prev[:, None], out=values, where=ok)
    values[~ok] = np.nan
    return BetaSeries(panel.dates, panel.assets, values, int(window))
