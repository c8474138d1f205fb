"""Price, indicator, and classification panels.

The loaders turn long-format CSV files into immutable date x asset matrices:

- price CSV          ``date,asset_id,close[,volume]`` with one reserved
                     asset id ``__INDEX__`` carrying the market index;
- indicator CSV      ``publication_date,asset_id,indicator_id,value``;
- classification CSV ``asset_id,country,gics_industry_group``.

All dates are ISO-8601.  Prices are assumed to be total-return adjusted
upstream; the loaders never adjust them.  Indicator values are point in
time: the value carried on day t is the latest value published strictly
before t, forward-filled between publications and missing before the first
one.  Panels are immutable once constructed, so any number of readers can
share them.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

INDEX_ASSET_ID = "__INDEX__"

INDICATOR_IDS = frozenset(
    {
        "dividend",
        "capitalization",
        "liquidity",
        "momentum",
        "low_volatility",
        "leverage",
        "sales_to_market",
        "book_to_market",
        "remuneration",
        "cash",
        "noise",
    }
)

# Indicators normalized multiplicatively by the same-day country median.
# Momentum is handled additively at derivation time; low_volatility is a
# pure sensitivity and the noise indicator is an arbitrary rank, so neither
# is renormalized.
RATIO_INDICATORS = frozenset(
    {
        "remuneration",
        "capitalization",
        "liquidity",
        "dividend",
        "leverage",
        "sales_to_market",
        "book_to_market",
        "cash",
    }
)

THREE_YEARS_DAYS = 756  # 3 years at 252 trading days/year
ONE_WEEK_DAYS = 5


class IngestError(ValueError):
    """Raised when an input file violates its schema."""


@dataclass(frozen=True)
class Classification:
    """Static per-asset country and GICS industry-group labels."""

    country: dict[str, str]
    industry_group: dict[str, str]

    def require_assets(self, assets: tuple[str, ...]) -> None:
        missing = [a for a in assets if a not in self.country or a not in self.industry_group]
        if missing:
            raise IngestError(
                f"classification is missing {len(missing)} asset(s), e.g. {missing[:5]}"
            )


@dataclass(frozen=True)
class AssetUniverse:
    """A named trading universe with its capitalization floor."""

    assets: tuple[str, ...]
    min_capitalization: float
    name: str


@dataclass(frozen=True)
class ReturnPanel:
    """Aligned daily simple returns for a universe plus the market index.

    ``dates`` are return dates (one fewer than the price dates that produced
    them).  ``returns[t, i]`` is defined only when asset i has a close on
    both the return date and the previous trading day; otherwise it is NaN.
    ``closes``/``prev_closes`` keep the underlying prices for reconstruction
    checks and share-count arithmetic, ``volumes`` the same-day volume.
    """

    dates: pd.DatetimeIndex
    assets: tuple[str, ...]
    returns: np.ndarray  # (T, N)
    index_returns: np.ndarray  # (T,)
    closes: np.ndarray | None = None  # (T, N) close at the return date
    prev_closes: np.ndarray | None = None  # (T, N) close one trading day before
    volumes: np.ndarray | None = None  # (T, N)

    def __post_init__(self) -> None:
        if len(self.dates) != self.returns.shape[0]:
            raise ValueError("returns rows must match dates")
        if len(self.assets) != self.returns.shape[1]:
            raise ValueError("returns columns must match assets")
        if self.index_returns.shape != (len(self.dates),):
            raise ValueError("index_returns must be one value per date")
        if len(self.dates) > 1 and not self.dates.is_monotonic_increasing:
            raise ValueError("dates must be strictly increasing")
        if self.dates.has_duplicates:
            raise ValueError("dates contain duplicates")

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    def asset_positions(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.assets)}

    def returns_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.returns, index=self.dates, columns=list(self.assets))

    def truncate(self, asof: pd.Timestamp) -> "ReturnPanel":
        """Keep only rows dated at or before ``asof``."""
        keep = self.dates <= pd.Timestamp(asof)
        t = int(keep.sum())

        def cut(m: np.ndarray | None) -> np.ndarray | None:
            return None if m is None else m[:t]

        return ReturnPanel(
            dates=self.dates[:t],
            assets=self.assets,
            returns=self.returns[:t],
            index_returns=self.index_returns[:t],
            closes=cut(self.closes),
            prev_closes=cut(self.prev_closes),
            volumes=cut(self.volumes),
        )


@dataclass(frozen=True)
class IndicatorPanel:
    """Point-in-time values of one indicator, aligned to a return panel."""

    indicator_id: str
    dates: pd.DatetimeIndex
    assets: tuple[str, ...]
    values: np.ndarray  # (T, N), NaN = missing
    country: dict[str, str]
    sector: dict[str, str]  # GICS industry-group name per asset

    def __post_init__(self) -> None:
        if self.indicator_id not in INDICATOR_IDS:
            raise ValueError(f"unknown indicator_id {self.indicator_id!r}")
        if self.values.shape != (len(self.dates), len(self.assets)):
            raise ValueError("values shape must be (dates, assets)")

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.dates, columns=list(self.assets))

    def with_values(self, values: np.ndarray) -> "IndicatorPanel":
        return dataclasses.replace(self, values=values)

    def truncate(self, asof: pd.Timestamp) -> "IndicatorPanel":
        keep = self.dates <= pd.Timestamp(asof)
        t = int(keep.sum())
        return dataclasses.replace(self, dates=self.dates[:t], values=self.values[:t])


def _read_csv_strict(path: str | Path, required: list[str], optional: list[str]) -> pd.DataFrame:
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:  # pragma: no cover - pandas error text varies
        raise IngestError(f"{path}: cannot parse CSV ({exc})") from exc
    cols = list(raw.columns)
    missing = [c for c in required if c not in cols]
    if missing:
        raise IngestError(f"{path}: missing required column(s) {missing}, found {cols}")
    unknown = [c for c in cols if c not in required and c not in optional]
    if unknown:
        raise IngestError(f"{path}: unexpected column(s) {unknown}")
    return raw


def _parse_dates(raw: pd.Series, path: str | Path, column: str) -> pd.DatetimeIndex:
    parsed = pd.to_datetime(raw, format="%Y-%m-%d", errors="coerce")
    bad = np.flatnonzero(parsed.isna().to_numpy())
    if bad.size:
        line = int(bad[0]) + 2  # +1 header, +1 one-based
        raise IngestError(f"{path}:{line}: malformed {column} {raw.iloc[bad[0]]!r}")
    return pd.DatetimeIndex(parsed)


def _parse_floats(raw: pd.Series, path: str | Path, column: str, allow_blank: bool) -> np.ndarray:
    values = pd.to_numeric(raw.replace("", np.nan), errors="coerce").to_numpy(dtype=float)
    blank = raw.to_numpy() == ""
    bad = np.flatnonzero(~np.isfinite(values) & ~blank)
    if bad.size:
        line = int(bad[0]) + 2
        raise IngestError(f"{path}:{line}: malformed {column} {raw.iloc[bad[0]]!r}")
    if not allow_blank and blank.any():
        line = int(np.flatnonzero(blank)[0]) + 2
        raise IngestError(f"{path}:{line}: blank {column}")
    return values


def ingest_prices(
    path: str | Path, calendar: pd.DatetimeIndex | None = None
) -> ReturnPanel:
    """Load a price CSV and compute daily simple returns.

    Returns are p_t / p_{t-1} - 1 over consecutive calendar entries; a
    missing price on either day leaves the return missing.  The special
    asset id ``__INDEX__`` is split out into ``index_returns``.  The file
    must be sorted by date (non-decreasing) and must not repeat a
    (date, asset) pair.
    """
    raw = _read_csv_strict(path, ["date", "asset_id", "close"], ["volume"])
    if len(raw) == 0:
        raise IngestError(f"{path}: empty price file")
    dates = _parse_dates(raw["date"], path, "date")
    closes = _parse_floats(raw["close"], path, "close", allow_blank=False)
    nonpos = np.flatnonzero(closes <= 0)
    if nonpos.size:
        raise IngestError(f"{path}:{int(nonpos[0]) + 2}: non-positive close {closes[nonpos[0]]}")
    has_volume = "volume" in raw.columns
    volumes = (
        _parse_floats(raw["volume"], path, "volume", allow_blank=True) if has_volume else None
    )
    asset_ids = raw["asset_id"].to_numpy()
    blank_assets = np.flatnonzero(asset_ids == "")
    if blank_assets.size:
        raise IngestError(f"{path}:{int(blank_assets[0]) + 2}: blank asset_id")

    order_breaks = np.flatnonzero(np.diff(dates.view("i8")) < 0)
    if order_breaks.size:
        line = int(order_breaks[0]) + 3  # the row after the break
        raise IngestError(f"{path}:{line}: dates are not monotonic (file must be sorted by date)")

    key = pd.MultiIndex.from_arrays([dates, asset_ids])
    dup = key.duplicated()
    if dup.any():
        line = int(np.flatnonzero(dup)[0]) + 2
        raise IngestError(f"{path}:{line}: duplicate (date, asset_id) row")

    if calendar is not None:
        calendar = pd.DatetimeIndex(calendar).sort_values().unique()
        if len(calendar) == 0:
            raise IngestError("calendar must be non-empty")
        in_cal = dates.isin(calendar)
        dropped = int((~in_cal).sum())
        if dropped:
            log.warning("%s: dropped %d row(s) outside the trading calendar", path, dropped)
        raw_idx = np.flatnonzero(in_cal)
        grid = calendar
    else:
        raw_idx = np.arange(len(raw))
        grid = pd.DatetimeIndex(np.unique(dates.values))
    if len(grid) < 2:
        raise IngestError(f"{path}: need at least two trading days to form returns")

    stock_names = sorted(set(asset_ids[raw_idx]) - {INDEX_ASSET_ID})
    pos_of = {a: i for i, a in enumerate(stock_names)}
    date_pos = pd.Series(np.arange(len(grid)), index=grid)

    prices = np.full((len(grid), len(stock_names)), np.nan)
    vol_grid = np.full((len(grid), len(stock_names)), np.nan) if has_volume else None
    index_prices = np.full(len(grid), np.nan)
    row_dates = date_pos.loc[dates[raw_idx]].to_numpy()
    for k, r in zip(row_dates, raw_idx):
        a = asset_ids[r]
        if a == INDEX_ASSET_ID:
            index_prices[k] = closes[r]
        else:
            j = pos_of[a]
            prices[k, j] = closes[r]
            if vol_grid is not None and volumes is not None:
                vol_grid[k, j] = volumes[r]

    if not np.isfinite(index_prices).any():
        log.warning("%s: no %s rows; index returns will be missing", path, INDEX_ASSET_ID)

    with np.errstate(invalid="ignore"):
        returns = prices[1:] / prices[:-1] - 1.0
        index_returns = index_prices[1:] / index_prices[:-1] - 1.0
    return ReturnPanel(
        dates=grid[1:],
        assets=tuple(stock_names),
        returns=returns,
        index_returns=index_returns,
        closes=prices[1:],
        prev_closes=prices[:-1],
        volumes=vol_grid[1:] if vol_grid is not None else None,
    )


def load_classification(path: str | Path) -> Classification:
    """Load the per-asset country / GICS industry-group table."""
    raw = _read_csv_strict(path, ["asset_id", "country", "gics_industry_group"], [])
    assets = raw["asset_id"].to_numpy()
    dup = pd.Index(assets).duplicated()
    if dup.any():
        line = int(np.flatnonzero(dup)[0]) + 2
        raise IngestError(f"{path}:{line}: duplicate asset_id")
    country = dict(zip(assets, raw["country"].to_numpy()))
    group = dict(zip(assets, raw["gics_industry_group"].to_numpy()))
    return Classification(country=country, industry_group=group)


def ingest_indicators(
    path: str | Path, panel: ReturnPanel, classification: Classification
) -> dict[str, IndicatorPanel]:
    """Load publication-dated indicator values and forward-fill them.

    The value carried on panel date t is the latest value published
    strictly before t.  Publications after the panel's last date are kept
    but flagged, since they can never influence a carried value.
    """
    raw = _read_csv_strict(path, ["publication_date", "asset_id", "indicator_id", "value"], [])
    if len(raw) == 0:
        raise IngestError(f"{path}: empty indicator file")
    pub_dates = _parse_dates(raw["publication_date"], path, "publication_date")
    values = _parse_floats(raw["value"], path, "value", allow_blank=False)
    asset_ids = raw["asset_id"].to_numpy()
    indicator_ids = raw["indicator_id"].to_numpy()

    bad_ind = np.flatnonzero(~np.isin(indicator_ids, list(INDICATOR_IDS)))
    if bad_ind.size:
        line = int(bad_ind[0]) + 2
        raise IngestError(f"{path}:{line}: unknown indicator_id {indicator_ids[bad_ind[0]]!r}")

    known = set(panel.assets)
    unknown = sorted(set(asset_ids) - known)
    if unknown:
        raise IngestError(f"{path}: asset id(s) not in the price panel: {unknown[:5]}")
    classification.require_assets(panel.assets)

    late = int((pub_dates > panel.dates[-1]).sum())
    if late:
        log.warning("%s: %d publication(s) dated after the panel range (kept, unused)", path, late)

    dup_key = pd.MultiIndex.from_arrays([indicator_ids, asset_ids, pub_dates])
    n_dup = int(dup_key.duplicated().sum())
    if n_dup:
        log.warning("%s: %d duplicate publication(s); the last occurrence wins", path, n_dup)

    pos_of = panel.asset_positions()
    dates_i8 = panel.dates.view("i8")
    country = {a: classification.country[a] for a in panel.assets}
    sector = {a: classification.industry_group[a] for a in panel.assets}

    panels: dict[str, IndicatorPanel] = {}
    frame = pd.DataFrame(
        {
            "indicator": indicator_ids,
            "asset": asset_ids,
            "pub": pub_dates.view("i8"),
            "value": values,
        }
    )
    # Stable sort keeps file order for same-day duplicates, so later rows win.
    frame = frame.sort_values(["indicator", "asset", "pub"], kind="stable")
    for indicator, block in frame.groupby("indicator", sort=True):
        mat = np.full((panel.n_dates, panel.n_assets), np.nan)
        cols = block["asset"].map(pos_of).to_numpy()
        starts = np.searchsorted(dates_i8, block["pub"].to_numpy(), side="right")
        vals = block["value"].to_numpy()
        for col, start, v in zip(cols, starts, vals):
            if start < panel.n_dates:
                mat[start:, col] = v
        panels[str(indicator)] = IndicatorPanel(
            indicator_id=str(indicator),
            dates=panel.dates,
            assets=panel.assets,
            values=mat,
            country=country,
            sector=sector,
        )
    return panels


def indicator_from_matrix(
    indicator_id: str,
    panel: ReturnPanel,
    values: np.ndarray,
    classification: Classification,
) -> IndicatorPanel:
    """Wrap an already-aligned (T, N) matrix as an indicator panel."""
    classification.require_assets(panel.assets)
    return IndicatorPanel(
        indicator_id=indicator_id,
        dates=panel.dates,
        assets=panel.assets,
        values=np.asarray(values, dtype=float),
        country={a: classification.country[a] for a in panel.assets},
        sector={a: classification.industry_group[a] for a in panel.assets},
    )


def derive_momentum(panel: ReturnPanel, classification: Classification) -> IndicatorPanel:
    """Momentum indicator: 3-year EMA of daily returns, country-demeaned.

    The value at t is the EMA evaluated at t-1 minus the same-day country
    median of that EMA, so the country adjustment is additive and
    ``normalize_by_country`` must not touch this indicator again.
    """
    from .estimators import MIN_OBSERVATIONS, ema

    smoothed = ema(panel.returns, THREE_YEARS_DAYS)
    counts = np.cumsum(np.isfinite(panel.returns), axis=0)
    values = np.full(panel.returns.shape, np.nan)
    values[1:] = smoothed[:-1]
    values[1:][counts[:-1] < MIN_OBSERVATIONS] = np.nan

    codes = np.array([classification.country[a] for a in panel.assets])
    for c in np.unique(codes):
        cols = np.flatnonzero(codes == c)
        block = values[:, cols]
        have = np.isfinite(block).any(axis=1)
        med = np.full(panel.n_dates, np.nan)
        med[have] = np.nanmedian(block[have], axis=1)
        values[:, cols] = block - med[:, None]
    return indicator_from_matrix("momentum", panel, values, classification)


def derive_liquidity(
    panel: ReturnPanel,
    capitalization: IndicatorPanel,
    volumes: np.ndarray | None = None,
) -> IndicatorPanel:
    """Liquidity indicator: weekly EMA of volume over the share count.

    The share count is capitalization / previous close; both the volume EMA
    and the close are taken at t-1 so the value at t only uses information
    available before t.  A zero or missing share count leaves the value
    missing for that asset and day.
    """
    from .estimators import MIN_OBSERVATIONS, ema

    if volumes is None:
        volumes = panel.volumes
    if volumes is None:
        raise ValueError("liquidity requires volume data (none in panel, none passed)")
    if capitalization.indicator_id != "capitalization":
        raise ValueError("liquidity must be derived from the capitalization indicator")
    if panel.prev_closes is None:
        raise ValueError("liquidity requires close prices in the panel")

    smoothed = ema(volumes, ONE_WEEK_DAYS)
    counts = np.cumsum(np.isfinite(volumes), axis=0)
    vol_ema = np.full(volumes.shape, np.nan)
    vol_ema[1:] = smoothed[:-1]
    vol_ema[1:][counts[:-1] < MIN_OBSERVATIONS] = np.nan

    with np.errstate(invalid="ignore", divide="ignore"):
        shares = capitalization.values / panel.prev_closes
        shares[~np.isfinite(shares) | (shares <= 0)] = np.nan
        values = vol_ema / shares
    classification = Classification(
        country=capitalization.country, industry_group=capitalization.sector
    )
    return indicator_from_matrix("liquidity", panel, values, classification)
