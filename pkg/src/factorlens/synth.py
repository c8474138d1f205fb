"""Synthetic market generator with planted factor structure.

Returns follow a linear factor model,

    r_i(t) = beta_i m(t) + s_{k(i)}(t) + sum_f g_if f(t) + mu_i/252 + eps_i(t),

with a Gaussian market mode m, one Gaussian shock per supersector, planted
indicator factors f whose loadings g_if live only on the extreme rank
slices of the (country-normalized) indicator within each supersector, an
optional annualized drift mu_i planted on the Q1 slices, and i.i.d.
Gaussian residuals.  Everything is drawn from a single NumPy PCG64 seed
sequence, so a fixed seed reproduces the market bit for bit; the emitted
CSV files use the exact schemas of the ingestion layer, making synthetic
and real data interchangeable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .factors import (
    BANDS,
    DEFAULT_SUPERSECTOR_GROUPS,
    MIN_COUNTRY_ASSETS,
    QuantileBand,
)
from .panel import (
    INDEX_ASSET_ID,
    Classification,
    IndicatorPanel,
    ReturnPanel,
    indicator_from_matrix,
)

TRADING_DAYS_PER_YEAR = 252

# Indicators carried by the indicator CSV; liquidity, momentum,
# low_volatility, and noise are derived downstream.
FILE_INDICATORS: tuple[str, ...] = (
    "book_to_market",
    "capitalization",
    "cash",
    "dividend",
    "leverage",
    "remuneration",
    "sales_to_market",
)

_INDICATOR_SCALES: dict[str, float] = {
    "book_to_market": 0.5,
    "capitalization": 5e9,
    "cash": 0.05,
    "dividend": 0.03,
    "leverage": 0.8,
    "remuneration": 5e4,
    "sales_to_market": 1.2,
}

_COUNTRY_MULTIPLIERS = (1.0, 2.0, 0.5, 4.0, 0.25)


@dataclass(frozen=True)
class PlantedFactor:
    """One common shock tied to the extreme quantiles of an indicator.

    ``loadings`` maps a band kind (Q1/Q2/Q3) to the per-stock loading on
    that band's long slice (+g) and short slice (-g); the middle of the
    distribution always carries zero loading.  ``drift`` is an annualized
    return planted with the Q1 slice signs.
    """

    indicator_id: str
    loadings: dict[str, float] = field(default_factory=dict)
    factor_vol: float = 0.10
    drift: float = 0.0

    def __post_init__(self) -> None:
        if self.indicator_id not in FILE_INDICATORS:
            raise ValueError(
                f"planted factors must target a file indicator, got {self.indicator_id!r}"
            )
        unknown = set(self.loadings) - set(BANDS)
        if unknown:
            raise ValueError(f"loadings only apply to extreme bands Q1..Q3, got {unknown}")
        if self.factor_vol < 0:
            raise ValueError("factor_vol must be >= 0")


@dataclass(frozen=True)
class SynthConfig:
    """Shape and strength parameters of the generated market.

    Defaults mirror the reference universe shape: 569 assets over 3612
    price days in 6 supersectors, mean beta 0.65 with dispersion 0.37, and
    a 21% annualized market volatility.
    """

    n_assets: int = 569
    n_days: int = 3612  # price days; the panel has n_days - 1 return rows
    n_sectors: int = 6
    n_countries: int = 3
    market_vol: float = 0.21
    sector_vol: float = 0.06
    idio_vol: float = 0.25
    idio_vol_spread: float = 0.0  # per-asset sigma_eps uniform in idio*(1 +/- spread)
    beta_mean: float = 0.65
    beta_std: float = 0.37
    beta_floor: float = 0.05  # truncation: liquid large-caps have positive betas
    annual_jitter: float = 0.0  # fraction of the adjacent-rank gap, keeps ranks
    planted_factors: tuple[PlantedFactor, ...] = ()
    seed: int = 42
    start_date: str = "2001-01-01"

    def __post_init__(self) -> None:
        if self.n_days < 3:
            raise ValueError("need at least 3 price days")
        if self.n_sectors < 1 or self.n_sectors > 6:
            raise ValueError("n_sectors must be within 1..6 (the supersector map)")
        for v in (self.market_vol, self.sector_vol, self.idio_vol):
            if v < 0:
                raise ValueError("volatilities must be >= 0")
        ids = [p.indicator_id for p in self.planted_factors]
        if len(ids) != len(set(ids)):
            raise ValueError("at most one planted factor per indicator")


@dataclass(frozen=True)
class SyntheticMarket:
    """Generated panels plus the ground truth that produced them."""

    config: SynthConfig
    panel: ReturnPanel
    indicators: dict[str, IndicatorPanel]
    classification: Classification
    true_betas: np.ndarray  # (N,)
    sector_codes: np.ndarray  # (N,) 0-based supersector per asset
    loadings: dict[str, np.ndarray]  # indicator -> (N,) planted loading g_i
    drifts: np.ndarray  # (N,) annualized planted drift
    first_volumes: np.ndarray  # (N,) volume on the first price day (pre-panel)

    def truncate(self, asof: pd.Timestamp) -> "SyntheticMarket":
        """The market as it would look with all inputs cut at ``asof``."""
        return replace(
            self,
            panel=self.panel.truncate(asof),
            indicators={k: p.truncate(asof) for k, p in self.indicators.items()},
        )


def _beta_distribution(cfg: SynthConfig):
    """The truncated normal the true betas are drawn from."""
    from scipy.stats import truncnorm

    a = (cfg.beta_floor - cfg.beta_mean) / cfg.beta_std
    return truncnorm(a, np.inf, loc=cfg.beta_mean, scale=cfg.beta_std)


def _draw_betas(cfg: SynthConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    # Inverse-CDF sampling keeps the draw deterministic under the seed.
    return _beta_distribution(cfg).ppf(rng.uniform(size=n))


def beta_second_moment(cfg: SynthConfig) -> float:
    """E[beta^2] under the config's truncated beta distribution."""
    dist = _beta_distribution(cfg)
    return float(dist.var() + dist.mean() ** 2)


def _sector_group_names(n_sectors: int) -> list[str]:
    names: dict[int, str] = {}
    for group, idx in sorted(DEFAULT_SUPERSECTOR_GROUPS.items()):
        names.setdefault(idx, group)
    return [names[s + 1] for s in range(n_sectors)]


def _country_normalize(values: np.ndarray, countries: np.ndarray) -> np.ndarray:
    """Mirror of the pipeline's country normalization for static values."""
    out = values.copy()
    for c in np.unique(countries):
        cols = countries == c
        if int(cols.sum()) < MIN_COUNTRY_ASSETS:
            continue
        out[cols] = values[cols] / np.median(values[cols])
    return out


def _band_slice_members(
    order: np.ndarray, band: QuantileBand
) -> tuple[np.ndarray, np.ndarray]:
    n_s = order.size
    (lo_l, hi_l), (lo_s, hi_s) = band.slices(n_s)
    return order[lo_l:hi_l], order[lo_s:hi_s]


def expected_selected_count(cfg: SynthConfig, band: QuantileBand) -> int:
    """Members a band selects across supersectors once everyone is eligible."""
    sizes = [
        cfg.n_assets // cfg.n_sectors + (1 if s < cfg.n_assets % cfg.n_sectors else 0)
        for s in range(cfg.n_sectors)
    ]
    total = 0
    for n_s in sizes:
        if n_s < band.min_sector_assets:
            continue
        (lo_l, hi_l), (lo_s, hi_s) = band.slices(n_s)
        total += max(hi_l - lo_l, 0) + max(hi_s - lo_s, 0)
    return total


def default_config(seed: int = 42) -> SynthConfig:
    """The reference-scale default run: 569 assets, 3612 days, three planted
    factors with decaying extreme-quantile profiles and a small planted
    remuneration drift."""
    return SynthConfig(
        annual_jitter=0.1,
        planted_factors=(
            PlantedFactor(
                "remuneration", {"Q1": 0.13, "Q2": 0.065, "Q3": 0.0325}, 0.10, drift=0.0121
            ),
            PlantedFactor(
                "capitalization", {"Q1": 0.35, "Q2": 0.175, "Q3": 0.0875}, 0.10, drift=-0.05
            ),
            PlantedFactor("book_to_market", {"Q1": 0.18, "Q2": 0.09, "Q3": 0.045}, 0.10),
        ),
        seed=seed,
    )


def generate_market(cfg: SynthConfig) -> SyntheticMarket:
    """Draw one market from the config's seed (PCG64, spawned substreams)."""
    n, n_ret = cfg.n_assets, cfg.n_days - 1
    root = np.random.SeedSequence(cfg.seed)
    streams = {
        name: np.random.default_rng(child)
        for name, child in zip(
            ("betas", "indicators", "market", "sectors", "factors", "idio", "volume"),
            root.spawn(7),
        )
    }

    assets = tuple(f"A{i:04d}" for i in range(n))
    sector_codes = np.arange(n) % cfg.n_sectors
    group_names = _sector_group_names(cfg.n_sectors)
    countries = np.array([f"C{i % cfg.n_countries}" for i in range(n)])
    classification = Classification(
        country={a: c for a, c in zip(assets, countries)},
        industry_group={a: group_names[s] for a, s in zip(assets, sector_codes)},
    )
    betas = _draw_betas(cfg, streams["betas"], n)

    # Static indicator structure: per-indicator random ranks, exponential
    # value spacing, country multipliers; annual jitter is a fixed fraction
    # of the adjacent-rank gap so the ranking never changes.
    dates_px = pd.bdate_range(cfg.start_date, periods=cfg.n_days)
    n_years = max(1, math.ceil(cfg.n_days / TRADING_DAYS_PER_YEAR))
    gap = math.exp(1.2 / n) - 1.0
    base_values: dict[str, np.ndarray] = {}
    yearly_values: dict[str, np.ndarray] = {}  # (n_years, N)
    for indicator in FILE_INDICATORS:
        u = streams["indicators"].permutation(n) / max(n - 1, 1)
        base = _INDICATOR_SCALES[indicator] * np.exp(1.2 * (u - 0.5))
        published = base * np.take(_COUNTRY_MULTIPLIERS, np.arange(n) % cfg.n_countries)
        jitter = streams["indicators"].uniform(-1.0, 1.0, size=(n_years, n))
        yearly = published[None, :] * (1.0 + cfg.annual_jitter * gap * jitter)
        yearly[0] = published
        base_values[indicator] = published
        yearly_values[indicator] = yearly

    # Planted loadings and drifts live on band slices of the normalized
    # (pipeline-visible) indicator, per supersector, so a factor built on
    # the same band holds exactly the loaded names.
    loadings = {p.indicator_id: np.zeros(n) for p in cfg.planted_factors}
    drifts = np.zeros(n)
    for planted in cfg.planted_factors:
        normalized = _country_normalize(base_values[planted.indicator_id], countries)
        g = loadings[planted.indicator_id]
        for s in range(cfg.n_sectors):
            members = np.flatnonzero(sector_codes == s)
            order = members[np.argsort(-normalized[members], kind="stable")]
            for kind, strength in planted.loadings.items():
                longs, shorts = _band_slice_members(order, BANDS[kind])
                g[longs] += strength
                g[shorts] -= strength
            if planted.drift:
                longs, shorts = _band_slice_members(order, BANDS["Q1"])
                drifts[longs] += planted.drift
                drifts[shorts] -= planted.drift

    # Shock series (daily units).
    scale = 1.0 / math.sqrt(TRADING_DAYS_PER_YEAR)
    market = streams["market"].standard_normal(n_ret) * (cfg.market_vol * scale)
    sector_shocks = streams["sectors"].standard_normal((n_ret, cfg.n_sectors)) * (
        cfg.sector_vol * scale
    )
    idio_vols = cfg.idio_vol * (
        1.0 + cfg.idio_vol_spread * streams["idio"].uniform(-1.0, 1.0, size=n)
    )
    returns = streams["idio"].standard_normal((n_ret, n)) * (idio_vols * scale)
    returns += np.outer(market, betas)
    returns += sector_shocks[:, sector_codes]
    for planted in cfg.planted_factors:
        shock = streams["factors"].standard_normal(n_ret) * (planted.factor_vol * scale)
        returns += np.outer(shock, loadings[planted.indicator_id])
    returns += drifts[None, :] / TRADING_DAYS_PER_YEAR

    prices = np.empty((cfg.n_days, n))
    prices[0] = 100.0
    np.cumprod(1.0 + returns, axis=0, out=prices[1:])
    prices[1:] *= 100.0
    index_prices = np.empty(cfg.n_days)
    index_prices[0] = 100.0
    index_prices[1:] = 100.0 * np.cumprod(1.0 + market)

    volume_base = 1e6 * np.exp(streams["volume"].normal(0.0, 0.5, size=n))
    volumes = volume_base[None, :] * np.exp(
        0.2 * streams["volume"].standard_normal((cfg.n_days, n))
    )

    panel = ReturnPanel(
        dates=dates_px[1:],
        assets=assets,
        returns=returns,
        index_returns=market,
        closes=prices[1:],
        prev_closes=prices[:-1],
        volumes=volumes[1:],
    )

    # Publication calendar: everything published the day before trading
    # starts, then republished every 252 price days with the year's value.
    indicators: dict[str, IndicatorPanel] = {}
    for indicator in FILE_INDICATORS:
        yearly = yearly_values[indicator]
        values = np.empty((n_ret, n))
        for y in range(n_years):
            start = 0 if y == 0 else y * TRADING_DAYS_PER_YEAR
            if start >= n_ret:
                break
            values[start:] = yearly[y]
        indicators[indicator] = indicator_from_matrix(indicator, panel, values, classification)

    return SyntheticMarket(
        config=cfg,
        panel=panel,
        indicators=indicators,
        classification=classification,
        true_betas=betas,
        sector_codes=sector_codes,
        loadings=loadings,
        drifts=drifts,
        first_volumes=volumes[0],
    )


def planted_fcl_oracle(cfg: SynthConfig, indicator_id: str, band: QuantileBand) -> float:
    """Closed-form FCL an ideal equal-weight band portfolio would measure.

    With beta- and sector-neutral weights the factor variance is
    (sum_i w_i g_i)^2 sigma_f^2 + sum_i w_i^2 sigma_eps^2 while the
    denominator carries the full constituent variances, so for n selected
    members with equal weights

        FCL = sqrt( (n g^2 sf^2 + se^2) / (E[beta^2] sm^2 + ss^2 + v + se^2) )

    where v is the members' loading variance from this and (on average)
    other planted factors.
    """
    planted = {p.indicator_id: p for p in cfg.planted_factors}
    if indicator_id not in planted:
        raise ValueError(f"no planted factor for indicator {indicator_id!r}")
    own = planted[indicator_id]
    g_vol = own.loadings.get(band.kind, 0.0) * own.factor_vol
    n_sel = expected_selected_count(cfg, band)
    if n_sel == 0:
        raise ValueError("band selects no assets under this config")

    cross_var = 0.0  # expected loading variance from the other planted factors
    for other in cfg.planted_factors:
        if other.indicator_id == indicator_id:
            continue
        for kind, strength in other.loadings.items():
            frac = expected_selected_count(cfg, BANDS[kind]) / cfg.n_assets
            cross_var += frac * (strength * other.factor_vol) ** 2

    mean_beta_sq = beta_second_moment(cfg)
    idio_sq = cfg.idio_vol**2 * (1.0 + cfg.idio_vol_spread**2 / 3.0)
    num = n_sel * g_vol**2 + idio_sq
    den = (
        mean_beta_sq * cfg.market_vol**2
        + cfg.sector_vol**2
        + g_vol**2
        + cross_var
        + idio_sq
    )
    return math.sqrt(num / den)


def write_market_csv(market: SyntheticMarket, directory) -> dict[str, str]:
    """Emit prices/indicators/classification CSVs in the ingestion schemas."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cfg = market.config
    n = cfg.n_assets
    dates_px = pd.bdate_range(cfg.start_date, periods=cfg.n_days)
    date_str = np.array([d.strftime("%Y-%m-%d") for d in dates_px])

    prices = np.vstack([market.panel.prev_closes[0], market.panel.closes])
    index_prices = np.empty(cfg.n_days)
    index_prices[0] = 100.0
    index_prices[1:] = 100.0 * np.cumprod(1.0 + market.panel.index_returns)
    volumes = np.vstack([market.first_volumes, market.panel.volumes])

    # One block of n+1 rows (assets then the index) per price day.
    assets = np.array(market.panel.assets)
    block_assets = np.concatenate([assets, [INDEX_ASSET_ID]])
    close_block = np.hstack([prices, index_prices[:, None]])
    volume_block = np.hstack([volumes, np.full((cfg.n_days, 1), np.nan)])
    frame = pd.DataFrame(
        {
            "date": np.repeat(date_str, n + 1),
            "asset_id": np.tile(block_assets, cfg.n_days),
            "close": close_block.ravel(),
            "volume": volume_block.ravel(),
        }
    )
    price_path = directory / "prices.csv"
    frame.to_csv(price_path, index=False, float_format="%.12g")

    n_years = max(1, math.ceil(cfg.n_days / TRADING_DAYS_PER_YEAR))
    first_pub = (dates_px[0] - pd.Timedelta(days=1)).strftime("%Y-%m-%d")
    pub_frames = []
    for y in range(n_years):
        row = 0 if y == 0 else y * TRADING_DAYS_PER_YEAR
        if y > 0 and row >= cfg.n_days - 1:
            break
        pub = first_pub if y == 0 else date_str[row]
        for indicator in FILE_INDICATORS:
            snapshot = market.indicators[indicator].values[row]
            pub_frames.append(
                pd.DataFrame(
                    {
                        "publication_date": pub,
                        "asset_id": assets,
                        "indicator_id": indicator,
                        "value": snapshot,
                    }
                )
            )
    ind_path = directory / "indicators.csv"
    pd.concat(pub_frames, ignore_index=True).to_csv(ind_path, index=False, float_format="%.12g")

    cls_path = directory / "classification.csv"
    pd.DataFrame(
        {
            "asset_id": assets,
            "country": [market.classification.country[a] for a in assets],
            "gics_industry_group": [market.classification.industry_group[a] for a in assets],
        }
    ).to_csv(cls_path, index=False)
    return {
        "prices": str(price_path),
        "indicators": str(ind_path),
        "classification": str(cls_path),
    }
