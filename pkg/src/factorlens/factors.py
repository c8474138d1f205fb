"""Daily long-short factor weight construction.

Within each of six supersectors, assets are ranked on an indicator
(descending, ties broken by ascending asset id), the band's rank slices
become the long and short legs, leg magnitudes are capped inverse-volatility
weights min(1, sigma_mean / sigma_i), and two common multipliers mu+/mu-
rescale the legs so the weighted market beta sums to zero.  The leg whose
aggregate beta is larger gets the reduced multiplier; the other is pinned at
1 / (2 q n_s), which keeps each supersector's gross exposure at or below
one.  Supersector weight vectors are concatenated and rescaled so the
aggregate gross exposure never exceeds one.

Weights dated t use only information available before t: indicator values
are publication-lagged, and the volatility / beta estimates are built from
returns up to t-1.  Everything here is a pure function of immutable panels,
so factors and dates can be processed in parallel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd

from .estimators import BetaSeries, VolSeries
from .panel import RATIO_INDICATORS, Classification, IndicatorPanel, ReturnPanel

log = logging.getLogger(__name__)

# Boundary fuzz for rank cutoffs: floor(frac * n) evaluated in floats must
# not lose an exact integer boundary like 0.15 * 20 to rounding.
_CUT_EPS = 1e-9

MIN_COUNTRY_ASSETS = 3  # below this, country medians are too noisy to divide by


@dataclass(frozen=True)
class QuantileBand:
    """Paired long/short rank slices of the indicator-sorted list.

    Ranges are fractions of the (descending) sorted supersector list, with
    rank cutoffs at floor(fraction * n_s).  ``q`` is the width of each leg.
    """

    kind: str
    long_range: tuple[float, float]
    short_range: tuple[float, float]
    q: float = 0.15

    @property
    def min_sector_assets(self) -> int:
        return math.ceil(1.0 / self.q)

    def slices(self, n_s: int) -> tuple[tuple[int, int], tuple[int, int]]:
        def cut(frac: float) -> int:
            return int(math.floor(frac * n_s + _CUT_EPS))

        long_slice = (cut(self.long_range[0]), cut(self.long_range[1]))
        short_slice = (cut(self.short_range[0]), cut(self.short_range[1]))
        return long_slice, short_slice


Q1 = QuantileBand("Q1", (0.00, 0.15), (0.85, 1.00))
Q2 = QuantileBand("Q2", (0.15, 0.30), (0.70, 0.85))
Q3 = QuantileBand("Q3", (0.30, 0.45), (0.55, 0.70))
BANDS: dict[str, QuantileBand] = {b.kind: b for b in (Q1, Q2, Q3)}


def extreme_band(q: float) -> QuantileBand:
    """The Q1-style band for a custom quantile width (used by the ladder)."""
    return QuantileBand(f"extreme{q:g}", (0.0, q), (1.0 - q, 1.0), q)


# Hand-grouped GICS industry groups -> six supersectors of similar size.
DEFAULT_SUPERSECTOR_GROUPS: dict[str, int] = {
    "Food & Staples Retailing": 1,
    "Food, Beverage & Tobacco": 1,
    "Health Care Equipment & Services": 1,
    "Household & Personal Products": 1,
    "Pharmaceuticals, Biotechnology & Life Sciences": 1,
    "Banks": 2,
    "Diversified Financials": 2,
    "Insurance": 2,
    "Consumer Durables & Apparel": 3,
    "Consumer Services": 3,
    "Media": 3,
    "Retailing": 3,
    "Materials": 4,
    "Real Estate": 4,
    "Energy": 5,
    "Transportation": 5,
    "Utilities": 5,
    "Automobiles & Components": 6,
    "Capital Goods": 6,
    "Commercial & Professional Services": 6,
    "Software & Services": 6,
    "Technology Hardware & Equipment": 6,
    "Telecommunication Services": 6,
}


@dataclass(frozen=True)
class SupersectorMap:
    """Mapping from GICS industry-group name to supersector index (1-based)."""

    groups: dict[str, int]

    def __post_init__(self) -> None:
        if not self.groups:
            raise ValueError("supersector map is empty")
        idx = sorted(set(self.groups.values()))
        if idx != list(range(1, len(idx) + 1)):
            raise ValueError(f"supersector indices must be 1..K without gaps, got {idx}")

    @property
    def n_supersectors(self) -> int:
        return max(self.groups.values())

    def assign(self, assets: Sequence[str], industry_group: dict[str, str]) -> np.ndarray:
        """Zero-based supersector code per asset; unmapped groups are rejected."""
        codes = np.empty(len(assets), dtype=np.int64)
        for i, a in enumerate(assets):
            group = industry_group[a]
            if group not in self.groups:
                raise ValueError(f"industry group {group!r} (asset {a}) is not mapped")
            codes[i] = self.groups[group] - 1
        return codes

    @classmethod
    def from_csv(cls, path: str | Path) -> "SupersectorMap":
        raw = pd.read_csv(path, dtype={"gics_industry_group": str, "supersector": int})
        expected = ["gics_industry_group", "supersector"]
        if list(raw.columns) != expected:
            raise ValueError(f"{path}: expected columns {expected}, got {list(raw.columns)}")
        if raw["gics_industry_group"].duplicated().any():
            raise ValueError(f"{path}: duplicate industry group")
        return cls(dict(zip(raw["gics_industry_group"], raw["supersector"].astype(int))))

    def to_csv(self, path: str | Path) -> None:
        frame = pd.DataFrame(
            sorted(self.groups.items(), key=lambda kv: (kv[1], kv[0])),
            columns=["gics_industry_group", "supersector"],
        )
        frame.to_csv(path, index=False)


DEFAULT_SUPERSECTORS = SupersectorMap(DEFAULT_SUPERSECTOR_GROUPS)


@dataclass(frozen=True)
class FactorWeights:
    """Daily weight history of one (indicator, band) factor.

    ``weights[t]`` is the aggregate cross-supersector weight vector applied
    to day t's returns; ``membership`` is +1 / -1 / 0 for long / short /
    excluded.  ``mu_plus`` / ``mu_minus`` are the per-supersector leg
    multipliers as solved (before the aggregate rescaling recorded in
    ``scale``), ``n_eligible`` the supersector asset counts entering
    1 / (2 q n_s), and ``neutralized`` is False where a non-positive leg
    beta forced the flagged equal-multiplier fallback.
    """

    indicator_id: str
    band: QuantileBand
    dates: pd.DatetimeIndex
    assets: tuple[str, ...]
    weights: np.ndarray  # (T, N)
    membership: np.ndarray  # (T, N) int8
    sector_codes: np.ndarray  # (N,)
    mu_plus: np.ndarray  # (T, S)
    mu_minus: np.ndarray  # (T, S)
    n_eligible: np.ndarray  # (T, S)
    neutralized: np.ndarray  # (T, S) bool
    scale: np.ndarray  # (T,) aggregate rescale applied to concatenated sectors

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    def gross(self) -> np.ndarray:
        return np.abs(self.weights).sum(axis=1)

    def net(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def beta_dot(self, betas: BetaSeries) -> np.ndarray:
        """Sum of beta_i * w_i per day (0 contribution from excluded assets)."""
        prod = np.where(self.weights != 0.0, self.weights * betas.values, 0.0)
        return prod.sum(axis=1)


@dataclass(frozen=True)
class FactorReturnSeries:
    """Daily returns of one factor: r(t) = sum_i w_i(t) r_i(t)."""

    indicator_id: str
    band: str
    dates: pd.DatetimeIndex
    returns: np.ndarray  # (T,)

    def as_series(self) -> pd.Series:
        return pd.Series(self.returns, index=self.dates, name=f"{self.indicator_id}:{self.band}")


def normalize_by_country(ind: IndicatorPanel) -> IndicatorPanel:
    """Divide ratio indicators by their same-day country median.

    Countries with fewer than MIN_COUNTRY_ASSETS values that day are left
    unnormalized (flagged in the log); a zero median excludes the country's
    assets for the day.  Non-ratio indicators (momentum is demeaned at
    derivation, low_volatility and noise are scale-free) pass through
    unchanged.
    """
    if ind.indicator_id not in RATIO_INDICATORS:
        return ind
    missing = [a for a in ind.assets if a not in ind.country]
    if missing:
        raise ValueError(f"country map does not cover asset(s) {missing[:5]}")
    values = ind.values.copy()
    codes = np.array([ind.country[a] for a in ind.assets])
    small_days = 0
    zero_days = 0
    for c in np.unique(codes):
        cols = np.flatnonzero(codes == c)
        block = values[:, cols]
        counts = np.isfinite(block).sum(axis=1)
        med = np.full(block.shape[0], np.nan)
        rows = counts > 0
        med[rows] = np.nanmedian(block[rows], axis=1)

        small = rows & (counts < MIN_COUNTRY_ASSETS)
        zero = rows & (counts >= MIN_COUNTRY_ASSETS) & (med == 0.0)
        normal = rows & (counts >= MIN_COUNTRY_ASSETS) & (med != 0.0)
        block[normal] = block[normal] / med[normal, None]
        block[zero] = np.nan
        values[:, cols] = block
        small_days += int(small.sum())
        zero_days += int(zero.sum())
    if small_days:
        log.warning(
            "%s: %d country-day(s) left unnormalized (fewer than %d assets)",
            ind.indicator_id,
            small_days,
            MIN_COUNTRY_ASSETS,
        )
    if zero_days:
        log.warning(
            "%s: %d country-day(s) excluded (zero country median)", ind.indicator_id, zero_days
        )
    return ind.with_values(values)


def _order_desc(values: np.ndarray) -> np.ndarray:
    """Indices sorting values descending; ties keep ascending input order."""
    return np.argsort(-values, kind="stable")


def rank_and_select(
    ind: IndicatorPanel,
    date: pd.Timestamp,
    band: QuantileBand,
    supersectors: SupersectorMap,
    supersector: int,
    eligible: np.ndarray | None = None,
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Long and short asset ids for one supersector and day.

    Assets are sorted descending by indicator value with ties broken by
    ascending asset id; the band's rank slices (floor boundaries) become the
    legs.  Supersectors with fewer than ceil(1/q) eligible assets yield two
    empty legs.
    """
    t = ind.dates.get_loc(pd.Timestamp(date))
    codes = supersectors.assign(ind.assets, ind.sector)
    mask = (codes == supersector - 1) & np.isfinite(ind.values[t])
    if eligible is not None:
        mask &= np.asarray(eligible, dtype=bool)
    idx = np.flatnonzero(mask)
    n_s = idx.size
    if n_s < band.min_sector_assets:
        log.info(
            "supersector %d on %s: %d eligible asset(s) < %d, skipped",
            supersector,
            date,
            n_s,
            band.min_sector_assets,
        )
        return (), ()
    order = idx[_order_desc(ind.values[t, idx])]
    (lo_l, hi_l), (lo_s, hi_s) = band.slices(n_s)
    longs = tuple(ind.assets[i] for i in order[lo_l:hi_l])
    shorts = tuple(ind.assets[i] for i in order[lo_s:hi_s])
    return longs, shorts


def raw_weights(
    longs: Sequence[str],
    shorts: Sequence[str],
    vols: VolSeries,
    date: pd.Timestamp,
    sector_assets: Sequence[str],
) -> np.ndarray:
    """Signed capped inverse-volatility magnitudes, before the mu rescaling.

    sigma_mean is averaged over all eligible assets of the supersector, not
    just the selected legs.  A member with a missing or zero volatility gets
    weight 0 and the next-ranked asset is not promoted (the band is
    positional).
    """
    t = vols.dates.get_loc(pd.Timestamp(date))
    pos = {a: i for i, a in enumerate(vols.assets)}
    sector_idx = np.array([pos[a] for a in sector_assets])
    sig = vols.values[t, sector_idx]
    usable = np.isfinite(sig) & (sig > 0)
    if not usable.any():
        return np.zeros(len(sector_assets))
    sigma_mean = float(sig[usable].mean())

    out = np.zeros(len(sector_assets))
    local = {a: i for i, a in enumerate(sector_assets)}
    dropped = 0
    for names, sign in ((longs, 1.0), (shorts, -1.0)):
        for a in names:
            i = local[a]
            if not usable[i]:
                dropped += 1
                continue
            out[i] = sign * min(1.0, sigma_mean / sig[i])
    if dropped:
        log.info("%s: %d member(s) dropped for missing/zero volatility", date, dropped)
    return out


class NeutralizedWeights(NamedTuple):
    weights: np.ndarray
    mu_plus: float
    mu_minus: float
    neutralized: bool


def beta_neutralize(
    weights: np.ndarray, betas: np.ndarray, q: float, n_s: int
) -> NeutralizedWeights:
    """Scale the legs by mu+/mu- so that sum_i beta_i w_i = 0.

    The leg with the larger aggregate beta gets the reduced multiplier; the
    other is pinned at 1 / (2 q n_s), which bounds the supersector's gross
    exposure by one.  If either leg's aggregate beta is non-positive the
    multipliers fall back to the common pin and the result is flagged
    (neutralized=False).
    """
    weights = np.asarray(weights, dtype=float)
    betas = np.asarray(betas, dtype=float)
    mu_max = 1.0 / (2.0 * q * n_s)
    long_mask = weights > 0
    short_mask = weights < 0
    agg_long = float(betas[long_mask] @ weights[long_mask])
    agg_short = float(-(betas[short_mask] @ weights[short_mask]))
    if agg_long > 0 and agg_short > 0:
        if agg_long >= agg_short:
            mu_minus = mu_max
            mu_plus = mu_max * agg_short / agg_long
        else:
            mu_plus = mu_max
            mu_minus = mu_max * agg_long / agg_short
        neutral = True
    else:
        mu_plus = mu_minus = mu_max
        neutral = False
    out = np.where(long_mask, weights * mu_plus, weights * mu_minus)
    out[~long_mask & ~short_mask] = 0.0
    return NeutralizedWeights(out, mu_plus, mu_minus, neutral)


def _eligibility(
    ind: IndicatorPanel, panel: ReturnPanel, vols: VolSeries, betas: BetaSeries
) -> np.ndarray:
    """An asset needs a same-day indicator, sigma, beta, and return.

    The beta estimate must be positive: legs of positive-beta assets keep
    the mu+/mu- solve well posed on every day, and a non-positive estimate
    for a liquid stock signals an unconverged estimator rather than a real
    sensitivity.
    """
    return (
        np.isfinite(ind.values)
        & np.isfinite(panel.returns)
        & np.isfinite(vols.values)
        & (vols.values > 0)
        & np.isfinite(betas.values)
        & (betas.values > 0)
    )


def _build_engine(
    ind: IndicatorPanel,
    panel: ReturnPanel,
    vols: VolSeries,
    betas: BetaSeries,
    bands: Sequence[QuantileBand],
    groups: list[np.ndarray] | np.ndarray,
    use_vol_caps: bool = True,
    beta_neutral: bool = True,
) -> dict[str, dict[str, np.ndarray]]:
    """Shared daily loop over groups; one sort per group serves every band.

    ``groups`` is either a list of static asset-index arrays (supersectors)
    or a (T, N) integer code matrix for day-dependent groupings (the
    ladder's capitalization split), with -1 meaning unassigned.
    ``beta_neutral=False`` neutralizes against a unit beta vector, which
    makes each group delta-neutral instead of beta-neutral;
    ``use_vol_caps=False`` replaces the capped inverse-volatility
    magnitudes with equal magnitudes.
    """
    T, _ = panel.returns.shape
    if isinstance(groups, np.ndarray):
        group_lists = None
        group_codes = groups
        n_groups = int(group_codes.max()) + 1 if group_codes.size else 0
    else:
        group_lists = groups
        group_codes = None
        n_groups = len(group_lists)
    elig = _eligibility(ind, panel, vols, betas)
    values = ind.values
    vola = vols.values
    beta_m = betas.values if beta_neutral else None

    out = {
        b.kind: {
            "weights": np.zeros((T, panel.n_assets)),
            "membership": np.zeros((T, panel.n_assets), dtype=np.int8),
            "mu_plus": np.full((T, n_groups), np.nan),
            "mu_minus": np.full((T, n_groups), np.nan),
            "n_eligible": np.zeros((T, n_groups), dtype=np.int32),
            "neutralized": np.ones((T, n_groups), dtype=bool),
            "scale": np.ones(T),
        }
        for b in bands
    }
    min_assets = max(b.min_sector_assets for b in bands)
    empty_days = {b.kind: 0 for b in bands}
    fallback_days = 0

    for t in range(T):
        elig_row = elig[t]
        val_row = values[t]
        vol_row = vola[t]
        beta_row = beta_m[t] if beta_m is not None else None
        contributing = {b.kind: 0 for b in bands}
        gross_raw = {b.kind: 0.0 for b in bands}
        for g in range(n_groups):
            if group_lists is not None:
                members = group_lists[g]
                idx = members[elig_row[members]]
            else:
                idx = np.flatnonzero((group_codes[t] == g) & elig_row)
            n_s = idx.size
            if n_s < min_assets:
                continue
            order = idx[_order_desc(val_row[idx])]
            if use_vol_caps:
                sigma_mean = vol_row[idx].mean()
                caps_all = np.minimum(1.0, sigma_mean / vol_row[order])
            else:
                caps_all = np.ones(n_s)
            betas_all = beta_row[order] if beta_row is not None else np.ones(n_s)
            for band in bands:
                (lo_l, hi_l), (lo_s, hi_s) = band.slices(n_s)
                if hi_l <= lo_l or hi_s <= lo_s:
                    continue
                longs = order[lo_l:hi_l]
                shorts = order[lo_s:hi_s]
                cap_l = caps_all[lo_l:hi_l]
                cap_s = caps_all[lo_s:hi_s]
                agg_long = float(betas_all[lo_l:hi_l] @ cap_l)
                agg_short = float(betas_all[lo_s:hi_s] @ cap_s)
                mu_max = 1.0 / (2.0 * band.q * n_s)
                store = out[band.kind]
                if agg_long > 0 and agg_short > 0:
                    if agg_long >= agg_short:
                        mu_minus = mu_max
                        mu_plus = mu_max * agg_short / agg_long
                    else:
                        mu_plus = mu_max
                        mu_minus = mu_max * agg_long / agg_short
                else:
                    mu_plus = mu_minus = mu_max
                    store["neutralized"][t, g] = False
                    fallback_days += 1
                w = store["weights"][t]
                w[longs] = mu_plus * cap_l
                w[shorts] = -mu_minus * cap_s
                store["membership"][t, longs] = 1
                store["membership"][t, shorts] = -1
                store["mu_plus"][t, g] = mu_plus
                store["mu_minus"][t, g] = mu_minus
                store["n_eligible"][t, g] = n_s
                contributing[band.kind] += 1
                gross_raw[band.kind] += mu_plus * cap_l.sum() + mu_minus * cap_s.sum()
        for band in bands:
            store = out[band.kind]
            n_contrib = contributing[band.kind]
            if n_contrib == 0:
                empty_days[band.kind] += 1
                continue
            scale = min(1.0 / n_contrib, 1.0 / gross_raw[band.kind])
            store["weights"][t] *= scale
            store["scale"][t] = scale

    for band in bands:
        if empty_days[band.kind]:
            log.warning(
                "%s/%s: %d day(s) with no contributing group (zero weights)",
                ind.indicator_id,
                band.kind,
                empty_days[band.kind],
            )
    if fallback_days:
        log.warning(
            "%s: %d group-day(s) fell back to equal multipliers (non-positive leg beta)",
            ind.indicator_id,
            fallback_days,
        )
    return out


def build_factor_bands(
    ind: IndicatorPanel,
    panel: ReturnPanel,
    vols: VolSeries,
    betas: BetaSeries,
    bands: Sequence[QuantileBand],
    supersectors: SupersectorMap = DEFAULT_SUPERSECTORS,
) -> dict[str, FactorWeights]:
    """Build several quantile bands of one indicator in a single pass."""
    codes = supersectors.assign(ind.assets, ind.sector)
    group_lists = [np.flatnonzero(codes == s) for s in range(supersectors.n_supersectors)]
    raw = _build_engine(ind, panel, vols, betas, bands, groups=group_lists)
    return {
        kind: FactorWeights(
            indicator_id=ind.indicator_id,
            band=next(b for b in bands if b.kind == kind),
            dates=panel.dates,
            assets=panel.assets,
            weights=parts["weights"],
            membership=parts["membership"],
            sector_codes=codes,
            mu_plus=parts["mu_plus"],
            mu_minus=parts["mu_minus"],
            n_eligible=parts["n_eligible"],
            neutralized=parts["neutralized"],
            scale=parts["scale"],
        )
        for kind, parts in raw.items()
    }


def build_factor(
    ind: IndicatorPanel,
    panel: ReturnPanel,
    vols: VolSeries,
    betas: BetaSeries,
    band: QuantileBand = Q1,
    supersectors: SupersectorMap = DEFAULT_SUPERSECTORS,
) -> FactorWeights:
    """Daily beta-neutral long-short weights for one indicator and band."""
    return build_factor_bands(ind, panel, vols, betas, [band], supersectors)[band.kind]


def factor_return(w: FactorWeights, panel: ReturnPanel) -> FactorReturnSeries:
    """Dot product of the day's weights with the day's returns.

    Assets with a missing return contribute zero; their count is logged.
    """
    contrib = w.weights * panel.returns
    missing = (w.weights != 0.0) & ~np.isfinite(panel.returns)
    n_missing = int(missing.sum())
    if n_missing:
        log.info(
            "%s/%s: %d member-day(s) had missing returns (contributed 0)",
            w.indicator_id,
            w.band.kind,
            n_missing,
        )
    contrib = np.where(np.isfinite(contrib), contrib, 0.0)
    return FactorReturnSeries(
        indicator_id=w.indicator_id,
        band=w.band.kind,
        dates=panel.dates,
        returns=contrib.sum(axis=1),
    )


def noise_indicator(
    panel: ReturnPanel, classification: Classification, seed: int | None = None
) -> IndicatorPanel:
    """A static non-financial ranking: seeded pseudo-random, or alphabetic.

    Without a seed the value is minus the position in the (ascending) asset
    list, so the descending sort puts the lexicographic head of each
    supersector in the long leg.
    """
    from .panel import indicator_from_matrix

    if seed is None:
        static = -np.arange(panel.n_assets, dtype=float)
    else:
        static = np.random.default_rng(seed).permutation(panel.n_assets).astype(float)
    values = np.tile(static, (panel.n_dates, 1))
    return indicator_from_matrix("noise", panel, values, classification)


def build_noise_factor(
    panel: ReturnPanel,
    vols: VolSeries,
    betas: BetaSeries,
    band: QuantileBand,
    supersectors: SupersectorMap,
    classification: Classification,
    seed: int | None = None,
) -> FactorWeights:
    """The full pipeline applied to the arbitrary noise indicator."""
    ind = noise_indicator(panel, classification, seed)
    return build_factor(ind, panel, vols, betas, band, supersectors)
