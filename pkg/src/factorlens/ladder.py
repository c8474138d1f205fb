"""Incremental construction ladder from a plain delta-neutral sort (A0) to
the full beta-neutral sector-constrained methodology (A6).

The seven presets change one construction rule at a time:

    A0  median capitalization split, terciles, equal weights, delta-neutral
    A1  A0 with 15% quantiles instead of terciles
    A2  A1 without the capitalization split
    A3  A2 with supersector grouping and country normalization
    A4  A3 with capped inverse-volatility weights
    A5  A4 with beta-neutral leg multipliers
    A6  A5 with the alternative (slower, 80-day) volatility estimator

A6 deliberately reuses the exact primary build path, so its returns match
``build_factor`` + ``factor_return`` bit for bit.  The alternative
volatility estimator stands in for a richer volatility model that is out of
scope; reports label the substitution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .estimators import BetaSeries, VolSeries
from .factors import (
    DEFAULT_SUPERSECTORS,
    FactorReturnSeries,
    FactorWeights,
    SupersectorMap,
    _build_engine,
    extreme_band,
    factor_return,
    normalize_by_country,
)
from .panel import IndicatorPanel, ReturnPanel
from . import perf

log = logging.getLogger(__name__)

TERCILE = 1.0 / 3.0
ALTERNATIVE_VOL_PERIOD = 80

VARIANT_NAMES = ("A0", "A1", "A2", "A3", "A4", "A5", "A6")


@dataclass(frozen=True)
class VariantConfig:
    """Construction switches for one rung of the ladder."""

    variant: str
    quantile_fraction: float
    cap_split: bool
    sector_geo_constraints: bool
    vol_weights: bool
    beta_neutral: bool
    vol_model: str  # "standard" | "alternative"

    def __post_init__(self) -> None:
        if not 0 < self.quantile_fraction < 0.5:
            raise ValueError("quantile_fraction must be in (0, 0.5)")
        if self.vol_model not in ("standard", "alternative"):
            raise ValueError(f"unknown vol_model {self.vol_model!r}")
        if self.cap_split and self.sector_geo_constraints:
            raise ValueError("capitalization split and sector constraints are exclusive")


VARIANTS: dict[str, VariantConfig] = {
    "A0": VariantConfig("A0", TERCILE, True, False, False, False, "standard"),
    "A1": VariantConfig("A1", 0.15, True, False, False, False, "standard"),
    "A2": VariantConfig("A2", 0.15, False, False, False, False, "standard"),
    "A3": VariantConfig("A3", 0.15, False, True, False, False, "standard"),
    "A4": VariantConfig("A4", 0.15, False, True, True, False, "standard"),
    "A5": VariantConfig("A5", 0.15, False, True, True, True, "standard"),
    "A6": VariantConfig("A6", 0.15, False, True, True, True, "alternative"),
}


@dataclass(frozen=True)
class LadderInputs:
    """Estimator bundle shared by every variant build."""

    panel: ReturnPanel
    vols_standard: VolSeries
    vols_alternative: VolSeries
    betas: BetaSeries
    capitalization: IndicatorPanel  # raw values, used for the A0/A1 split
    supersectors: SupersectorMap = DEFAULT_SUPERSECTORS


def _cap_split_codes(inputs: LadderInputs) -> np.ndarray:
    """Daily 0/1 codes: at or below the day's median capitalization vs above."""
    caps = inputs.capitalization.values
    codes = np.full(caps.shape, -1, dtype=np.int8)
    finite = np.isfinite(caps)
    for t in range(caps.shape[0]):
        row = caps[t]
        have = finite[t]
        if not have.any():
            continue
        med = np.median(row[have])
        codes[t, have] = np.where(row[have] <= med, 0, 1)
    return codes


def build_variant(
    cfg: VariantConfig,
    ind: IndicatorPanel,
    inputs: LadderInputs,
    return_weights: bool = False,
) -> FactorReturnSeries | tuple[FactorReturnSeries, FactorWeights]:
    """One factor under one rung's construction rules.

    Every rung uses the same eligibility (same-day indicator, sigma, beta,
    return) so rung-to-rung differences isolate the toggled rule.
    """
    panel = inputs.panel
    vols = inputs.vols_alternative if cfg.vol_model == "alternative" else inputs.vols_standard
    band = extreme_band(cfg.quantile_fraction)

    if cfg.sector_geo_constraints:
        sorted_ind = normalize_by_country(ind)
        codes = inputs.supersectors.assign(ind.assets, ind.sector)
        groups: list[np.ndarray] | np.ndarray = [
            np.flatnonzero(codes == s) for s in range(inputs.supersectors.n_supersectors)
        ]
        sector_codes = codes
    elif cfg.cap_split:
        sorted_ind = ind
        groups = _cap_split_codes(inputs)
        sector_codes = np.zeros(panel.n_assets, dtype=np.int64)
    else:
        sorted_ind = ind
        groups = [np.arange(panel.n_assets)]
        sector_codes = np.zeros(panel.n_assets, dtype=np.int64)

    raw = _build_engine(
        sorted_ind,
        panel,
        vols,
        inputs.betas,
        [band],
        groups=groups,
        use_vol_caps=cfg.vol_weights,
        beta_neutral=cfg.beta_neutral,
    )[band.kind]
    weights = FactorWeights(
        indicator_id=ind.indicator_id,
        band=band,
        dates=panel.dates,
        assets=panel.assets,
        weights=raw["weights"],
        membership=raw["membership"],
        sector_codes=sector_codes,
        mu_plus=raw["mu_plus"],
        mu_minus=raw["mu_minus"],
        n_eligible=raw["n_eligible"],
        neutralized=raw["neutralized"],
        scale=raw["scale"],
    )
    series = factor_return(weights, panel)
    series = FactorReturnSeries(
        indicator_id=ind.indicator_id,
        band=cfg.variant,
        dates=series.dates,
        returns=series.returns,
    )
    if return_weights:
        return series, weights
    return series


def build_ladder(
    indicators: dict[str, IndicatorPanel],
    inputs: LadderInputs,
    variants: tuple[str, ...] = VARIANT_NAMES,
) -> dict[str, dict[str, FactorReturnSeries]]:
    """All requested rungs for all factors: results[variant][indicator]."""
    out: dict[str, dict[str, FactorReturnSeries]] = {}
    for name in variants:
        cfg = VARIANTS[name]
        out[name] = {
            indicator: build_variant(cfg, panel_, inputs)
            for indicator, panel_ in indicators.items()
        }
        log.info("ladder: built %s for %d factor(s)", name, len(indicators))
    return out


def ladder_report(results: dict[str, dict[str, FactorReturnSeries]]) -> pd.DataFrame:
    """Monthly mean / std / t-stat per (variant, factor), Table-style layout."""
    rows = []
    for variant in sorted(results):
        cells: dict[str, dict[str, float]] = {"mean": {}, "std": {}, "t_stat": {}}
        for indicator, series in sorted(results[variant].items()):
            s = perf.stats(series)
            cells["mean"][indicator] = s.monthly_mean
            cells["std"][indicator] = s.monthly_std
            cells["t_stat"][indicator] = s.monthly_t
        for stat in ("mean", "std", "t_stat"):
            rows.append({"variant": variant, "stat": stat, **cells[stat]})
    frame = pd.DataFrame(rows)
    return frame.set_index(["variant", "stat"])
