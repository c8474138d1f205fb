"""Batch command-line front end.

Subcommands mirror the pipeline stages:

    simulate   draw a synthetic market and write its CSV data files
    ingest     validate the data files and write a coverage summary
    build      construct factor weights and daily returns
    fcl        factor correlation levels from the build artifact
    pca        correlation-matrix spectrum and Marcenko-Pastur report
    stats      performance, correlation, impact, and rolling reports
    ladder     the A0..A6 incremental construction report

Configuration is a plain-text INI file (key = value under section
headers); every value has a default, the resolved configuration is hashed,
and the hash plus seed are embedded in every output file.  Given the same
config and seed, every command is byte-deterministic.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import figures, perf, reports
from .estimators import estimate_beta, realized_volatility
from .factors import (
    BANDS,
    DEFAULT_SUPERSECTORS,
    FactorReturnSeries,
    SupersectorMap,
    build_factor_bands,
    factor_return,
    noise_indicator,
    normalize_by_country,
)
from .ladder import ALTERNATIVE_VOL_PERIOD, VARIANT_NAMES, VARIANTS, LadderInputs, build_ladder, ladder_report
from .panel import (
    AssetUniverse,
    Classification,
    IndicatorPanel,
    IngestError,
    ReturnPanel,
    derive_liquidity,
    derive_momentum,
    indicator_from_matrix,
    ingest_indicators,
    ingest_prices,
    load_classification,
)
from .riskmetrics import fcl_from_series, interfactor_correlation, rolling_correlation, weighted_variance_input
from .spectrum import classify_spectrum, correlation_matrix, eigen_decompose, spectrum_frame
from .synth import FILE_INDICATORS, PlantedFactor, SynthConfig, generate_market, write_market_csv

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USER_ERROR = 2

ALL_FACTORS = (
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
)

DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"seed": "42", "universe": "synthetic", "output": "out"},
    "data": {
        "prices": "data/prices.csv",
        "indicators": "data/indicators.csv",
        "classification": "data/classification.csv",
        "supersector_map": "",
    },
    "simulate": {
        "n_assets": "569",
        "n_days": "3612",
        "n_sectors": "6",
        "n_countries": "3",
        "market_vol": "0.21",
        "sector_vol": "0.06",
        "idio_vol": "0.25",
        "idio_vol_spread": "0.0",
        "beta_mean": "0.65",
        "beta_std": "0.37",
        "beta_floor": "0.05",
        "annual_jitter": "0.1",
        "start_date": "2001-01-01",
        "planted": "remuneration capitalization book_to_market",
    },
    "planted.remuneration": {
        "q1_loading": "0.13",
        "q2_loading": "0.065",
        "q3_loading": "0.0325",
        "factor_vol": "0.10",
        "drift": "0.0121",
    },
    "planted.capitalization": {
        "q1_loading": "0.35",
        "q2_loading": "0.175",
        "q3_loading": "0.0875",
        "factor_vol": "0.10",
        "drift": "-0.05",
    },
    "planted.book_to_market": {
        "q1_loading": "0.18",
        "q2_loading": "0.09",
        "q3_loading": "0.045",
        "factor_vol": "0.10",
        "drift": "0.0",
    },
    "factors": {
        "indicators": ",".join(ALL_FACTORS),
        "bands": "Q1",
        "include_noise": "true",
        "noise_seed": "",
    },
    "estimators": {
        "vol_period": "40",
        "beta_period": "200",
        "fcl_period": "200",
        "corr_norm_period": "20",
        "rolling_window": "90",
    },
    "stats": {
        "impact_target": "remuneration",
        "rolling_pairs": "remuneration:low_volatility remuneration:sales_to_market",
        "compounding": "arithmetic",
    },
    "ladder": {"variants": ",".join(VARIANT_NAMES), "indicators": ""},
    "output": {"export_weights": "false", "figures": "true"},
}


class ConfigError(ValueError):
    """Raised with every configuration violation listed."""


class MissingArtifact(RuntimeError):
    """An upstream command's output file is required but absent."""


@dataclass
class RunConfig:
    """Resolved configuration for one pipeline run."""

    values: dict[str, dict[str, str]]
    out_dir: Path
    seed: int
    config_hash: str = field(init=False)

    def __post_init__(self) -> None:
        # The hash pins the scientific configuration; where the outputs are
        # written must not change their contents.
        hashed = {s: dict(sorted(v.items())) for s, v in sorted(self.values.items())}
        hashed.get("run", {}).pop("output", None)
        canonical = json.dumps({"values": hashed, "seed": self.seed}, sort_keys=True)
        self.config_hash = hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def get(self, section: str, key: str) -> str:
        return self.values[section][key]

    def get_int(self, section: str, key: str) -> int:
        return int(self.get(section, key))

    def get_float(self, section: str, key: str) -> float:
        return float(self.get(section, key))

    def get_bool(self, section: str, key: str) -> bool:
        return self.get(section, key).strip().lower() in ("1", "true", "yes", "on")

    def get_list(self, section: str, key: str) -> list[str]:
        raw = self.get(section, key).replace(",", " ")
        return [token for token in raw.split() if token]

    def data_path(self, key: str) -> Path:
        p = Path(self.get("data", key))
        return p if p.is_absolute() else self.out_dir / p


def load_config(path: str | None, out_override: str | None, seed_override: int | None) -> RunConfig:
    """Merge the INI file over the defaults and validate everything."""
    values = {section: dict(keys) for section, keys in DEFAULTS.items()}
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        fresh_planted = {
            "q1_loading": "0.0",
            "q2_loading": "0.0",
            "q3_loading": "0.0",
            "factor_vol": "0.10",
            "drift": "0.0",
        }
        for section in parser.sections():
            if section not in DEFAULTS and not section.startswith("planted."):
                raise ConfigError(f"{path}: unknown section [{section}]")
            if section not in values:
                values[section] = dict(fresh_planted)  # new [planted.<indicator>]
            target = values[section]
            for key, value in parser.items(section):
                target[key] = value

    problems = _validate(values)
    if problems:
        raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(problems))

    out_dir = Path(out_override or values["run"]["output"])
    seed = seed_override if seed_override is not None else int(values["run"]["seed"])
    values["run"]["output"] = str(out_dir)
    values["run"]["seed"] = str(seed)
    return RunConfig(values=values, out_dir=out_dir, seed=seed)


def _validate(values: dict[str, dict[str, str]]) -> list[str]:
    problems: list[str] = []

    def check(section: str, key: str, kind, predicate=None, what: str = "") -> None:
        raw = values.get(section, {}).get(key)
        if raw is None:
            problems.append(f"[{section}] {key} is missing")
            return
        try:
            parsed = kind(raw)
        except ValueError:
            problems.append(f"[{section}] {key} = {raw!r} is not a {kind.__name__}")
            return
        if predicate is not None and not predicate(parsed):
            problems.append(f"[{section}] {key} = {raw!r} {what}")

    positive = (lambda x: x > 0, "must be positive")
    check("run", "seed", int)
    for key in ("vol_period", "beta_period", "fcl_period", "corr_norm_period", "rolling_window"):
        check("estimators", key, int, *positive)
    for key in ("n_assets", "n_days", "n_sectors", "n_countries"):
        check("simulate", key, int, *positive)
    for key in ("market_vol", "sector_vol", "idio_vol"):
        check("simulate", key, float, lambda x: x >= 0, "must be >= 0")
    for name in values.get("factors", {}).get("bands", "").replace(",", " ").split():
        if name not in BANDS:
            problems.append(f"[factors] bands: unknown band {name!r} (expected Q1/Q2/Q3)")
    for name in values.get("factors", {}).get("indicators", "").replace(",", " ").split():
        if name not in ALL_FACTORS:
            problems.append(f"[factors] indicators: unknown indicator {name!r}")
    for name in values.get("ladder", {}).get("variants", "").replace(",", " ").split():
        if name not in VARIANTS:
            problems.append(f"[ladder] variants: unknown variant {name!r}")
    for name in values.get("simulate", {}).get("planted", "").replace(",", " ").split():
        if name not in FILE_INDICATORS:
            problems.append(f"[simulate] planted: {name!r} is not a file indicator")
        elif f"planted.{name}" not in values:
            problems.append(f"[simulate] planted: missing section [planted.{name}]")
    return problems


def _require(path: Path, what: str, produced_by: str) -> Path:
    if not path.exists():
        raise MissingArtifact(
            f"missing {what}: {path} (run `factorlens {produced_by}` first)"
        )
    return path


def _synth_config(cfg: RunConfig) -> SynthConfig:
    planted = []
    for name in cfg.get_list("simulate", "planted"):
        section = f"planted.{name}"
        planted.append(
            PlantedFactor(
                indicator_id=name,
                loadings={
                    "Q1": cfg.get_float(section, "q1_loading"),
                    "Q2": cfg.get_float(section, "q2_loading"),
                    "Q3": cfg.get_float(section, "q3_loading"),
                },
                factor_vol=cfg.get_float(section, "factor_vol"),
                drift=cfg.get_float(section, "drift"),
            )
        )
    return SynthConfig(
        n_assets=cfg.get_int("simulate", "n_assets"),
        n_days=cfg.get_int("simulate", "n_days"),
        n_sectors=cfg.get_int("simulate", "n_sectors"),
        n_countries=cfg.get_int("simulate", "n_countries"),
        market_vol=cfg.get_float("simulate", "market_vol"),
        sector_vol=cfg.get_float("simulate", "sector_vol"),
        idio_vol=cfg.get_float("simulate", "idio_vol"),
        idio_vol_spread=cfg.get_float("simulate", "idio_vol_spread"),
        beta_mean=cfg.get_float("simulate", "beta_mean"),
        beta_std=cfg.get_float("simulate", "beta_std"),
        beta_floor=cfg.get_float("simulate", "beta_floor"),
        annual_jitter=cfg.get_float("simulate", "annual_jitter"),
        planted_factors=tuple(planted),
        seed=cfg.seed,
        start_date=cfg.get("simulate", "start_date"),
    )


@dataclass
class LoadedData:
    panel: ReturnPanel
    indicators: dict[str, IndicatorPanel]
    classification: Classification
    supersectors: SupersectorMap
    vols: "object"
    betas: "object"


def _load_data(cfg: RunConfig, factor_list: list[str]) -> LoadedData:
    prices = _require(cfg.data_path("prices"), "price file", "simulate")
    indicators_file = _require(cfg.data_path("indicators"), "indicator file", "simulate")
    classification_file = _require(cfg.data_path("classification"), "classification file", "simulate")

    panel = ingest_prices(prices)
    classification = load_classification(classification_file)
    indicators = ingest_indicators(indicators_file, panel, classification)

    map_path = cfg.get("data", "supersector_map").strip()
    supersectors = SupersectorMap.from_csv(map_path) if map_path else DEFAULT_SUPERSECTORS

    vols = realized_volatility(panel, cfg.get_int("estimators", "vol_period"))
    betas = estimate_beta(panel, cfg.get_int("estimators", "beta_period"))

    if "momentum" in factor_list:
        indicators["momentum"] = derive_momentum(panel, classification)
    if "low_volatility" in factor_list:
        indicators["low_volatility"] = indicator_from_matrix(
            "low_volatility", panel, betas.values, classification
        )
    if "liquidity" in factor_list:
        indicators["liquidity"] = derive_liquidity(panel, indicators["capitalization"])
    missing = [f for f in factor_list if f not in indicators]
    if missing:
        raise IngestError(f"indicator file lacks data for factor(s): {missing}")
    return LoadedData(panel, indicators, classification, supersectors, vols, betas)


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig) -> int:
    market = generate_market(_synth_config(cfg))
    paths = write_market_csv(market, cfg.out_dir / "data")
    for kind, p in sorted(paths.items()):
        print(f"wrote {kind}: {p}")
    return EXIT_OK


def cmd_ingest(cfg: RunConfig) -> int:
    factor_list = cfg.get_list("factors", "indicators")
    data = _load_data(cfg, factor_list)
    universe = AssetUniverse(
        assets=data.panel.assets,
        min_capitalization=0.0,
        name=cfg.get("run", "universe"),
    )
    rows = [
        {
            "item": f"universe:{universe.name}",
            "n_assets": len(universe.assets),
            "n_days": data.panel.n_dates,
            "first_date": data.panel.dates[0].strftime("%Y-%m-%d"),
            "last_date": data.panel.dates[-1].strftime("%Y-%m-%d"),
            "coverage": float(np.isfinite(data.panel.returns).mean()),
        }
    ]
    for name in sorted(data.indicators):
        ind = data.indicators[name]
        rows.append(
            {
                "item": f"indicator:{name}",
                "n_assets": ind.values.shape[1],
                "n_days": ind.values.shape[0],
                "first_date": ind.dates[0].strftime("%Y-%m-%d"),
                "last_date": ind.dates[-1].strftime("%Y-%m-%d"),
                "coverage": float(np.isfinite(ind.values).mean()),
            }
        )
    path = reports.write_report(
        pd.DataFrame(rows), cfg.out_dir / "reports" / "ingest_summary.csv",
        "ingest", cfg.config_hash, cfg.seed,
    )
    print(f"wrote {path}")
    return EXIT_OK


def _band_list(cfg: RunConfig):
    return [BANDS[name] for name in cfg.get_list("factors", "bands")]


def cmd_build(cfg: RunConfig) -> int:
    factor_list = cfg.get_list("factors", "indicators")
    bands = _band_list(cfg)
    data = _load_data(cfg, factor_list)
    rows: list[pd.DataFrame] = []
    weight_frames = []
    cumulative: dict[str, pd.Series] = {}
    export_weights = cfg.get_bool("output", "export_weights")

    build_list: list[tuple[str, IndicatorPanel]] = [
        (name, normalize_by_country(data.indicators[name])) for name in sorted(factor_list)
    ]
    if cfg.get_bool("factors", "include_noise"):
        noise_seed = cfg.get("factors", "noise_seed").strip()
        build_list.append(
            (
                "noise",
                noise_indicator(
                    data.panel, data.classification, int(noise_seed) if noise_seed else None
                ),
            )
        )

    for name, ind in build_list:
        weights_by_band = build_factor_bands(
            ind, data.panel, data.vols, data.betas, bands, data.supersectors
        )
        for kind in sorted(weights_by_band):
            w = weights_by_band[kind]
            fr = factor_return(w, data.panel)
            gross = w.gross()
            net = w.net()
            delta = np.where(gross > 0, net / np.where(gross > 0, gross, 1.0), np.nan)
            rows.append(
                pd.DataFrame(
                    {
                        "date": w.dates.strftime("%Y-%m-%d"),
                        "indicator_id": name,
                        "band": kind,
                        "factor_return": fr.returns,
                        "gross": gross,
                        "net": net,
                        "delta": delta,
                        "weighted_variance": weighted_variance_input(w, data.vols),
                        "n_members": (w.membership != 0).sum(axis=1),
                        "n_fallback_sectors": (~w.neutralized).sum(axis=1),
                    }
                )
            )
            if kind == bands[0].kind:
                cumulative[name] = fr.as_series()
            if export_weights:
                weight_frames.append(w)
        del weights_by_band

    panel_frame = pd.concat(rows, ignore_index=True)
    path = reports.write_report(
        panel_frame, cfg.out_dir / "build" / "factor_panel.csv", "build", cfg.config_hash, cfg.seed
    )
    print(f"wrote {path}")
    if export_weights:
        wpath = reports.write_report(
            reports.weights_long_frame(weight_frames),
            cfg.out_dir / "build" / "weights.csv",
            "build",
            cfg.config_hash,
            cfg.seed,
        )
        print(f"wrote {wpath}")
    if cfg.get_bool("output", "figures"):
        fig = figures.cumulative_returns_figure(
            cumulative, cfg.out_dir / "build" / "cumulative_returns.png"
        )
        print(f"wrote {fig}")
    return EXIT_OK


def _load_factor_panel(cfg: RunConfig) -> pd.DataFrame:
    path = _require(
        cfg.out_dir / "build" / "factor_panel.csv", "factor weights/returns artifact", "build"
    )
    frame = reports.read_report(path)
    frame["date"] = pd.to_datetime(frame["date"])
    return frame


def cmd_fcl(cfg: RunConfig) -> int:
    panel_frame = _load_factor_panel(cfg)
    period = cfg.get_int("estimators", "fcl_period")
    out_rows = []
    summary = []
    series_for_figure: dict[str, pd.Series] = {}
    for (name, band), block in panel_frame.groupby(["indicator_id", "band"], sort=True):
        block = block.sort_values("date")
        dates = pd.DatetimeIndex(block["date"])
        series = fcl_from_series(
            dates,
            block["factor_return"].to_numpy(),
            block["weighted_variance"].to_numpy(),
            period=period,
            indicator_id=str(name),
            band=str(band),
        )
        out_rows.append(
            pd.DataFrame(
                {
                    "date": dates.strftime("%Y-%m-%d"),
                    "indicator_id": name,
                    "band": band,
                    "fcl": series.fcl,
                }
            )
        )
        summary.append(
            {
                "indicator_id": name,
                "band": band,
                "mean_fcl": series.mean(),
                "n_valid_days": int(np.isfinite(series.fcl).sum()),
            }
        )
        series_for_figure[f"{name}:{band}"] = series.as_series()
    path = reports.write_report(
        pd.concat(out_rows, ignore_index=True),
        cfg.out_dir / "reports" / "fcl_series.csv",
        "fcl",
        cfg.config_hash,
        cfg.seed,
    )
    spath = reports.write_report(
        pd.DataFrame(summary), cfg.out_dir / "reports" / "fcl_summary.csv",
        "fcl", cfg.config_hash, cfg.seed,
    )
    print(f"wrote {path}")
    print(f"wrote {spath}")
    if cfg.get_bool("output", "figures"):
        fig = figures.series_figure(
            series_for_figure,
            cfg.out_dir / "reports" / "fcl_series.png",
            "Factor correlation level (200-day EMA)",
            "FCL",
            hlines=(1.0,),
        )
        print(f"wrote {fig}")
    return EXIT_OK


def cmd_pca(cfg: RunConfig) -> int:
    data = _load_data(cfg, [])
    result = correlation_matrix(data.panel, data.vols)
    spec = eigen_decompose(result.matrix, result.n_obs)
    cls = classify_spectrum(spec)

    path = reports.write_report(
        spectrum_frame(spec), cfg.out_dir / "reports" / "spectrum.csv",
        "pca", cfg.config_hash, cfg.seed,
    )
    hist = pd.DataFrame(
        {
            "bin_left": cls.bin_edges[:-1],
            "bin_right": cls.bin_edges[1:],
            "count": cls.counts,
        }
    )
    hpath = reports.write_report(
        hist, cfg.out_dir / "reports" / "spectrum_histogram.csv",
        "pca", cfg.config_hash, cfg.seed,
    )
    summary = pd.DataFrame(
        [
            {
                "n_assets": spec.n_assets,
                "n_obs": spec.n_obs,
                "q": spec.n_assets / spec.n_obs,
                "mp_lambda_min": spec.mp_lambda_min,
                "mp_lambda_max": spec.mp_lambda_max,
                "sqrt_lambda_max": cls.threshold_sqrt,
                "market_eigenvalue": cls.market_eigenvalue,
                "sqrt_market_eigenvalue": cls.market_sqrt,
                "n_signal": int(cls.signal.size),
            }
        ]
    )
    spath = reports.write_report(
        summary, cfg.out_dir / "reports" / "pca_summary.csv", "pca", cfg.config_hash, cfg.seed
    )
    for p in (path, hpath, spath):
        print(f"wrote {p}")
    if cfg.get_bool("output", "figures"):
        fig = figures.spectrum_histogram_figure(
            cls, spec.n_assets / spec.n_obs, cfg.out_dir / "reports" / "spectrum_histogram.png"
        )
        print(f"wrote {fig}")
    return EXIT_OK


def cmd_stats(cfg: RunConfig) -> int:
    panel_frame = _load_factor_panel(cfg)
    compounding = cfg.get("stats", "compounding")
    series: dict[tuple[str, str], FactorReturnSeries] = {}
    for (name, band), block in panel_frame.groupby(["indicator_id", "band"], sort=True):
        block = block.sort_values("date")
        series[(str(name), str(band))] = FactorReturnSeries(
            indicator_id=str(name),
            band=str(band),
            dates=pd.DatetimeIndex(block["date"]),
            returns=block["factor_return"].to_numpy(),
        )

    stat_rows = []
    for (name, band), fr in sorted(series.items()):
        s = perf.stats(fr, compounding)
        stat_rows.append(
            {
                "indicator_id": name,
                "band": band,
                "annualized_bias": s.annualized_bias,
                "annualized_vol": s.annualized_vol,
                "sharpe": s.sharpe,
                "t_stat": s.t_stat,
                "span_years": s.span_years,
                "monthly_mean": s.monthly_mean,
                "monthly_std": s.monthly_std,
                "monthly_t": s.monthly_t,
            }
        )
    stats_path = reports.write_report(
        pd.DataFrame(stat_rows), cfg.out_dir / "reports" / "factor_stats.csv",
        "stats", cfg.config_hash, cfg.seed,
    )
    print(f"wrote {stats_path}")

    primary_band = _band_list(cfg)[0].kind
    primary = {
        name: fr for (name, band), fr in series.items() if band == primary_band and name != "noise"
    }
    wrote = [stats_path]
    if len(primary) >= 2:
        corr = interfactor_correlation(
            [primary[name].as_series().rename(name) for name in sorted(primary)],
            cfg.get_int("estimators", "corr_norm_period"),
        )
        corr_path = reports.write_report(
            corr.as_frame(), cfg.out_dir / "reports" / "factor_correlations.csv",
            "stats", cfg.config_hash, cfg.seed, index=True,
        )
        wrote.append(corr_path)
        print(f"wrote {corr_path}")

        target = cfg.get("stats", "impact_target")
        if target in primary:
            biases = {
                row["indicator_id"]: row["annualized_bias"]
                for row in stat_rows
                if row["band"] == primary_band and row["indicator_id"] != "noise"
            }
            impacts, intrinsic = perf.impact_decomposition(target, biases, corr)
            t_target = next(
                row["t_stat"] for row in stat_rows
                if row["indicator_id"] == target and row["band"] == primary_band
            )
            impact_rows = [
                {"factor": other, "impact": value} for other, value in sorted(impacts.items())
            ]
            impact_rows.append({"factor": f"{target} (own bias)", "impact": biases[target]})
            impact_rows.append({"factor": f"{target} (intrinsic)", "impact": intrinsic})
            impact_rows.append(
                {
                    "factor": f"{target} (implied t-stat)",
                    "impact": perf.implied_tstat(intrinsic, biases[target], t_target),
                }
            )
            ipath = reports.write_report(
                pd.DataFrame(impact_rows),
                cfg.out_dir / "reports" / "impact_decomposition.csv",
                "stats", cfg.config_hash, cfg.seed,
            )
            wrote.append(ipath)
            print(f"wrote {ipath}")

    rolling_out = []
    rolling_figure_data: dict[str, pd.Series] = {}
    band_level = None
    for pair in cfg.get_list("stats", "rolling_pairs"):
        a_name, _, b_name = pair.partition(":")
        if a_name in primary and b_name in primary:
            rc = rolling_correlation(
                primary[a_name],
                primary[b_name],
                cfg.get_int("estimators", "rolling_window"),
                cfg.get_int("estimators", "corr_norm_period"),
            )
            band_level = rc.significance_band
            label = f"{a_name} vs {b_name}"
            rolling_out.append(
                pd.DataFrame(
                    {
                        "date": rc.dates.strftime("%Y-%m-%d"),
                        "pair": label,
                        "correlation": rc.values,
                        "significance_band": rc.significance_band,
                    }
                )
            )
            rolling_figure_data[label] = pd.Series(rc.values, index=rc.dates)
    if rolling_out:
        rpath = reports.write_report(
            pd.concat(rolling_out, ignore_index=True),
            cfg.out_dir / "reports" / "rolling_correlations.csv",
            "stats", cfg.config_hash, cfg.seed,
        )
        wrote.append(rpath)
        print(f"wrote {rpath}")

    if cfg.get_bool("output", "figures"):
        delta_series = {
            name: pd.Series(
                panel_frame.loc[
                    (panel_frame["indicator_id"] == name) & (panel_frame["band"] == primary_band),
                    "delta",
                ].to_numpy(),
                index=pd.DatetimeIndex(
                    panel_frame.loc[
                        (panel_frame["indicator_id"] == name)
                        & (panel_frame["band"] == primary_band),
                        "date",
                    ]
                ),
            )
            for name in sorted(primary)
        }
        f1 = figures.series_figure(
            delta_series,
            cfg.out_dir / "reports" / "net_investment.png",
            "Net investment (net over gross)",
            "delta",
            hlines=(0.0,),
        )
        print(f"wrote {f1}")
        if rolling_figure_data and band_level is not None:
            f2 = figures.rolling_correlation_figure(
                rolling_figure_data, band_level, cfg.out_dir / "reports" / "rolling_correlations.png"
            )
            print(f"wrote {f2}")
    return EXIT_OK


def cmd_ladder(cfg: RunConfig) -> int:
    factor_list = cfg.get_list("ladder", "indicators") or [
        f for f in cfg.get_list("factors", "indicators")
    ]
    data = _load_data(cfg, factor_list)
    inputs = LadderInputs(
        panel=data.panel,
        vols_standard=data.vols,
        vols_alternative=realized_volatility(data.panel, ALTERNATIVE_VOL_PERIOD),
        betas=data.betas,
        capitalization=data.indicators["capitalization"],
        supersectors=data.supersectors,
    )
    variants = tuple(cfg.get_list("ladder", "variants"))
    results = build_ladder(
        {name: data.indicators[name] for name in sorted(factor_list)}, inputs, variants
    )
    report = ladder_report(results)
    path = reports.write_report(
        report.reset_index(), cfg.out_dir / "reports" / "ladder_report.csv",
        "ladder", cfg.config_hash, cfg.seed,
        notes=(
            "A6 substitutes an 80-day EMA volatility estimator for a "
            "more elaborate volatility model",
        ),
    )
    print(f"wrote {path}")
    print("note: the A6 rung substitutes an 80-day EMA volatility estimator")
    if cfg.get_bool("output", "figures"):
        fig = figures.ladder_figure(report, cfg.out_dir / "reports" / "ladder_volatility.png")
        print(f"wrote {fig}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "build": cmd_build,
    "fcl": cmd_fcl,
    "pca": cmd_pca,
    "stats": cmd_stats,
    "ladder": cmd_ladder,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="factorlens",
        description="Indicator-based factor construction and correlation-level analytics",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="INI configuration file")
    parser.add_argument("--out", default=None, help="output directory (overrides [run] output)")
    parser.add_argument("--seed", type=int, default=None, help="seed (overrides [run] seed)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config, args.out, args.seed)
        return COMMANDS[args.command](cfg)
    except (ConfigError, MissingArtifact, IngestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR


if __name__ == "__main__":
    sys.exit(main())
