"""Synthetic market generator and planted-structure oracle tests."""

import math

import numpy as np
import pytest

from factorlens.estimators import estimate_beta, realized_volatility
from factorlens.factors import Q1, Q2, Q3, build_factor, factor_return, normalize_by_country
from factorlens.panel import ingest_indicators, ingest_prices, load_classification
from factorlens.riskmetrics import fcl
from factorlens.synth import (
    PlantedFactor,
    SynthConfig,
    beta_second_moment,
    expected_selected_count,
    generate_market,
    planted_fcl_oracle,
    write_market_csv,
)


class TestGenerateMarket:
    def test_fixed_seed_bit_identical(self):
        cfg = SynthConfig(n_assets=40, n_days=200, seed=77)
        a = generate_market(cfg)
        b = generate_market(cfg)
        assert np.array_equal(a.panel.returns, b.panel.returns)
        assert np.array_equal(a.true_betas, b.true_betas)
        for name in a.indicators:
            assert np.array_equal(a.indicators[name].values, b.indicators[name].values)

    def test_different_seeds_differ(self):
        a = generate_market(SynthConfig(n_assets=40, n_days=200, seed=1))
        b = generate_market(SynthConfig(n_assets=40, n_days=200, seed=2))
        assert not np.array_equal(a.panel.returns, b.panel.returns)

    def test_idio_only_market_uncorrelated(self):
        cfg = SynthConfig(
            n_assets=40, n_days=2001, market_vol=0.0, sector_vol=0.0, idio_vol=0.25, seed=5
        )
        market = generate_market(cfg)
        corr = np.corrcoef(market.panel.returns, rowvar=False)
        off = corr[~np.eye(40, dtype=bool)]
        t = market.panel.n_dates
        assert np.mean(np.abs(off) < 3 / math.sqrt(t)) > 0.98

    def test_market_only_top_eigenvalue_matches_equicorrelation(self):
        # The closed form 1 + (n-1) rho_bar is the equicorrelation limit, so
        # the oracle run keeps the beta dispersion tight.
        cfg = SynthConfig(
            n_assets=60, n_days=4001, market_vol=0.21, sector_vol=0.0, idio_vol=0.20,
            beta_std=0.05, seed=6,
        )
        market = generate_market(cfg)
        corr = np.corrcoef(market.panel.returns, rowvar=False)
        top = np.linalg.eigvalsh(corr)[-1]
        # Mean pairwise correlation from the planted betas.
        sm_daily = cfg.market_vol**2 / 252
        se_daily = cfg.idio_vol**2 / 252
        sigma = np.sqrt(market.true_betas**2 * sm_daily + se_daily)
        rho = np.outer(market.true_betas, market.true_betas) * sm_daily / np.outer(sigma, sigma)
        rho_bar = rho[~np.eye(60, dtype=bool)].mean()
        expected = 1 + 59 * rho_bar
        assert abs(top / expected - 1) < 0.10

    def test_statistical_properties_match_config(self):
        cfg = SynthConfig(n_assets=200, n_days=3001, sector_vol=0.0, seed=8)
        market = generate_market(cfg)
        t = market.panel.n_dates
        total_var = (
            beta_second_moment(cfg) * cfg.market_vol**2 + cfg.idio_vol**2
        )
        realized = np.sqrt(252) * market.panel.returns.std(axis=0, ddof=1).mean()
        assert abs(realized / math.sqrt(total_var) - 1) < 3 / math.sqrt(t)
        assert market.true_betas.min() >= cfg.beta_floor
        assert abs(market.true_betas.mean() - beta_second_moment(cfg) ** 0.5) < 0.6

    def test_index_is_market_factor(self):
        market = generate_market(SynthConfig(n_assets=20, n_days=300, seed=9))
        assert np.isfinite(market.panel.index_returns).all()
        assert market.panel.index_returns.std() > 0

    def test_truncate_slices_everything(self):
        market = generate_market(SynthConfig(n_assets=20, n_days=300, seed=10))
        cut = market.panel.dates[150]
        shorter = market.truncate(cut)
        assert shorter.panel.n_dates == 151
        assert np.array_equal(shorter.panel.returns, market.panel.returns[:151])
        for name in market.indicators:
            assert np.array_equal(
                shorter.indicators[name].values, market.indicators[name].values[:151]
            )


class TestCsvRoundTrip:
    def test_written_files_reproduce_panels(self, tmp_path):
        cfg = SynthConfig(n_assets=30, n_days=260, annual_jitter=0.2, seed=12)
        market = generate_market(cfg)
        paths = write_market_csv(market, tmp_path)

        panel = ingest_prices(paths["prices"])
        assert panel.assets == market.panel.assets
        assert panel.dates.equals(market.panel.dates)
        mask = np.isfinite(market.panel.returns)
        assert np.allclose(panel.returns[mask], market.panel.returns[mask], atol=1e-12)
        assert np.allclose(panel.index_returns, market.panel.index_returns, atol=1e-12)
        assert np.allclose(panel.volumes, market.panel.volumes, rtol=1e-10)

        classification = load_classification(paths["classification"])
        assert classification.country == market.classification.country
        assert classification.industry_group == market.classification.industry_group

        indicators = ingest_indicators(paths["indicators"], panel, classification)
        for name, ind in market.indicators.items():
            got = indicators[name].values
            finite = np.isfinite(ind.values)
            assert np.array_equal(finite, np.isfinite(got))
            assert np.allclose(got[finite], ind.values[finite], rtol=1e-10)


class TestPlantedOracle:
    def test_zero_loading_pure_idio_is_exactly_one(self):
        cfg = SynthConfig(
            n_assets=150,
            n_days=500,
            market_vol=0.0,
            sector_vol=0.0,
            idio_vol=0.25,
            planted_factors=(PlantedFactor("remuneration", {"Q1": 0.0}, 0.10),),
            seed=1,
        )
        assert planted_fcl_oracle(cfg, "remuneration", Q1) == pytest.approx(1.0, abs=1e-12)

    def test_strong_factor_approaches_sqrt_two(self):
        # Common variance equal to idiosyncratic variance at the portfolio
        # level: n * g^2 sf^2 = se^2.  The oracle is sqrt(2 / (1 + 1/n)),
        # within 2% of sqrt(2) for n ~ 42.
        idio = 0.25
        cfg0 = SynthConfig(
            n_assets=150, n_days=500, market_vol=0.0, sector_vol=0.0, idio_vol=idio,
            planted_factors=(PlantedFactor("remuneration", {"Q1": 1.0}, 0.10),), seed=1,
        )
        n_sel = expected_selected_count(cfg0, Q1)
        g = idio / (0.10 * math.sqrt(n_sel))
        cfg = SynthConfig(
            n_assets=150, n_days=500, market_vol=0.0, sector_vol=0.0, idio_vol=idio,
            planted_factors=(PlantedFactor("remuneration", {"Q1": g}, 0.10),), seed=1,
        )
        oracle = planted_fcl_oracle(cfg, "remuneration", Q1)
        exact = math.sqrt(2.0 / (1.0 + 1.0 / n_sel))
        assert oracle == pytest.approx(exact, rel=1e-12)
        assert abs(oracle - math.sqrt(2)) < 0.02

    def test_unplanted_indicator_rejected(self):
        cfg = SynthConfig(n_assets=30, n_days=100, seed=1)
        with pytest.raises(ValueError, match="no planted factor"):
            planted_fcl_oracle(cfg, "cash", Q1)

    def test_expected_selected_count_matches_floor_slices(self):
        cfg = SynthConfig(n_assets=150, n_days=100, seed=1)
        # 6 supersectors of 25: long floor(3.75)=3, short 25-floor(21.25)=4.
        assert expected_selected_count(cfg, Q1) == 6 * 7

    def test_middle_quantile_factor_indistinguishable_from_noise(self):
        # Loadings planted only on Q1: the Q3 portfolio's FCL sits at the
        # same idiosyncratic floor as an arbitrary-indicator factor.
        fcl_q3 = []
        fcl_noise = []
        for seed in range(3):
            cfg = SynthConfig(
                n_assets=120, n_days=1001, market_vol=0.08, sector_vol=0.0, idio_vol=0.25,
                planted_factors=(PlantedFactor("remuneration", {"Q1": 0.5}, 0.10),),
                seed=1700 + seed,
            )
            market = generate_market(cfg)
            vols = realized_volatility(market.panel, 40)
            betas = estimate_beta(market.panel, 200)
            ind = normalize_by_country(market.indicators["remuneration"])
            w3 = build_factor(ind, market.panel, vols, betas, Q3)
            fcl_q3.append(np.nanmean(fcl(factor_return(w3, market.panel), w3, vols).fcl[500:]))
            from factorlens.factors import DEFAULT_SUPERSECTORS, build_noise_factor

            wn = build_noise_factor(
                market.panel, vols, betas, Q1, DEFAULT_SUPERSECTORS,
                market.classification, seed=seed,
            )
            fcl_noise.append(
                np.nanmean(fcl(factor_return(wn, market.panel), wn, vols).fcl[500:])
            )
        assert abs(np.mean(fcl_q3) - np.mean(fcl_noise)) < 0.05


class TestConfigValidation:
    def test_negative_vol_rejected(self):
        with pytest.raises(ValueError):
            SynthConfig(market_vol=-0.1)

    def test_duplicate_planted_indicator_rejected(self):
        with pytest.raises(ValueError, match="one planted factor"):
            SynthConfig(
                planted_factors=(
                    PlantedFactor("cash", {"Q1": 0.1}),
                    PlantedFactor("cash", {"Q2": 0.1}),
                )
            )

    def test_non_file_indicator_rejected(self):
        with pytest.raises(ValueError, match="file indicator"):
            PlantedFactor("momentum", {"Q1": 0.1})

    def test_middle_quantile_loading_rejected(self):
        with pytest.raises(ValueError, match="extreme bands"):
            PlantedFactor("cash", {"Q4": 0.1})
