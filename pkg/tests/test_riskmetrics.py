"""FCL, net investment, and correlation analytics tests."""

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from factorlens.estimators import realized_volatility
from factorlens.factors import Q1, FactorReturnSeries, factor_return, normalize_by_country
from factorlens.riskmetrics import (
    delta_from_betas,
    fcl,
    ff_beta,
    interfactor_correlation,
    net_investment,
    rolling_correlation,
)


def single_asset_weights(panel):
    from tests.test_factors import _tiny_weights

    return _tiny_weights(panel, {0: 1.0})


def gaussian_factor(name, returns, start="2010-01-01"):
    returns = np.asarray(returns, dtype=float)
    return FactorReturnSeries(
        indicator_id=name,
        band="Q1",
        dates=pd.bdate_range(start, periods=returns.size),
        returns=returns,
    )


class TestFcl:
    def test_single_asset_self_consistency(self):
        # A one-stock portfolio measured against its own estimated vol has
        # FCL near 1 once both EMAs are burned in.
        from factorlens.panel import ReturnPanel

        values = []
        for seed in range(5):
            t = 1500
            r = np.random.default_rng(700 + seed).normal(0, 0.012, size=(t, 1))
            panel = ReturnPanel(
                pd.bdate_range("2005-01-01", periods=t), ("AAA",), r, np.zeros(t)
            )
            vols = realized_volatility(panel, 40)
            w = single_asset_weights(panel)
            fr = factor_return(w, panel)
            series = fcl(fr, w, vols)
            values.append(np.nanmean(series.fcl[800:]))
        assert all(abs(v - 1.0) < 0.05 for v in values)

    def test_all_zero_weights_give_missing_never_nan_propagation(self, small_market):
        from tests.test_factors import _tiny_weights

        panel = small_market.panel
        w = _tiny_weights(panel, {})
        fr = factor_return(w, panel)
        vols = realized_volatility(panel, 40)
        series = fcl(fr, w, vols)
        assert np.isnan(series.fcl).all()
        assert np.isnan(series.den_ema).all()

    def test_scale_invariance_in_weights(self, small_market, small_estimators):
        vols, betas = small_estimators
        from factorlens.factors import build_factor

        ind = normalize_by_country(small_market.indicators["remuneration"])
        w = build_factor(ind, small_market.panel, vols, betas, Q1)
        fr = factor_return(w, small_market.panel)
        base = fcl(fr, w, vols).fcl

        scaled_w = replace(w, weights=w.weights * 3.0)
        scaled_fr = factor_return(scaled_w, small_market.panel)
        scaled = fcl(scaled_fr, scaled_w, vols).fcl
        mask = np.isfinite(base)
        assert np.allclose(scaled[mask], base[mask], rtol=1e-12)

    def test_invariance_under_common_vol_rescaling(self, small_market, small_estimators):
        vols, betas = small_estimators
        from factorlens.factors import build_factor

        ind = normalize_by_country(small_market.indicators["remuneration"])
        w = build_factor(ind, small_market.panel, vols, betas, Q1)
        fr = factor_return(w, small_market.panel)
        base = fcl(fr, w, vols).fcl

        c = 2.5
        scaled_fr = replace(fr, returns=fr.returns * c)
        scaled_vols = replace(vols, values=vols.values * c)
        scaled = fcl(scaled_fr, w, scaled_vols).fcl
        mask = np.isfinite(base)
        assert np.allclose(scaled[mask], base[mask], rtol=1e-12)

    def test_burn_in_gate(self, small_market, small_estimators):
        vols, betas = small_estimators
        from factorlens.factors import build_factor
        from factorlens.riskmetrics import FCL_BURN_IN_DAYS

        ind = normalize_by_country(small_market.indicators["remuneration"])
        w = build_factor(ind, small_market.panel, vols, betas, Q1)
        fr = factor_return(w, small_market.panel)
        series = fcl(fr, w, vols)
        first_valid = int(np.flatnonzero(np.isfinite(series.fcl))[0])
        active_before = int((np.abs(w.weights).sum(axis=1) > 0)[:first_valid].sum())
        assert active_before == FCL_BURN_IN_DAYS - 1


class TestNetInvestment:
    def test_all_long_is_plus_one(self, small_market):
        from tests.test_factors import _tiny_weights

        w = _tiny_weights(small_market.panel, {0: 0.3, 1: 0.7})
        delta = net_investment(w).delta
        assert np.allclose(delta, 1.0)

    def test_balanced_book_is_zero(self, small_market):
        from tests.test_factors import _tiny_weights

        w = _tiny_weights(small_market.panel, {0: 0.5, 1: -0.5})
        assert np.allclose(net_investment(w).delta, 0.0)

    @given(st.lists(st.floats(-1, 1), min_size=2, max_size=12))
    def test_matches_direct_sum_oracle(self, raw):
        values = np.array(raw)
        if np.abs(values).sum() == 0:
            return
        from tests.test_factors import _tiny_panel, _tiny_weights

        panel = _tiny_panel(len(values))
        w = _tiny_weights(panel, {i: v for i, v in enumerate(values) if v != 0.0})
        delta = net_investment(w).delta[0]
        expected = values.sum() / np.abs(values).sum()
        assert delta == pytest.approx(expected, abs=1e-15)
        assert -1.0 - 1e-12 <= delta <= 1.0 + 1e-12

    def test_zero_book_missing(self, small_market):
        from tests.test_factors import _tiny_weights

        w = _tiny_weights(small_market.panel, {})
        assert np.isnan(net_investment(w).delta).all()


class TestDeltaFromBetas:
    def test_equal_legs_zero(self):
        assert delta_from_betas(0.8, 0.8) == 0.0

    def test_arithmetic_example(self):
        assert delta_from_betas(1.0, 3.0) == pytest.approx(0.5)

    def test_zero_denominator_missing(self):
        assert np.isnan(delta_from_betas(1.0, -1.0))

    def test_proxy_tracks_weight_based_delta(self, small_market, small_estimators):
        # Rank correlation across factors between the weight-based net
        # investment and the leg-average-beta proxy.
        from factorlens.factors import build_factor

        vols, betas = small_estimators
        panel = small_market.panel
        pairs = []
        for name in sorted(small_market.indicators):
            ind = normalize_by_country(small_market.indicators[name])
            w = build_factor(ind, panel, vols, betas, Q1)
            delta = np.nanmean(net_investment(w).delta)
            longs = w.membership == 1
            shorts = w.membership == -1
            beta_long = np.nanmean(np.where(longs, betas.values, np.nan))
            beta_short = np.nanmean(np.where(shorts, betas.values, np.nan))
            pairs.append((delta, delta_from_betas(beta_long, beta_short)))
        a = np.argsort([p[0] for p in pairs])
        b = np.argsort([p[1] for p in pairs])
        ra = np.empty(len(pairs)); ra[a] = np.arange(len(pairs))
        rb = np.empty(len(pairs)); rb[b] = np.arange(len(pairs))
        rank_corr = np.corrcoef(ra, rb)[0, 1]
        assert rank_corr > 0.9


class TestFfBeta:
    def test_zero_delta_zero_beta(self):
        assert ff_beta(0.0, 0.65) == 0.0

    def test_reference_magnitude(self):
        # Average beta 0.65 with a -70% net investment implies 0.91.
        assert ff_beta(-0.7, 0.65) == pytest.approx(0.91)

    @given(
        st.floats(0.05, 3.0, allow_nan=False),
        st.floats(0.05, 3.0, allow_nan=False),
    )
    def test_consistency_identity(self, beta_short, beta_long):
        delta = delta_from_betas(beta_long, beta_short)
        avg = (beta_short + beta_long) / 2.0
        assert ff_beta(delta, avg) == pytest.approx(beta_long - beta_short, rel=1e-12, abs=1e-12)


class TestInterfactorCorrelation:
    def test_self_correlation_one(self):
        r = np.random.default_rng(0).normal(0, 0.01, 500)
        a = gaussian_factor("dividend", r)
        b = gaussian_factor("cash", r)
        corr = interfactor_correlation([a, b])
        assert corr.matrix[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_independent_factors_within_noise_band(self):
        m = 3612
        hits = 0
        trials = 50
        for seed in range(trials):
            gen = np.random.default_rng(800 + seed)
            a = gaussian_factor("dividend", gen.normal(0, 0.01, m))
            b = gaussian_factor("cash", gen.normal(0, 0.01, m))
            corr = interfactor_correlation([a, b])
            if abs(corr.matrix[0, 1]) < 3 * 0.0166:
                hits += 1
        assert hits >= trials - 1  # 99%-style bound with one outlier allowed
        assert corr.standard_error == pytest.approx(1 / np.sqrt(corr.n_obs))

    def test_planted_correlation_recovered(self):
        m = 4000
        rho = 0.35
        gen = np.random.default_rng(5)
        common = gen.normal(0, 1, m)
        a = rho**0.5 * common + (1 - rho) ** 0.5 * gen.normal(0, 1, m)
        b = rho**0.5 * common + (1 - rho) ** 0.5 * gen.normal(0, 1, m)
        corr = interfactor_correlation(
            [gaussian_factor("dividend", 0.01 * a), gaussian_factor("cash", 0.01 * b)]
        )
        assert abs(corr.matrix[0, 1] - rho) < 2 * corr.standard_error + 0.01

    def test_positive_semidefinite(self, small_market, small_estimators):
        from factorlens.factors import build_factor

        vols, betas = small_estimators
        series = []
        for name in sorted(small_market.indicators):
            ind = normalize_by_country(small_market.indicators[name])
            w = build_factor(ind, small_market.panel, vols, betas, Q1)
            series.append(factor_return(w, small_market.panel))
        corr = interfactor_correlation(series)
        assert np.allclose(corr.matrix, corr.matrix.T, atol=1e-12)
        assert np.diag(corr.matrix) == pytest.approx(np.ones(len(series)))
        eigenvalues = np.linalg.eigvalsh(corr.matrix)
        assert eigenvalues.min() >= -1e-10

    def test_short_overlap_rejected(self):
        a = gaussian_factor("dividend", np.random.default_rng(0).normal(0, 0.01, 60))
        b = gaussian_factor("cash", np.random.default_rng(1).normal(0, 0.01, 60))
        with pytest.raises(ValueError, match="overlapping"):
            interfactor_correlation([a, b])


class TestRollingCorrelation:
    def test_identical_series_one(self):
        r = np.random.default_rng(0).normal(0, 0.01, 400)
        rc = rolling_correlation(gaussian_factor("dividend", r), gaussian_factor("cash", r))
        valid = rc.values[np.isfinite(rc.values)]
        assert np.allclose(valid, 1.0, atol=1e-10)

    def test_opposite_series_minus_one(self):
        r = np.random.default_rng(1).normal(0, 0.01, 400)
        rc = rolling_correlation(gaussian_factor("dividend", r), gaussian_factor("cash", -r))
        valid = rc.values[np.isfinite(rc.values)]
        assert np.allclose(valid, -1.0, atol=1e-10)

    def test_independent_pairs_noise_level_matches_band(self):
        # Sample std of the rolling estimator on independent Gaussians is
        # about 1/sqrt(90) = 0.105.
        stds = []
        for seed in range(10):
            gen = np.random.default_rng(900 + seed)
            rc = rolling_correlation(
                gaussian_factor("dividend", gen.normal(0, 0.01, 3000)),
                gaussian_factor("cash", gen.normal(0, 0.01, 3000)),
            )
            stds.append(np.nanstd(rc.values))
        assert rc.significance_band == pytest.approx(0.105, abs=0.001)
        assert abs(np.mean(stds) - 0.105) < 0.02

    def test_window_longer_than_history_all_missing(self):
        r = np.random.default_rng(2).normal(0, 0.01, 50)
        rc = rolling_correlation(gaussian_factor("dividend", r), gaussian_factor("cash", r))
        assert np.isnan(rc.values).all()
