"""Long-short indicator factors, correlation-level analytics, and spectra."""

from .estimators import BetaSeries, VolSeries, ema, estimate_beta, realized_volatility
from .factors import (
    BANDS,
    DEFAULT_SUPERSECTORS,
    Q1,
    Q2,
    Q3,
    FactorReturnSeries,
    FactorWeights,
    QuantileBand,
    SupersectorMap,
    beta_neutralize,
    build_factor,
    build_factor_bands,
    build_noise_factor,
    factor_return,
    normalize_by_country,
    rank_and_select,
    raw_weights,
)
from .panel import (
    AssetUniverse,
    Classification,
    IndicatorPanel,
    ReturnPanel,
    derive_liquidity,
    derive_momentum,
    ingest_indicators,
    ingest_prices,
    load_classification,
)
from .riskmetrics import (
    DeltaSeries,
    FactorCorrelationMatrix,
    FclSeries,
    delta_from_betas,
    fcl,
    ff_beta,
    interfactor_correlation,
    net_investment,
    rolling_correlation,
)
from .spectrum import (
    EigenSpectrum,
    classify_spectrum,
    correlation_matrix,
    eigen_decompose,
    mp_bounds,
    mp_density,
)
from .synth import PlantedFactor, SynthConfig, generate_market, planted_fcl_oracle

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
