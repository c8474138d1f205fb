"""Correlation-matrix spectra and the Marcenko-Pastur noise threshold.

The empirical correlation matrix of volatility-normalized returns is
diagonalized and its eigenvalues compared against the Marcenko-Pastur
support [(1 - sqrt(q))^2, (1 + sqrt(q))^2] with q = N/T: eigenvalues below
the upper edge are statistically indistinguishable from estimation noise,
so only the ones above it are labeled as signal.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .estimators import VolSeries
from .panel import ReturnPanel

log = logging.getLogger(__name__)

MIN_COVERAGE = 0.8  # assets with fewer finite normalized returns are dropped
SYMMETRY_TOL = 1e-10
SQRT_EIGENVALUE_BIN_WIDTH = 0.0626


@dataclass(frozen=True)
class CorrelationResult:
    """Empirical correlation matrix plus the assets and sample that built it."""

    matrix: np.ndarray  # (N, N), unit diagonal
    assets: tuple[str, ...]
    n_obs: int


@dataclass(frozen=True)
class EigenSpectrum:
    """Sorted spectrum of a correlation matrix with its noise bounds."""

    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # column alpha matches eigenvalues[alpha]
    n_assets: int
    n_obs: int
    mp_lambda_min: float
    mp_lambda_max: float

    @property
    def sqrt_eigenvalues(self) -> np.ndarray:
        return np.sqrt(np.clip(self.eigenvalues, 0.0, None))


@dataclass(frozen=True)
class SpectrumClassification:
    """Signal/noise split of a spectrum plus Fig-style histogram data."""

    signal: np.ndarray  # eigenvalues above the MP upper edge (market excluded)
    noise: np.ndarray
    market_eigenvalue: float
    market_sqrt: float
    threshold_sqrt: float
    bin_edges: np.ndarray  # sqrt-eigenvalue bins of width 0.0626
    counts: np.ndarray  # histogram of sqrt eigenvalues, market mode excluded


def correlation_matrix(
    panel: ReturnPanel, vols: VolSeries, min_coverage: float = MIN_COVERAGE
) -> CorrelationResult:
    """Pearson correlation of volatility-normalized returns r_i / sigma_i.

    Assets with less than ``min_coverage`` finite normalized history are
    dropped.  When the surviving matrix is complete the correlation is
    computed over the common rows; ragged data falls back to
    pairwise-complete moments.  The diagonal is exactly one.
    """
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = panel.returns / vols.values
    normalized[~np.isfinite(normalized)] = np.nan

    finite = np.isfinite(normalized)
    coverage = finite.mean(axis=0)
    keep = coverage >= min_coverage
    if int(keep.sum()) < 2:
        raise ValueError(
            f"fewer than 2 assets have >= {min_coverage:.0%} coverage; cannot build a matrix"
        )
    dropped = int((~keep).sum())
    if dropped:
        log.warning("correlation matrix: dropped %d asset(s) below %.0f%% coverage", dropped, 100 * min_coverage)
    x = normalized[:, keep]
    assets = tuple(a for a, k in zip(panel.assets, keep) if k)

    rows_complete = np.isfinite(x).all(axis=1)
    n_complete = int(rows_complete.sum())
    if n_complete >= min_coverage * x.shape[0]:
        sample = x[rows_complete]
        matrix = np.corrcoef(sample, rowvar=False)
        n_obs = n_complete
    else:
        matrix = _pairwise_correlation(x)
        n_obs = x.shape[0]
    matrix = (matrix + matrix.T) / 2.0
    np.fill_diagonal(matrix, 1.0)
    return CorrelationResult(matrix=matrix, assets=assets, n_obs=n_obs)


def _pairwise_correlation(x: np.ndarray) -> np.ndarray:
    """Pearson correlations from pairwise-complete raw moments."""
    mask = np.isfinite(x)
    filled = np.where(mask, x, 0.0)
    m = mask.astype(float)
    counts = m.T @ m
    s1 = filled.T @ m  # sum of x_i over rows where j is also present
    s2 = (filled**2).T @ m
    cross = filled.T @ filled
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_i = s1 / counts
        cov = cross / counts - mean_i * mean_i.T
        var_i = s2 / counts - mean_i**2
        corr = cov / np.sqrt(var_i * var_i.T)
    corr[counts < 2] = np.nan
    if not np.isfinite(corr).all():
        raise ValueError("pairwise correlation failed: a pair has fewer than 2 joint observations")
    return np.clip(corr, -1.0, 1.0)


def eigen_decompose(c: np.ndarray, n_obs: int) -> EigenSpectrum:
    """Full descending eigendecomposition of a symmetric correlation matrix."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"matrix must be square, got {c.shape}")
    asym = float(np.abs(c - c.T).max())
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max |C - C^T| = {asym:.3e})")
    values, vectors = np.linalg.eigh((c + c.T) / 2.0)
    order = np.argsort(values)[::-1]
    lam_min, lam_max = mp_bounds(c.shape[0], n_obs)
    return EigenSpectrum(
        eigenvalues=values[order],
        eigenvectors=vectors[:, order],
        n_assets=c.shape[0],
        n_obs=int(n_obs),
        mp_lambda_min=lam_min,
        mp_lambda_max=lam_max,
    )


def mp_bounds(n_assets: int, n_obs: int) -> tuple[float, float]:
    """Marcenko-Pastur support edges (1 -/+ sqrt(q))^2 with q = N/T."""
    if n_obs <= 0:
        raise ValueError("n_obs must be positive")
    q = n_assets / n_obs
    root = math.sqrt(q)
    return (1.0 - root) ** 2, (1.0 + root) ** 2


def mp_density(lam: np.ndarray | float, q: float) -> np.ndarray | float:
    """Marcenko-Pastur eigenvalue density for unit-variance data.

    rho(lambda) = sqrt(4 q lambda - (lambda + q - 1)^2) / (2 pi q lambda)
    inside the support, 0 outside.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    lam_arr = np.asarray(lam, dtype=float)
    disc = 4.0 * q * lam_arr - (lam_arr + q - 1.0) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.sqrt(np.clip(disc, 0.0, None)) / (2.0 * np.pi * q * lam_arr)
    rho = np.where((disc > 0) & (lam_arr > 0), rho, 0.0)
    return float(rho) if np.isscalar(lam) else rho


def classify_spectrum(spec: EigenSpectrum) -> SpectrumClassification:
    """Split eigenvalues at the MP upper edge and bin their square roots.

    The largest eigenvalue is reported separately as the market mode and is
    excluded from both the signal list and the histogram, mirroring how a
    spectrum plot would show everything below the market line.
    """
    lam = spec.eigenvalues
    market = float(lam[0])
    rest = lam[1:]
    signal = rest[rest > spec.mp_lambda_max]
    noise = rest[rest <= spec.mp_lambda_max]
    sqrt_rest = np.sqrt(np.clip(rest, 0.0, None))
    top = float(sqrt_rest.max()) if sqrt_rest.size else 0.0
    n_bins = max(1, int(math.ceil(top / SQRT_EIGENVALUE_BIN_WIDTH + 1e-12)))
    edges = np.arange(n_bins + 1) * SQRT_EIGENVALUE_BIN_WIDTH
    counts, _ = np.histogram(sqrt_rest, bins=edges)
    return SpectrumClassification(
        signal=signal,
        noise=noise,
        market_eigenvalue=market,
        market_sqrt=math.sqrt(max(market, 0.0)),
        threshold_sqrt=math.sqrt(spec.mp_lambda_max),
        bin_edges=edges,
        counts=counts,
    )


def eigen_alignment_ratio(
    returns: np.ndarray, spec: EigenSpectrum, alpha: int, sigmas: np.ndarray
) -> float:
    """In-sample variance ratio for weights aligned with eigenvector alpha.

    With w_i chosen so that w_i sigma_i is proportional to eigenvector
    alpha of the correlation matrix built from the same complete sample,
    Var(sum w_i r_i) / sum_i w_i^2 sigma_i^2 equals the eigenvalue exactly.
    ``sigmas`` must be the per-asset standard deviations used to build the
    matrix (one constant per asset over the window).
    """
    v = spec.eigenvectors[:, alpha]
    w = v / sigmas
    pnl = returns @ w
    var = float(np.var(pnl, ddof=1))
    denom = float(np.sum(w**2 * sigmas**2))
    return var / denom


def spectrum_frame(spec: EigenSpectrum) -> pd.DataFrame:
    """Tabular spectrum: rank, eigenvalue, sqrt, signal flag."""
    lam = spec.eigenvalues
    return pd.DataFrame(
        {
            "rank": np.arange(1, lam.size + 1),
            "eigenvalue": lam,
            "sqrt_eigenvalue": np.sqrt(np.clip(lam, 0.0, None)),
            "is_signal": lam > spec.mp_lambda_max,
        }
    )
