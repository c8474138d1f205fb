"""Shared fixtures and the acceptance-criteria terminal summary."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from factorlens.estimators import estimate_beta, realized_volatility
from factorlens.synth import PlantedFactor, SynthConfig, generate_market

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("ci")

# Pass/fail lines per acceptance criterion, printed at the end of the run.
ACCEPTANCE_RESULTS: dict[int, list[tuple[str, bool]]] = {}


def record_criterion(number: int, description: str, passed: bool) -> None:
    ACCEPTANCE_RESULTS.setdefault(number, []).append((description, passed))
    marker = "PASS" if passed else "FAIL"
    print(f"[{marker}] criterion {number}: {description}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        for description, passed in ACCEPTANCE_RESULTS[number]:
            marker = "PASS" if passed else "FAIL"
            terminalreporter.write_line(f"[{marker}] criterion {number}: {description}")


@pytest.fixture()
def criterion(request):
    """Recorder bound to the conftest instance pytest actually loaded."""
    return record_criterion


@pytest.fixture(scope="session")
def small_market():
    """A compact planted market shared by unit tests (72 assets, ~500 days)."""
    cfg = SynthConfig(
        n_assets=72,
        n_days=501,
        n_countries=3,
        market_vol=0.12,
        sector_vol=0.04,
        idio_vol=0.25,
        planted_factors=(
            PlantedFactor("remuneration", {"Q1": 0.4, "Q2": 0.2, "Q3": 0.1}, 0.10, drift=0.012),
        ),
        seed=11,
    )
    return generate_market(cfg)


@pytest.fixture(scope="session")
def small_estimators(small_market):
    vols = realized_volatility(small_market.panel, 40)
    betas = estimate_beta(small_market.panel, 200)
    return vols, betas


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
