import numpy as np
import pytest

from robustmerton import AmbiguityProfile, MarketModel

TABLE_SIGMA = [[0.050, 0.066, 0.082], [0.058, 0.074, 0.090]]
TABLE_MU = [0.09, 0.11]
TABLE_ETA = [1.0, 3.0, 5.0]
# exact to 4 printed decimals: sigma.T @ inv(sigma sigma.T) @ (mu - r 1)
TABLE_THETA = [4.7396, 0.8333, -3.0729]


def benchmark_model(gamma: float) -> MarketModel:
    """Three-factor, two-asset market used throughout the experiments."""
    return MarketModel(
        horizon=3.0,
        rate=0.05,
        discount=0.015,
        drift=TABLE_MU,
        volatility=TABLE_SIGMA,
        risk_aversion=gamma,
        bequest_weight=1.0,
        initial_wealth=1.0,
    )


@pytest.fixture
def model_g4() -> MarketModel:
    return benchmark_model(4.0)


@pytest.fixture
def model_g09() -> MarketModel:
    return benchmark_model(0.9)


@pytest.fixture
def profile() -> AmbiguityProfile:
    return AmbiguityProfile(np.array(TABLE_ETA))


@pytest.fixture
def neutral_profile() -> AmbiguityProfile:
    return AmbiguityProfile(np.zeros(3))
