"""Financial-market primitives and derived quantities.

Holds the risk-free rate, subjective discount rate, asset drifts, the
volatility matrix and the utility parameters, and derives the asset
covariance matrix and the market price of risk used by every downstream
formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

# Smallest admissible eigenvalue of sigma @ sigma.T before the market is
# treated as degenerate.
EIGENVALUE_FLOOR = 1e-12


class SingularCovarianceError(ValueError):
    """The covariance matrix sigma @ sigma.T is numerically singular."""


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function of time.

    ``values[i]`` applies on ``[breaks[i], breaks[i+1])``; the last value
    extends to the horizon. Used for piecewise-constant rates aligned with
    the solver grid.
    """

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "breaks", np.asarray(self.breaks, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.breaks.ndim != 1 or self.breaks.shape != self.values.shape:
            raise ValueError("breaks and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.breaks) <= 0):
            raise ValueError("breaks must be strictly increasing")

    def __call__(self, t):
        idx = np.searchsorted(self.breaks, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return self.values[idx]


def _evaluate_rate(spec, t):
    if isinstance(spec, StepFunction):
        return spec(t)
    return spec if np.isscalar(t) else np.full(np.shape(t), float(spec))


@dataclass(frozen=True)
class MarketModel:
    """Market and preference parameters for one scenario.

    Drift and volatility are constant over time; the risk-free rate and the
    subjective discount rate may be constant or piecewise-constant
    (:class:`StepFunction`). ``volatility`` has shape (m, n) with m assets
    driven by n independent Brownian factors, m <= n.
    """

    horizon: float
    rate: float | StepFunction
    discount: float | StepFunction
    drift: np.ndarray
    volatility: np.ndarray
    risk_aversion: float
    bequest_weight: float
    initial_wealth: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "drift", np.atleast_1d(np.asarray(self.drift, dtype=float)))
        object.__setattr__(self, "volatility", np.atleast_2d(np.asarray(self.volatility, dtype=float)))

    @property
    def n_assets(self) -> int:
        return self.volatility.shape[0]

    @property
    def n_factors(self) -> int:
        return self.volatility.shape[1]

    def rate_at(self, t):
        return _evaluate_rate(self.rate, t)

    def discount_at(self, t):
        return _evaluate_rate(self.discount, t)


@dataclass(frozen=True)
class AmbiguityProfile:
    """Per-factor ambiguity-aversion weights.

    ``eta[i] >= 0`` penalises distortions of the i-th Brownian factor; the
    diagonal matrix ``diag(eta)`` is always derived, never stored.
    """

    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta", np.atleast_1d(np.asarray(self.eta, dtype=float)))

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.eta)

    @classmethod
    def neutral(cls, n_factors: int) -> "AmbiguityProfile":
        return cls(np.zeros(n_factors))


def covariance(model: MarketModel) -> np.ndarray:
    """Covariance matrix sigma @ sigma.T of the risky assets.

    Raises :class:`SingularCovarianceError` when the smallest eigenvalue is
    at or below ``EIGENVALUE_FLOOR``.
    """
    sigma = model.volatility
    cov = sigma @ sigma.T
    smallest = np.linalg.eigvalsh(cov)[0]
    if smallest <= EIGENVALUE_FLOOR:
        raise SingularCovarianceError(
            f"covariance matrix is singular (smallest eigenvalue {smallest:.3e})"
        )
    return cov


def risk_price_components(model: MarketModel) -> tuple[np.ndarray, np.ndarray]:
    """Split the market price of risk into rate-independent pieces.

    Returns (a, b) with theta(t) = a - r(t) * b, so time variation of the
    rate costs no linear algebra per evaluation.
    """
    cov = covariance(model)
    factor = cho_factor(cov)
    sigma = model.volatility
    a = sigma.T @ cho_solve(factor, model.drift)
    b = sigma.T @ cho_solve(factor, np.ones(model.n_assets))
    return a, b


def market_price_of_risk(model: MarketModel, t: float = 0.0) -> np.ndarray:
    """Market price of risk sigma.T @ inv(sigma @ sigma.T) @ (mu - r * 1)."""
    a, b = risk_price_components(model)
    return a - model.rate_at(t) * b


def validate(model: MarketModel, profile: AmbiguityProfile) -> list[str]:
    """Collect every violated invariant; an empty list means the inputs are usable."""
    problems: list[str] = []
    if not model.horizon > 0:
        problems.append("horizon must be positive")
    if not model.initial_wealth > 0:
        problems.append("initial wealth must be positive")
    if not model.bequest_weight > 0:
        problems.append("bequest weight must be positive")
    if model.risk_aversion == 1.0:
        problems.append("log-utility excluded (risk aversion must differ from 1)")
    elif not model.risk_aversion > 0:
        problems.append("risk aversion must be positive")

    if model.drift.ndim != 1:
        problems.append("drift must be a vector")
    if model.volatility.ndim != 2:
        problems.append("volatility must be a matrix")
    elif model.drift.shape[0] != model.volatility.shape[0]:
        problems.append("drift and volatility row counts disagree")
    elif model.n_assets > model.n_factors:
        problems.append("more assets than Brownian factors (m must not exceed n)")
    else:
        try:
            covariance(model)
        except SingularCovarianceError as exc:
            problems.append(str(exc))

    if profile.eta.ndim != 1:
        problems.append("ambiguity weights must be a vector")
    elif model.volatility.ndim == 2 and profile.eta.shape[0] != model.n_factors:
        problems.append("ambiguity weights must have one entry per Brownian factor")
    if np.any(profile.eta < 0):
        problems.append("negative ambiguity weight")
    return problems
