"""Backward value-curve equations in the deterministic-coefficient case.

Solves the scalar backward ODEs for the robust curve Y, the
ambiguity-neutral curve Y0 and the uncertainty-ignoring curve Ytilde on a
uniform time grid, provides the quadrature form of Ytilde as a cross-check,
and exposes the three generator ("driver") functions as point evaluators
with the martingale component supplied as a parameter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from .constraints import ConsumptionBand, ExposureSet, distance_sq, project
from .market import AmbiguityProfile, MarketModel, risk_price_components


class PositivityLossError(ArithmeticError):
    """A value curve left the positive half-line; grid too coarse or inputs invalid."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_N = horizon."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 2:
            raise ValueError("grid needs at least 2 steps")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, self.n_steps * factor)


@dataclass
class SolutionCurves:
    """Node values of the three value curves on a common grid."""

    grid: TimeGrid
    y: np.ndarray
    y0: np.ndarray
    ytilde: np.ndarray


def _as_eta(eta) -> np.ndarray:
    if isinstance(eta, AmbiguityProfile):
        return eta.eta
    return np.atleast_1d(np.asarray(eta, dtype=float))


def _q_evaluator(model: MarketModel, eta, gamma_hat: ExposureSet) -> Callable[[float], float]:
    """Q(t): the linear-growth coefficient of the robust curve's ODE."""
    g = model.risk_aversion
    eta = _as_eta(eta)
    a, b = risk_price_components(model)
    d = 1.0 + eta / g
    root_d = np.sqrt(d)

    def q_at(t: float) -> float:
        theta = a - model.rate_at(t) * b
        quad = theta @ (theta / d)
        dist2 = distance_sq(gamma_hat, theta / (g * root_d))
        r = model.rate_at(t)
        rho = model.discount_at(t)
        return (-rho + (1.0 - g) * r + (1.0 - g) / (2.0 * g) * quad) / g \
            - 0.5 * (1.0 - g) * dist2

    return q_at


def q_coefficient(model: MarketModel, eta, gamma_hat: ExposureSet, t: float = 0.0) -> float:
    """Evaluate Q(t); with eta = 0 this is the ambiguity-neutral coefficient Q0(t)."""
    return _q_evaluator(model, eta, gamma_hat)(t)


def _qtilde_evaluator(
    model: MarketModel, eta, gamma_hat: ExposureSet, band: ConsumptionBand
) -> Callable[[float, float], float]:
    """Qtilde(t, y0): linear coefficient of the Bernoulli equation for Ytilde."""
    g = model.risk_aversion
    eta = _as_eta(eta)
    a, b = risk_price_components(model)
    d = 1.0 + eta / g
    k_lo, k_hi = band.reciprocal_bounds()

    def qtilde_at(t: float, y0_value: float) -> float:
        theta = a - model.rate_at(t) * b
        proj = project(gamma_hat, theta / g)
        k_value = min(max(y0_value, k_lo), k_hi)
        r = model.rate_at(t)
        rho = model.discount_at(t)
        inner = (
            -1.0 / k_value
            - 0.5 * g * (proj @ (d * proj))
            + (-rho + (1.0 - g) * r) / (1.0 - g)
            + proj @ theta
        )
        return (1.0 - g) * inner

    return qtilde_at


def qtilde_coefficient(
    model: MarketModel,
    eta,
    gamma_hat: ExposureSet,
    band: ConsumptionBand,
    y0_at_t: float,
    t: float = 0.0,
) -> float:
    """Evaluate Qtilde(t) given the ambiguity-neutral curve value at t."""
    if not y0_at_t > 0:
        raise ValueError("y0_at_t must be positive")
    return _qtilde_evaluator(model, eta, gamma_hat, band)(t, y0_at_t)


def _rk4_backward(rhs: Callable[[float, float], float], grid: TimeGrid, terminal: float) -> np.ndarray:
    """Integrate -dy/dt = rhs(t, y) from the horizon back to 0, classical order 4."""
    h = grid.dt
    nodes = grid.nodes
    out = np.empty(grid.n_steps + 1)
    out[-1] = terminal
    y = terminal
    half = 0.5 * h
    for k in range(grid.n_steps, 0, -1):
        t = nodes[k]
        k1 = rhs(t, y)
        k2 = rhs(t - half, y + half * k1)
        k3 = rhs(t - half, y + half * k2)
        k4 = rhs(t - h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k - 1] = y
    return out


def _check_positive(values: np.ndarray, label: str) -> np.ndarray:
    if not np.all(np.isfinite(values)) or np.min(values) <= 0.0:
        raise PositivityLossError(
            f"{label} lost positivity (min {np.min(values):.3e}); "
            "refine the grid or check the inputs"
        )
    return values


def terminal_value(model: MarketModel) -> float:
    """Common terminal value of all three curves."""
    return model.bequest_weight ** (1.0 / model.risk_aversion)


def integrate_y(
    model: MarketModel,
    eta,
    gamma_hat: ExposureSet,
    band: ConsumptionBand,
    grid: TimeGrid,
) -> np.ndarray:
    """Backward RK4 solve of -Y' = Y/clamp(Y, 1/ceiling, 1/floor) + Q(t) Y.

    With eta = 0 (and gamma_hat the unscaled set) this produces the
    ambiguity-neutral curve Y0.
    """
    q_at = _q_evaluator(model, eta, gamma_hat)
    k_lo, k_hi = band.reciprocal_bounds()

    def rhs(t: float, y: float) -> float:
        return y / min(max(y, k_lo), k_hi) + q_at(t) * y

    curve = _rk4_backward(rhs, grid, terminal_value(model))
    return _check_positive(curve, "Y curve")


def _midpoint_interpolant(values: np.ndarray, grid: TimeGrid) -> Callable[[float], float]:
    """Evaluate a node-sampled curve at nodes exactly and at midpoints cubically.

    The RK4 stages only query grid nodes and step midpoints; the cubic
    4-point stencil keeps the perturbation at the integrator's own order.
    """
    h = grid.dt
    n = grid.n_steps

    def at(t: float) -> float:
        x = t / h
        i = int(round(x))
        if abs(x - i) < 1e-9:
            return values[min(max(i, 0), n)]
        base = min(max(int(np.floor(x)) - 1, 0), n - 3)
        s = x - base
        w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
        w1 = s * (s - 2.0) * (s - 3.0) / 2.0
        w2 = -s * (s - 1.0) * (s - 3.0) / 2.0
        w3 = s * (s - 1.0) * (s - 2.0) / 6.0
        return w0 * values[base] + w1 * values[base + 1] + w2 * values[base + 2] + w3 * values[base + 3]

    return at


def integrate_ytilde(
    model: MarketModel,
    eta,
    gamma_hat: ExposureSet,
    band: ConsumptionBand,
    y0_curve: np.ndarray,
    grid: TimeGrid,
) -> np.ndarray:
    """Backward solve of the Bernoulli equation for the uncertainty-ignoring curve.

    The substitution u = Ytilde**gamma linearises the equation:
    -u' = K(t)**(gamma-1) + Qtilde(t) u with u(T) = bequest weight, where
    K clamps the supplied ambiguity-neutral curve into the band's
    reciprocal bounds.
    """
    g = model.risk_aversion
    _check_positive(np.asarray(y0_curve, dtype=float), "Y0 curve")
    qtilde_at = _qtilde_evaluator(model, eta, gamma_hat, band)
    y0_at = _midpoint_interpolant(np.asarray(y0_curve, dtype=float), grid)
    k_lo, k_hi = band.reciprocal_bounds()

    def rhs(t: float, u: float) -> float:
        y0_value = y0_at(t)
        k_value = min(max(y0_value, k_lo), k_hi)
        return k_value ** (g - 1.0) + qtilde_at(t, y0_value) * u

    u = _rk4_backward(rhs, grid, model.bequest_weight)
    _check_positive(u, "Ytilde curve")
    return u ** (1.0 / g)


def closed_form_ytilde(
    model: MarketModel,
    eta,
    gamma_hat: ExposureSet,
    band: ConsumptionBand,
    y0_curve: np.ndarray,
    grid: TimeGrid,
) -> np.ndarray:
    """Quadrature form of the uncertainty-ignoring curve.

    Ytilde(t) = {beta * exp(I(t,T)) + int_t^T K(s)**(gamma-1) exp(I(t,s)) ds}**(1/gamma)
    with I(a,b) the integral of Qtilde, evaluated with composite Simpson
    rules on the grid. Cross-checks :func:`integrate_ytilde`.
    """
    g = model.risk_aversion
    y0_curve = _check_positive(np.asarray(y0_curve, dtype=float), "Y0 curve")
    qtilde_at = _qtilde_evaluator(model, eta, gamma_hat, band)
    nodes = grid.nodes
    k_lo, k_hi = band.reciprocal_bounds()

    qtilde = np.array([qtilde_at(t, y0) for t, y0 in zip(nodes, y0_curve)])
    k_values = np.clip(y0_curve, k_lo, k_hi)

    # tail[k] = integral of qtilde from t_k to the horizon
    forward = cumulative_simpson(qtilde, dx=grid.dt, initial=0.0)
    tail = forward[-1] - forward
    integrand = k_values ** (g - 1.0) * np.exp(-tail)
    forward_src = cumulative_simpson(integrand, dx=grid.dt, initial=0.0)
    source_tail = forward_src[-1] - forward_src

    u = np.exp(tail) * (model.bequest_weight + source_tail)
    _check_positive(u, "Ytilde curve")
    return u ** (1.0 / g)


def driver_f(
    model: MarketModel,
    eta,
    gamma_hat: ExposureSet,
    band: ConsumptionBand,
    t: float,
    y: float,
    z: np.ndarray,
) -> float:
    """Generator of the robust curve's backward equation at one point."""
    g = model.risk_aversion
    eta = _as_eta(eta)
    z = np.asarray(z, dtype=float)
    theta = _theta_at(model, t)
    d = 1.0 + eta / g
    r = model.rate_at(t)
    rho = model.discount_at(t)
    k_lo, k_hi = band.reciprocal_bounds()

    clamp_term = y / min(max(y, k_lo), k_hi)
    quad = theta @ (theta / d)
    linear = (-rho + (1.0 - g) * r + (1.0 - g) / (2.0 * g) * quad) / g * y
    z_linear = (theta @ (z / d) - g * (theta @ z)) / g
    z_quad = -(z @ (eta / d * z)) / (2.0 * g * (1.0 - g) * y)
    arg = (theta / g + (1.0 - eta / (1.0 - g)) * z / y) / np.sqrt(d)
    dist_term = -0.5 * (1.0 - g) * distance_sq(gamma_hat, arg) * y
    return clamp_term + linear + z_linear + z_quad + dist_term


def driver_f0(
    model: MarketModel,
    gamma_hat: ExposureSet,
    band: ConsumptionBand,
    t: float,
    y: float,
    z: np.ndarray,
) -> float:
    """Generator of the ambiguity-neutral backward equation at one point."""
    g = model.risk_aversion
    z = np.asarray(z, dtype=float)
    theta = _theta_at(model, t)
    r = model.rate_at(t)
    rho = model.discount_at(t)
    k_lo, k_hi = band.reciprocal_bounds()

    clamp_term = y / min(max(y, k_lo), k_hi)
    linear = (-rho + (1.0 - g) * r + (1.0 - g) / (2.0 * g) * (theta @ theta)) / g * y
    z_linear = (1.0 - g) / g * (theta @ z)
    dist_term = -0.5 * (1.0 - g) * distance_sq(gamma_hat, theta / g + z / y) * y
    return clamp_term + linear + z_linear + dist_term


def driver_ftilde(
    model: MarketModel,
    eta,
    gamma_hat: ExposureSet,
    band: ConsumptionBand,
    t: float,
    ytilde: float,
    ztilde: np.ndarray,
    y0: float,
    z0: np.ndarray,
) -> float:
    """Generator of the uncertainty-ignoring backward equation at one point."""
    g = model.risk_aversion
    eta = _as_eta(eta)
    ztilde = np.asarray(ztilde, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    theta = _theta_at(model, t)
    d = 1.0 + eta / g
    r = model.rate_at(t)
    rho = model.discount_at(t)
    k_lo, k_hi = band.reciprocal_bounds()

    k_value = min(max(y0, k_lo), k_hi)
    ratio = ytilde / k_value
    proj = project(gamma_hat, theta / g + z0 / y0)

    utility_term = (1.0 - g) / g * (-ratio + ratio ** (1.0 - g) / (1.0 - g))
    proj_quad = -0.5 * (1.0 - g) * (proj @ (d * proj)) * ytilde
    linear = (-rho + (1.0 - g) * r) / g * ytilde
    cross = (1.0 - g) * (proj @ (theta / g + (1.0 - eta / (1.0 - g)) * ztilde / ytilde)) * ytilde
    z_quad = -0.5 * (1.0 - g) * (ztilde @ ((1.0 + g * eta / (1.0 - g) ** 2) * ztilde)) / ytilde
    return utility_term + proj_quad + linear + cross + z_quad


def _theta_at(model: MarketModel, t: float) -> np.ndarray:
    a, b = risk_price_components(model)
    return a - model.rate_at(t) * b


def solve_curves(
    model: MarketModel,
    profile: AmbiguityProfile,
    exposure: ExposureSet,
    band: ConsumptionBand,
    grid: TimeGrid,
) -> SolutionCurves:
    """Solve all three curves for one scenario.

    The robust curve projects onto the scaled auxiliary set; the
    ambiguity-neutral curve uses the unscaled set (scaling with eta = 0 is
    the identity).
    """
    from .constraints import scale_set

    g = model.risk_aversion
    gamma_hat = scale_set(exposure, 1.0 + profile.eta / g)
    y = integrate_y(model, profile.eta, gamma_hat, band, grid)
    y0 = integrate_y(model, np.zeros_like(profile.eta), exposure, band, grid)
    ytilde = integrate_ytilde(model, profile.eta, gamma_hat, band, y0, grid)
    return SolutionCurves(grid=grid, y=y, y0=y0, ytilde=ytilde)
