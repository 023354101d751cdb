"""Optimal strategies, value function, utility loss and comparison suites.

Maps solved value curves to the robust optimal exposure/consumption pair,
the worst-case distortion, the strategy an uncertainty-ignoring investor
would follow, and the comparative-statics suites over constraint cases and
ambiguity weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import (
    ConsumptionBand,
    ExposureSet,
    FullSpace,
    NonnegativeOrthant,
    clamp_consumption,
    project,
    scale_set,
)
from .curves import SolutionCurves, TimeGrid, solve_curves
from .market import AmbiguityProfile, MarketModel, market_price_of_risk


class OrderingViolationError(AssertionError):
    """A constraint-comparison inequality failed pointwise."""


class MonotonicityViolationError(AssertionError):
    """A curve that must be monotone in an ambiguity weight is not."""


class UtilityLossRangeError(ValueError):
    """Utility loss left [0, 1]; the two curves are inconsistent."""


@dataclass(frozen=True)
class StrategySnapshot:
    """Strategy and diagnostics at one time point."""

    t: float
    p_star: np.ndarray
    c_star: float
    phi_star: np.ndarray
    value: float
    loss: float


def _as_eta(eta) -> np.ndarray:
    if isinstance(eta, AmbiguityProfile):
        return eta.eta
    return np.atleast_1d(np.asarray(eta, dtype=float))


def optimal_exposure(theta, eta, gamma: float, gamma_hat: ExposureSet, y: float, z) -> np.ndarray:
    """Robust optimal risk exposure.

    Scales into the auxiliary set, projects, and scales back; the
    deterministic case passes z = 0.
    """
    theta = np.asarray(theta, dtype=float)
    eta = _as_eta(eta)
    z = np.asarray(z, dtype=float)
    inv_root = 1.0 / np.sqrt(1.0 + eta / gamma)
    arg = inv_root * (theta / gamma + (1.0 - eta / (1.0 - gamma)) * z / y)
    return inv_root * project(gamma_hat, arg)


def optimal_consumption(y: float, band: ConsumptionBand) -> float:
    """Robust optimal consumption rate: 1/y clamped into the band."""
    return clamp_consumption(band, 1.0 / y)


def optimal_distortion(theta, eta, gamma: float, gamma_hat: ExposureSet, y: float, z) -> np.ndarray:
    """Worst-case drift distortion; equals -eta * (gamma/(1-gamma) z/y + p*)."""
    eta = _as_eta(eta)
    z = np.asarray(z, dtype=float)
    p_star = optimal_exposure(theta, eta, gamma, gamma_hat, y, z)
    return -gamma * eta / (1.0 - gamma) * z / y - eta * p_star


def no_short_sale_strategy(theta, eta, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form exposure and distortion under the no-short-selling cone.

    Equals the general path with the nonnegative orthant and z = 0.
    """
    theta = np.asarray(theta, dtype=float)
    eta = _as_eta(eta)
    positive = np.maximum(theta, 0.0)
    p_star = positive / (gamma + eta)
    phi_star = (1.0 / (1.0 + eta / gamma) - 1.0) * positive
    return p_star, phi_star


def suboptimal_distortion(
    theta, eta, gamma: float, gamma_hat: ExposureSet, ytilde: float, ztilde, y0: float, z0
) -> np.ndarray:
    """Worst-case distortion faced by an investor who ignored model uncertainty."""
    theta = np.asarray(theta, dtype=float)
    eta = _as_eta(eta)
    ztilde = np.asarray(ztilde, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    neutral_exposure = project(gamma_hat, theta / gamma + z0 / y0)
    return -gamma * eta / (1.0 - gamma) * ztilde / ytilde - eta * neutral_exposure


def value_function(x, y, gamma: float):
    """Indirect utility x**(1-gamma)/(1-gamma) * y**gamma."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = x ** (1.0 - gamma) / (1.0 - gamma) * y ** gamma
    return float(out) if out.ndim == 0 else out

LOSS_SLACK = 1e-8


def utility_loss(y, ytilde, gamma: float):
    """Fraction of initial wealth forfeited by ignoring model uncertainty.

    1 - (ytilde/y)**(gamma/(1-gamma)), always in [0, 1]; values outside
    [-1e-8, 1+1e-8] signal inconsistent curves and raise.
    """
    y = np.asarray(y, dtype=float)
    ytilde = np.asarray(ytilde, dtype=float)
    loss = 1.0 - (ytilde / y) ** (gamma / (1.0 - gamma))
    low = float(np.min(loss))
    high = float(np.max(loss))
    if low < -LOSS_SLACK or high > 1.0 + LOSS_SLACK:
        raise UtilityLossRangeError(
            f"utility loss out of [0, 1] (range [{low:.3e}, {high:.3e}])"
        )
    return float(loss) if loss.ndim == 0 else loss


def snapshot(
    model: MarketModel,
    profile: AmbiguityProfile,
    exposure: ExposureSet,
    band: ConsumptionBand,
    curves: SolutionCurves,
    node: int,
    wealth: float = 1.0,
) -> StrategySnapshot:
    """Assemble the full strategy snapshot at one grid node."""
    g = model.risk_aversion
    t = curves.grid.nodes[node]
    theta = market_price_of_risk(model, t)
    gamma_hat = scale_set(exposure, 1.0 + profile.eta / g)
    zeros = np.zeros_like(profile.eta)
    y = curves.y[node]
    return StrategySnapshot(
        t=t,
        p_star=optimal_exposure(theta, profile.eta, g, gamma_hat, y, zeros),
        c_star=optimal_consumption(y, band),
        phi_star=optimal_distortion(theta, profile.eta, g, gamma_hat, y, zeros),
        value=value_function(wealth, y, g),
        loss=float(utility_loss(y, curves.ytilde[node], g)),
    )


@dataclass(frozen=True)
class CaseSpec:
    """One constraint combination in a comparison suite."""

    name: str
    exposure: ExposureSet
    band: ConsumptionBand


def table_cases(ceiling: float = 1.0, floor: float = 0.2) -> list[CaseSpec]:
    """The six constraint combinations used in the comparison experiments."""
    orthant = NonnegativeOrthant()
    full = FullSpace()
    unbounded = ConsumptionBand()
    return [
        CaseSpec("C1", orthant, ConsumptionBand(0.0, ceiling)),
        CaseSpec("C2", orthant, ConsumptionBand(floor, math.inf)),
        CaseSpec("C3", orthant, unbounded),
        CaseSpec("C4", full, ConsumptionBand(0.0, ceiling)),
        CaseSpec("C5", full, ConsumptionBand(floor, math.inf)),
        CaseSpec("NC", full, unbounded),
    ]


@dataclass
class CaseResult:
    """Curves and diagnostics for one constraint case."""

    spec: CaseSpec
    curves: SolutionCurves
    c_star: np.ndarray
    value_at_1: np.ndarray
    loss: np.ndarray
    p_star: np.ndarray
    phi_star: np.ndarray


def solve_case(
    model: MarketModel, profile: AmbiguityProfile, spec: CaseSpec, grid: TimeGrid
) -> CaseResult:
    g = model.risk_aversion
    curves = solve_curves(model, profile, spec.exposure, spec.band, grid)
    c_star = np.array([optimal_consumption(y, spec.band) for y in curves.y])
    value_at_1 = value_function(1.0, curves.y, g)
    loss = utility_loss(curves.y, curves.ytilde, g)
    snap = snapshot(model, profile, spec.exposure, spec.band, curves, node=0)
    return CaseResult(spec, curves, c_star, value_at_1, loss, snap.p_star, snap.phi_star)


@dataclass(frozen=True)
class OrderingCheck:
    name: str
    passed: bool
    worst_gap: float


ORDERING_SLACK = 1e-8


def ordering_checks(results: dict[str, CaseResult], gamma: float) -> list[OrderingCheck]:
    """Evaluate every constraint-comparison inequality on the six standard cases."""
    lower_risk = gamma < 1.0
    consumption_pairs = [("C1", "C4"), ("C2", "C5"), ("C3", "NC")]
    checks: list[tuple[str, np.ndarray, np.ndarray]] = []
    for small, large in consumption_pairs:
        if lower_risk:
            label = f"c*_{small} >= c*_{large}"
            checks.append((label, results[large].c_star, results[small].c_star))
        else:
            label = f"c*_{small} <= c*_{large}"
            checks.append((label, results[small].c_star, results[large].c_star))
    for small, large in consumption_pairs:
        checks.append((f"V_{small} <= V_{large}", results[small].value_at_1, results[large].value_at_1))
    value_pairs = [("C3", "C1"), ("C2", "C3"), ("NC", "C4"), ("C5", "NC")]
    for small, large in value_pairs:
        if lower_risk:
            small, large = large, small
        checks.append((f"V_{small} <= V_{large}", results[small].value_at_1, results[large].value_at_1))

    outcomes = []
    for label, lhs, rhs in checks:
        worst = float(np.max(lhs - rhs))
        outcomes.append(OrderingCheck(label, worst <= ORDERING_SLACK, worst))
    return outcomes


def run_case_suite(
    model: MarketModel,
    profile: AmbiguityProfile,
    cases: list[CaseSpec] | None = None,
    grid: TimeGrid | None = None,
) -> tuple[dict[str, CaseResult], list[OrderingCheck]]:
    """Solve every case and assert the constraint-comparison orderings.

    Orderings are only checked when all six standard case names are present;
    a failed inequality raises :class:`OrderingViolationError` naming it.
    """
    if cases is None:
        cases = table_cases()
    if grid is None:
        grid = TimeGrid(model.horizon, 3000)
    results = {spec.name: solve_case(model, profile, spec, grid) for spec in cases}

    checks: list[OrderingCheck] = []
    if {"C1", "C2", "C3", "C4", "C5", "NC"} <= results.keys():
        checks = ordering_checks(results, model.risk_aversion)
        failed = [c for c in checks if not c.passed]
        if failed:
            raise OrderingViolationError(
                "violated orderings: "
                + ", ".join(f"{c.name} (gap {c.worst_gap:.3e})" for c in failed)
            )
    return results, checks


@dataclass
class SweepResult:
    """Consumption and value curves for each swept ambiguity weight."""

    index: int
    values: list[float]
    grid: TimeGrid
    c_star: np.ndarray
    value_at_1: np.ndarray


def sweep_curves(
    model: MarketModel,
    base_eta,
    index: int,
    values,
    band: ConsumptionBand | None = None,
    grid: TimeGrid | None = None,
) -> SweepResult:
    """Solve the curves for each value of one ambiguity weight (orthant constraint)."""
    base_eta = _as_eta(base_eta)
    if band is None:
        band = ConsumptionBand()
    if grid is None:
        grid = TimeGrid(model.horizon, 3000)
    g = model.risk_aversion
    orthant = NonnegativeOrthant()

    c_rows = []
    v_rows = []
    for value in values:
        eta = base_eta.copy()
        eta[index] = value
        curves = solve_curves(model, AmbiguityProfile(eta), orthant, band, grid)
        c_rows.append(np.array([optimal_consumption(y, band) for y in curves.y]))
        v_rows.append(value_function(1.0, curves.y, g))
    return SweepResult(index, [float(v) for v in values], grid, np.vstack(c_rows), np.vstack(v_rows))


def sweep_checks(result: SweepResult, gamma: float) -> list[OrderingCheck]:
    """Pointwise monotonicity of c* and V(t, 1) in the swept weight."""
    order = np.argsort(result.values)
    c_steps = np.diff(result.c_star[order], axis=0)
    v_steps = np.diff(result.value_at_1[order], axis=0)
    if gamma > 1.0:
        worst_c = float(np.max(c_steps)) if c_steps.size else 0.0
        c_label = "c* nonincreasing in eta"
    else:
        worst_c = float(-np.min(c_steps)) if c_steps.size else 0.0
        c_label = "c* nondecreasing in eta"
    worst_v = float(np.max(v_steps)) if v_steps.size else 0.0
    return [
        OrderingCheck(c_label, worst_c <= ORDERING_SLACK, worst_c),
        OrderingCheck("V(t,1) nonincreasing in eta", worst_v <= ORDERING_SLACK, worst_v),
    ]


def eta_sweep(
    model: MarketModel,
    base_eta,
    index: int,
    values,
    band: ConsumptionBand | None = None,
    grid: TimeGrid | None = None,
) -> SweepResult:
    """Sweep one ambiguity weight under the no-short-selling constraint.

    Asserts that c*(t) is pointwise monotone in the weight (direction set by
    the risk aversion) and that V(t, 1) is pointwise nonincreasing.
    """
    result = sweep_curves(model, base_eta, index, values, band, grid)
    failed = [c for c in sweep_checks(result, model.risk_aversion) if not c.passed]
    if failed:
        raise MonotonicityViolationError(
            "; ".join(f"{c.name} violated (gap {c.worst_gap:.3e})" for c in failed)
        )
    return result
