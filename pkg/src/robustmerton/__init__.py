"""Robust optimal investment-consumption under ambiguity aversion and constraints."""

from .constraints import (
    Box,
    ConsumptionBand,
    ExposureSet,
    FullSpace,
    NonnegativeOrthant,
    clamp_consumption,
    distance_sq,
    project,
    scale_set,
)
from .curves import (
    PositivityLossError,
    SolutionCurves,
    TimeGrid,
    closed_form_ytilde,
    driver_f,
    driver_f0,
    driver_ftilde,
    integrate_y,
    integrate_ytilde,
    q_coefficient,
    qtilde_coefficient,
    solve_curves,
)
from .market import (
    AmbiguityProfile,
    MarketModel,
    SingularCovarianceError,
    StepFunction,
    covariance,
    market_price_of_risk,
    validate,
)
from .simulate import (
    ConsistencyReport,
    ObjectiveEstimate,
    PathBatch,
    SimConfig,
    check_value_consistency,
    estimate_objective,
    simulate_wealth,
)
from .strategy import (
    CaseSpec,
    MonotonicityViolationError,
    OrderingViolationError,
    StrategySnapshot,
    UtilityLossRangeError,
    eta_sweep,
    no_short_sale_strategy,
    optimal_consumption,
    optimal_distortion,
    optimal_exposure,
    run_case_suite,
    suboptimal_distortion,
    table_cases,
    utility_loss,
    value_function,
)

__version__ = "0.1.0"
