"""Walrasian equilibria of exchange economies as roots of the economy's potential."""

from .economy import (
    CES,
    CobbDouglas,
    Economy,
    LinearAggregate,
    SeparableIsoelastic,
    UtilitySpec,
    fenchel_demand,
    fenchel_dual,
    grad_utility,
    income_from_weight,
    indirect_utility,
    lambda_of_income,
    marshallian_demand,
    normalize_prices,
    utility,
)
from .errors import (
    ConvergenceError,
    DomainError,
    InfeasibleError,
    NoSolutionFound,
    TieAmbiguityWarning,
    TieError,
    UnsupportedEconomyError,
)
from .negishi import NegishiConfig, boundary_inwardness_check, excess_budget, solve_equilibrium_weights
from .potential import (
    EquilibriumPoint,
    WelfareWeights,
    dual_value,
    equilibrium_from_weights,
    maximize_welfare,
    minimize_dual,
    potential,
    weighted_utility,
    welfare_gradient,
)

__version__ = "0.1.0"
