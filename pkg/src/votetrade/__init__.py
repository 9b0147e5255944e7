"""Nash equilibria, group welfare and Monte Carlo checks for two-issue vote trading."""

from .distributions import (
    DistributionError,
    DomainError,
    JointUtilityDistribution,
    SurveyRecord,
    ValidationReport,
    density,
    kde_from_survey,
    make_builtin,
    map_response,
    transpose,
    validate,
)
from .equilibrium import (
    ConvergenceError,
    EquilibriumSolution,
    SolverOptions,
    StrategyProfile,
    TradingError,
    best_response,
    find_equilibria,
    pivot_probability,
    solve_equilibrium,
    trade_expected_value,
)
from .geometry import Region, RegionMassTable, mass_table, naive_profile, region_mass, wedge_region
from .groupwide import EffectiveQSet, effective_q
from .simulator import SimulationReport, empirical_trade_value, play_committee, simulate
from .welfare import WelfareReport, beneficial_trade_probability, welfare_coefficients

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DistributionError",
    "DomainError",
    "EffectiveQSet",
    "EquilibriumSolution",
    "JointUtilityDistribution",
    "Region",
    "RegionMassTable",
    "SimulationReport",
    "SolverOptions",
    "StrategyProfile",
    "SurveyRecord",
    "TradingError",
    "ValidationReport",
    "WelfareReport",
    "best_response",
    "beneficial_trade_probability",
    "density",
    "effective_q",
    "empirical_trade_value",
    "find_equilibria",
    "kde_from_survey",
    "make_builtin",
    "map_response",
    "mass_table",
    "naive_profile",
    "pivot_probability",
    "play_committee",
    "region_mass",
    "simulate",
    "solve_equilibrium",
    "trade_expected_value",
    "transpose",
    "validate",
    "welfare_coefficients",
    "wedge_region",
]
