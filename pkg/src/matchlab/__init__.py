"""Stable-matching laboratory: continuum cutoffs and finite-market simulation.

Two evaluation modes share every other market primitive: under "mono" all
firms score an applicant with one shared noisy signal; under "poly" each firm
draws its own. The continuum module solves market-clearing score cutoffs and
welfare integrals; the simulation modules run finite deferred-acceptance
markets with configurable preferences and application portfolios.
"""

from .access import AccessDistribution, Strategy, parse_kappa, parse_strategy
from .continuum import (
    CutoffSolution,
    MarketSpec,
    MODES,
    MONO,
    POLY,
    aggregate_demand,
    expected_rank_poly,
    firm_welfare,
    match_probability,
    optimal_firm_welfare,
    solve_cutoff,
    top_choice_probability,
    v_s_threshold,
)
from .distributions import (
    Distribution,
    cdf,
    concentration_curve,
    format_distribution,
    gaussian,
    max_order_summary,
    parse_distribution,
    pdf,
    point_mass,
    pr_max_exceeds,
    quantile,
    sample,
    uniform,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ResultRow,
    parse_config,
    preset,
    preset_names,
    read_csv_rows,
    run_correlated_suite,
    run_experiment,
    summarize,
    write_csv,
    write_outputs,
)
from .market_sim import (
    FiniteMarket,
    MatchMetrics,
    Matching,
    compute_metrics,
    deferred_acceptance,
    generate_market,
    verify_stability,
)
from .preferences import PreferenceModel, PreferenceProfile, generate_preferences
from .seeds import stream

__version__ = "0.1.0"

__all__ = [
    "AccessDistribution",
    "ConfigError",
    "CutoffSolution",
    "Distribution",
    "ExperimentConfig",
    "FiniteMarket",
    "MODES",
    "MONO",
    "POLY",
    "MarketSpec",
    "MatchMetrics",
    "Matching",
    "PreferenceModel",
    "PreferenceProfile",
    "ResultRow",
    "Strategy",
    "aggregate_demand",
    "cdf",
    "compute_metrics",
    "concentration_curve",
    "deferred_acceptance",
    "expected_rank_poly",
    "firm_welfare",
    "format_distribution",
    "gaussian",
    "generate_market",
    "generate_preferences",
    "match_probability",
    "max_order_summary",
    "optimal_firm_welfare",
    "parse_config",
    "parse_distribution",
    "parse_kappa",
    "parse_strategy",
    "pdf",
    "point_mass",
    "pr_max_exceeds",
    "preset",
    "preset_names",
    "quantile",
    "read_csv_rows",
    "run_correlated_suite",
    "run_experiment",
    "sample",
    "solve_cutoff",
    "stream",
    "summarize",
    "top_choice_probability",
    "uniform",
    "v_s_threshold",
    "verify_stability",
    "write_csv",
    "write_outputs",
    "__version__",
]
