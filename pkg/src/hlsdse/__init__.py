"""Pragma design-space exploration and dataset construction for HLS kernels."""

from .analyzer import KernelInfo, SourceUnit, analyze
from .bayes import ExplorerBudget, cost, explore_bayesian
from .design_space import (UNBOUNDED, EnumerationBudget, build_design_tree, enumerate_designs,
                           generate_factors)
from .metrics import DesignPoint, adrs, pareto_front, tertile_labels
from .pragmas import PragmaConfig, enumerate_sites, insert_pragmas, validate_config
from .qor import DEFAULT_PARTS, analytic_evaluate, compute_aru

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PARTS", "DesignPoint", "EnumerationBudget", "ExplorerBudget", "KernelInfo",
    "PragmaConfig", "SourceUnit", "UNBOUNDED", "adrs", "analytic_evaluate", "analyze",
    "build_design_tree", "compute_aru", "cost", "enumerate_designs", "enumerate_sites",
    "explore_bayesian", "generate_factors", "insert_pragmas", "pareto_front",
    "tertile_labels", "validate_config",
]
