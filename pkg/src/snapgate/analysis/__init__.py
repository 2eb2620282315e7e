"""Verification and benchmarking: transition-graph checks, randomized
benchmarking, injected-noise sweeps, and the analytic error budget."""

from .graph import TransitionGraph, GraphEdge, PathIndependenceReport, check_path_independence
from .transparency import TransparencyReport, check_error_transparency
from .rb import RBResult, clifford_ptms, fit_rb_decay, run_rb, run_irb_comparison
from .sweeps import SweepPoint, SweepResult, sweep_injected_noise
from .budget import ErrorBudgetNode, BudgetReport, build_error_budget

__all__ = [
    "TransitionGraph", "GraphEdge", "PathIndependenceReport", "check_path_independence",
    "TransparencyReport", "check_error_transparency",
    "RBResult", "clifford_ptms", "fit_rb_decay", "run_rb", "run_irb_comparison",
    "SweepPoint", "SweepResult", "sweep_injected_noise",
    "ErrorBudgetNode", "BudgetReport", "build_error_budget",
]
