"""Probe-calibrated peer evaluation with marginal-contribution payments.

Evaluators grade a shuffled mix of instructor-graded probe papers and
ungraded papers. Their bias and reliability are estimated from the probes,
paper scores are the reliability-weighted de-biased mean of the reports, and
each evaluator is paid for their marginal contribution to score accuracy. An
in-process hash-chained ledger runs the exam lifecycle around it.
"""
from .assignment import AssignmentPlan, InfeasibleAssignment, build_assignment, co_evaluators
from .estimation import EstimatedParams, estimate_params
from .kernels import BACKEND
from .pg1_model import EvaluatorStrategy, Prior, RngStream, sample_report, sample_true_scores
from .scoring import iswdm, resolve_regrades, transfers, welfare

__version__ = "0.1.0"

__all__ = [
    "AssignmentPlan",
    "BACKEND",
    "EstimatedParams",
    "EvaluatorStrategy",
    "InfeasibleAssignment",
    "Prior",
    "RngStream",
    "build_assignment",
    "co_evaluators",
    "estimate_params",
    "iswdm",
    "resolve_regrades",
    "sample_report",
    "sample_true_scores",
    "transfers",
    "welfare",
]
