"""Online FDR/FWER procedures and a platform-trial simulator."""

from .error_control import (
    ADDIS,
    LOND,
    LORD,
    PROCEDURES,
    SAFFRON,
    ADDISSpending,
    BatchBH,
    BatchPRDS,
    BatchStBH,
    Bonferroni,
    BudgetExhaustedError,
    Uncorrected,
    bh_procedure,
    make_gamma,
    make_procedure,
    storey_bh,
)
from .metrics import MetricsSummary, ProcedureSpec, run_studies, run_study
from .scenarios import MeanSpec, StudyGrid, enumerate_grid, materialize_entry, materialize_means
from .trial import TrialConfig, build_schedule, simulate_trial

__version__ = "0.1.0"

__all__ = [
    "ADDIS", "LOND", "LORD", "PROCEDURES", "SAFFRON", "ADDISSpending", "BatchBH", "BatchPRDS",
    "BatchStBH", "Bonferroni", "BudgetExhaustedError", "Uncorrected", "bh_procedure",
    "make_gamma", "make_procedure", "storey_bh", "MetricsSummary", "ProcedureSpec",
    "run_studies", "run_study", "MeanSpec", "StudyGrid", "enumerate_grid", "materialize_entry",
    "materialize_means", "TrialConfig", "build_schedule", "simulate_trial",
]
