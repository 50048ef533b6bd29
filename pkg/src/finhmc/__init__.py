"""Finite hidden Markov chains: exact filtering and structural verification."""

from .filters import FilterRun, FilterState, ImpossibleObservation, run_filter
from .finprob import (
    AtomBudgetExceeded,
    FiniteSpace,
    Partition,
    Report,
    enumerate_model,
    filtering_lemma_suite,
    lemma_a1_check,
    theorem_3_5_suite,
)
from .modelio import load_model, model_from_dict, model_to_dict
from .models import (
    HmcModel,
    ModelError,
    SigmaPModel,
    SigmaSModel,
    build_q,
    build_r,
    hmc_to_sigma_p,
    hmc_to_sigma_s,
    invariant_distribution,
    is_hmc_sigma_p,
    is_hmc_sigma_s,
)
from .simulate import RngState, sample

__version__ = "0.1.0"

__all__ = [
    "AtomBudgetExceeded",
    "FilterRun",
    "FilterState",
    "FiniteSpace",
    "HmcModel",
    "ImpossibleObservation",
    "ModelError",
    "Partition",
    "Report",
    "RngState",
    "SigmaPModel",
    "SigmaSModel",
    "build_q",
    "build_r",
    "enumerate_model",
    "filtering_lemma_suite",
    "hmc_to_sigma_p",
    "hmc_to_sigma_s",
    "invariant_distribution",
    "is_hmc_sigma_p",
    "is_hmc_sigma_s",
    "lemma_a1_check",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "run_filter",
    "sample",
    "theorem_3_5_suite",
]
