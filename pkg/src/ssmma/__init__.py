"""Self-similar stable mixed moving averages: kernels, flow classification,
decomposition, simulation and verification."""

__version__ = "0.1.0"

from .classifier import LABELS, ClassificationReport, Thresholds, classify_kernel, classify_point
from .decomposer import additivity_check, decompose
from .estimators import FlowComponentClassifier, FourComponentDecomposer
from .kernels import (REGISTRY, GridSpec, KernelSpec, make_dissipative_synthetic,
                      make_fourth_kind, make_lfsm_periodic_concat, make_mixed_lfsm,
                      make_periodic_example)
from .quadrature import LinearCombination, alpha_norm, cf_exponent
from .simulator import sample_paths
from .stable import sample_sas

__all__ = [
    "LABELS", "ClassificationReport", "Thresholds", "classify_kernel", "classify_point",
    "additivity_check", "decompose", "FlowComponentClassifier", "FourComponentDecomposer",
    "REGISTRY", "GridSpec", "KernelSpec", "make_dissipative_synthetic", "make_fourth_kind",
    "make_lfsm_periodic_concat", "make_mixed_lfsm", "make_periodic_example",
    "LinearCombination", "alpha_norm", "cf_exponent", "sample_paths", "sample_sas",
]
