"""Leggett-Garg quasi-probabilities for coarse-grained Gaussian fields."""

from .errors import (
    AllCellsFailed,
    BranchAmbiguity,
    ConfigError,
    DegenerateKernel,
    LGFieldError,
    OverflowDomain,
    QuadratureFailure,
)
from .kernels import FieldModel, KernelSet, StateSpec, Variant, build_kernels, oracle_kernels
from .quasiprob import (
    Engine,
    QuadratureConfig,
    QuasiProbQuery,
    QuasiProbResult,
    SignThreshold,
    WindowBand,
    lg_correlators,
    qp_sign_cartesian,
    qp_sign_polar,
    qp_window,
    quasi_prob,
    single_time_probability,
)

__version__ = "0.1.0"

__all__ = [
    "AllCellsFailed",
    "BranchAmbiguity",
    "ConfigError",
    "DegenerateKernel",
    "Engine",
    "FieldModel",
    "KernelSet",
    "LGFieldError",
    "OverflowDomain",
    "QuadratureConfig",
    "QuadratureFailure",
    "QuasiProbQuery",
    "QuasiProbResult",
    "SignThreshold",
    "StateSpec",
    "Variant",
    "WindowBand",
    "build_kernels",
    "lg_correlators",
    "oracle_kernels",
    "qp_sign_cartesian",
    "qp_sign_polar",
    "qp_window",
    "quasi_prob",
    "single_time_probability",
]
