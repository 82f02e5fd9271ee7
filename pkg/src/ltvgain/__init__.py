"""Finite-horizon induced gains of linear time-varying systems."""

from .combined import combined_gain
from .errors import (
    ConstructionFailedError,
    DegenerateSignalError,
    DivergenceError,
    InfeasibleGammaError,
    LtvGainError,
    UnboundedGainError,
    UnreachableOutputError,
    ValidationError,
)
from .gramian import GramianTrace, l2e_gain, solve_lde, wc_disturbance_l2e
from .io import load_spec, parse_spec
from .model import LtvSystem, TvMatrixFn, adjoint, evaluate, validate
from .power import adjoint_response, forward_gain, power_iterate, simulate
from .rde import (
    GainBounds,
    bisect,
    construct_lower_bound,
    disturbance_from_incomplete_rde,
    initial_bounds,
    rde_coefficients,
    solve_rde,
)
from .signal import Signal, inner_product, l2_norm, normalize, resample

__version__ = "0.1.0"

__all__ = [
    "combined_gain",
    "ConstructionFailedError",
    "DegenerateSignalError",
    "DivergenceError",
    "InfeasibleGammaError",
    "LtvGainError",
    "UnboundedGainError",
    "UnreachableOutputError",
    "ValidationError",
    "GramianTrace",
    "l2e_gain",
    "solve_lde",
    "wc_disturbance_l2e",
    "load_spec",
    "parse_spec",
    "LtvSystem",
    "TvMatrixFn",
    "adjoint",
    "evaluate",
    "validate",
    "adjoint_response",
    "forward_gain",
    "power_iterate",
    "simulate",
    "GainBounds",
    "bisect",
    "construct_lower_bound",
    "disturbance_from_incomplete_rde",
    "initial_bounds",
    "rde_coefficients",
    "solve_rde",
    "Signal",
    "inner_product",
    "l2_norm",
    "normalize",
    "resample",
]
