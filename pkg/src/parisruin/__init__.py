"""Parisian ruin functionals for spectrally negative Levy processes.

The formula layer (:mod:`levy_model`, :mod:`scale_fn`, :mod:`lambda_kernel`,
:mod:`parisian`, :mod:`valuation`) evaluates scale functions, the kernel
``Lambda^(q)`` and the Parisian exit identities by quadrature. The
:mod:`mc_oracle` module simulates the same quantities path by path.
"""

from .errors import (
    ConvergenceFailure,
    DomainError,
    GridTooCoarse,
    MethodUnavailable,
    MixtureDomainError,
    NetProfitViolation,
    ParisRuinError,
    PrecisionWarning,
    RangeWarning,
    TruncationFailure,
)
from .lambda_kernel import LambdaKernel, QuadratureConfig
from .levy_model import BM_DEFAULT, CL_DEFAULT, JumpSpec, LevyModel, MarginalLaw, preset
from .mc_oracle import Estimand, SimConfig, SimEstimate, simulate_cl_exact, simulate_diffusive
from .parisian import (
    ParisianQuery,
    PotentialDensityPoint,
    exit_laplace,
    joint_laplace,
    joint_laplace_inf_b,
    potential_density_full,
    potential_density_pos,
    potential_laplace,
    potential_laplace_inf_b,
    ruin_probability,
)
from .scale_fn import ScaleFunction
from .valuation import ExpMixture, ValuationSpec, value

__version__ = "0.1.0"

__all__ = [
    "BM_DEFAULT",
    "CL_DEFAULT",
    "ConvergenceFailure",
    "DomainError",
    "Estimand",
    "ExpMixture",
    "GridTooCoarse",
    "JumpSpec",
    "LambdaKernel",
    "LevyModel",
    "MarginalLaw",
    "MethodUnavailable",
    "MixtureDomainError",
    "NetProfitViolation",
    "ParisRuinError",
    "ParisianQuery",
    "PotentialDensityPoint",
    "PrecisionWarning",
    "QuadratureConfig",
    "RangeWarning",
    "ScaleFunction",
    "SimConfig",
    "SimEstimate",
    "TruncationFailure",
    "ValuationSpec",
    "exit_laplace",
    "joint_laplace",
    "joint_laplace_inf_b",
    "potential_density_full",
    "potential_density_pos",
    "potential_laplace",
    "potential_laplace_inf_b",
    "preset",
    "ruin_probability",
    "simulate_cl_exact",
    "simulate_diffusive",
    "value",
]
