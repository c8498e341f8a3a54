"""Coined quantum walk on the line with a single phase defect at the origin."""

__version__ = "0.1.0"

from .walk import (  # noqa: E402
    NO_DEFECT,
    CoinSpinor,
    NormalizationError,
    PhaseDefect,
    WalkState,
    double_step,
    evolve,
    hadamard_coin,
    initial_state,
    origin_probability,
    position_distribution,
    step,
    step_adjoint,
)
from .bound import (  # noqa: E402
    BoundState,
    Branch,
    OverlapReport,
    amplitude_at,
    bound_state,
    exists,
    lambda_pm,
    materialize,
    omega_of,
    overlap_F,
    total_overlap,
    x_pm,
)
