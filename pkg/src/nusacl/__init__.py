"""Null-space constrained low-rank adaptation for continual learning.

The cycle per task: take the SVD of each adapted weight matrix, identify
the low-energy (intrinsic null) subspace, train a small core matrix between
frozen tail bases, and merge the update back — no parameter growth, with a
runtime-checkable bound on the interference with existing weights.
"""

from .adapter import (
    Adapter,
    VARIANTS,
    delta_w,
    from_plan,
    from_subspace,
    interference,
    interference_trace,
    merge,
    plain_lowrank,
)
from .continual import (
    CycleConfig,
    RunReport,
    TaskStream,
    generate_stream,
    metrics,
    run_experiment,
    run_task_cycle,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateSpectrumError,
    NusaError,
    ProtocolError,
    ProvenanceError,
    ShapeError,
)
from .linalg import SvdFactorization, frobenius_inner, frobenius_norm, matrix, svd_thin
from .nn import Model, init_model, loss_and_grads
from .nullspace import (
    NullSpacePlan,
    SpectralSnapshot,
    plan_nullspace,
    principal_dim,
    select_subspace,
    spectral_snapshot,
)

__version__ = "0.1.0"

__all__ = [
    "Adapter",
    "ConfigError",
    "ConvergenceError",
    "CycleConfig",
    "DataError",
    "DegenerateSpectrumError",
    "Model",
    "NullSpacePlan",
    "NusaError",
    "ProtocolError",
    "ProvenanceError",
    "RunReport",
    "ShapeError",
    "SpectralSnapshot",
    "SvdFactorization",
    "TaskStream",
    "VARIANTS",
    "delta_w",
    "frobenius_inner",
    "frobenius_norm",
    "from_plan",
    "from_subspace",
    "generate_stream",
    "init_model",
    "interference",
    "interference_trace",
    "loss_and_grads",
    "matrix",
    "merge",
    "metrics",
    "plain_lowrank",
    "plan_nullspace",
    "principal_dim",
    "run_experiment",
    "run_task_cycle",
    "select_subspace",
    "spectral_snapshot",
    "svd_thin",
]
