"""Reconstruction of sparse boson-sampling output distributions from pair marginals."""

from .core import (
    MeasurementVector,
    OccupationPattern,
    ProblemShape,
    SparseVector,
    decode_index,
    encode_pattern,
    validate_distribution,
)
from .measurement import (
    MeasurementOperator,
    ResidualTables,
    adjoint_entry,
    build_residual_tables,
    dense_materialize,
    forward_apply,
    gram_entry,
    row_bin_of_index,
)
from .solvers import SolverConfig, SolveReport, overlap_metric, reconstruct
from .support import AnnealSchedule, ArgmaxResult, abs_argmax, anneal_argmax, brute_argmax, chain_argmax

__all__ = [
    "abs_argmax",
    "adjoint_entry",
    "anneal_argmax",
    "AnnealSchedule",
    "ArgmaxResult",
    "brute_argmax",
    "build_residual_tables",
    "chain_argmax",
    "decode_index",
    "dense_materialize",
    "encode_pattern",
    "forward_apply",
    "gram_entry",
    "MeasurementOperator",
    "MeasurementVector",
    "OccupationPattern",
    "overlap_metric",
    "ProblemShape",
    "reconstruct",
    "ResidualTables",
    "row_bin_of_index",
    "SolverConfig",
    "SolveReport",
    "SparseVector",
    "validate_distribution",
]

__version__ = "0.1.0"
