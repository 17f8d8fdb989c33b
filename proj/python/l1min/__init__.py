"""Sparse recovery by l1 minimization: solvers, generators and benchmarks."""

from ._core import (
    InvalidArgument,
    NumericalError,
    algorithms,
    align_solve,
    cab_solve,
    gen_problem,
    generator_name,
    homotopy_path,
    kkt_residual,
    objective,
    run_cli,
    soft_threshold,
    solve,
)

__all__ = [
    "InvalidArgument",
    "NumericalError",
    "algorithms",
    "align_solve",
    "cab_solve",
    "gen_problem",
    "generator_name",
    "homotopy_path",
    "kkt_residual",
    "objective",
    "run_cli",
    "soft_threshold",
    "solve",
]
