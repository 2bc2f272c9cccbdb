"""
Core module - Grafo, solver QP, pesos Lasso, GCN y datos
"""

from core.errors import (
    HWGCNError,
    GraphError,
    SupportOverlapError,
    QpError,
    LassoError,
    TrainingError,
    BundleError,
    SplitError,
    FormatError,
)
from core.graph import (
    SparseGraph,
    AffinityMatrix,
    OrderMatrix,
    PowerSupport,
    build_graph,
    affinity,
    normalize_adjacency,
    order_matrices,
    power_support,
    power_supports,
    hadamard_disjoint,
)
from core.qp import QpProblem, QpSolution, SolverConfig, SolverStatus, solve, solve_batch
from core.lasso import (
    ScaleCoefficients,
    WeightMatrix,
    ProportionSchedule,
    scale_coefficients,
    build_row_problem,
    learn_order_weights,
    assemble_filter,
    normalize_filter,
    dump_weights,
    load_weights,
)
from core.model import ModelParams, TrainConfig, TrainResult, forward, backward, adam_step, train, evaluate
from core.data import GraphBundle, SplitSpec, load_bundle, random_split, fixed_split

__all__ = [
    # Errores
    "HWGCNError",
    "GraphError",
    "SupportOverlapError",
    "QpError",
    "LassoError",
    "TrainingError",
    "BundleError",
    "SplitError",
    "FormatError",
    # Grafo
    "SparseGraph",
    "AffinityMatrix",
    "OrderMatrix",
    "PowerSupport",
    "build_graph",
    "affinity",
    "normalize_adjacency",
    "order_matrices",
    "power_support",
    "power_supports",
    "hadamard_disjoint",
    # QP
    "QpProblem",
    "QpSolution",
    "SolverConfig",
    "SolverStatus",
    "solve",
    "solve_batch",
    # Pesos
    "ScaleCoefficients",
    "WeightMatrix",
    "ProportionSchedule",
    "scale_coefficients",
    "build_row_problem",
    "learn_order_weights",
    "assemble_filter",
    "normalize_filter",
    "dump_weights",
    "load_weights",
    # Modelo
    "ModelParams",
    "TrainConfig",
    "TrainResult",
    "forward",
    "backward",
    "adam_step",
    "train",
    "evaluate",
    # Datos
    "GraphBundle",
    "SplitSpec",
    "load_bundle",
    "random_split",
    "fixed_split",
]
