"""Maximum-weight set packing by column generation, instantiated for
multi-person pose grouping over body-part key-points and for instance
segmentation of crowded cells over super-pixels, with brute-force oracles
and detection-evaluation utilities."""

from .cell import CellInstance, CellProblem, build_cell_master, cell_cost, price_cell
from .errors import (
    CandidateSetTooLarge,
    DimensionMismatch,
    EmptyMatrix,
    InstanceTooLarge,
    InvalidColumn,
    NumericalBreakdown,
    ParseError,
    PartTooLarge,
    SolverError,
    ValidationError,
)
from .master import (
    BoundsReport,
    Column,
    DualVector,
    MasterState,
    SolveConfig,
    TraceRecord,
    TripleRow,
    compute_lower_bound,
    round_greedy,
    run_colgen,
    selection_cost,
    selection_feasible,
    solve_pool_ilp,
)
from .pose import (
    PoseInstance,
    PoseProblem,
    build_pose_master,
    compute_omega_bounds,
    global_pose_cost,
    local_pose_cost,
    price_global,
    price_local,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsReport",
    "CandidateSetTooLarge",
    "CellInstance",
    "CellProblem",
    "Column",
    "DimensionMismatch",
    "DualVector",
    "EmptyMatrix",
    "InstanceTooLarge",
    "InvalidColumn",
    "MasterState",
    "NumericalBreakdown",
    "ParseError",
    "PartTooLarge",
    "PoseInstance",
    "PoseProblem",
    "SolveConfig",
    "SolverError",
    "TraceRecord",
    "TripleRow",
    "ValidationError",
    "build_cell_master",
    "build_pose_master",
    "cell_cost",
    "compute_lower_bound",
    "compute_omega_bounds",
    "global_pose_cost",
    "local_pose_cost",
    "price_cell",
    "price_global",
    "price_local",
    "round_greedy",
    "run_colgen",
    "selection_cost",
    "selection_feasible",
    "solve_pool_ilp",
]
