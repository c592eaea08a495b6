"""Monotone-operator splitting through partial inverses.

Solvers for inclusions 0 in Ax + Bx + N_V(x) and their derived forms:
plain forward-backward-forward, consensus splitting for m-operator sums,
composite primal-dual inclusions with subspaces, and zero-sum games.
"""

from .errors import (
    ConfigurationError,
    DegenerateCertificateError,
    DimensionMismatchError,
    FpifError,
    NoClosedFormError,
    ScheduleError,
    UnsupportedConfigurationError,
)
from .hilbert import (
    LinearMap,
    Point,
    Projector,
    Space,
    project,
    projector_from_basis,
    projector_from_kernel,
    pseudoinverse,
)
from .operators import (
    LipschitzMap,
    PartialInverseView,
    ResolventOp,
    abs_subdifferential,
    affine_set_normal_cone,
    box_normal_cone,
    halfspace_normal_cone,
    inverse_resolvent,
    linear_monotone_map,
    lipschitz_from_callable,
    monotone_linear,
    partial_inverse_apply_singlevalued,
    partial_inverse_resolvent,
    partial_inverse_resolvent_linear,
    partial_sum_resolvent,
    plus_identity,
    point_normal_cone,
    probe_firm_nonexpansive,
    probe_lipschitz,
    probe_monotone,
    quadratic_subdifferential,
    reflect,
    shifted,
    translation_residual,
    zero_map,
    zero_operator,
)
from .tseng import SolveTrace, StepSchedule, StopRule, fejer_check, tseng_solve
from .splitting import (
    InclusionProblem,
    PrimalDualPoint,
    default_gamma,
    fpif_solve,
    reduce_to_dr_check,
    reduce_to_tseng_check,
)
from .sums import SumProblem, sum_solve, two_op_parallel_solve, weighted_consensus
from .primal_dual import (
    PDBlock,
    PDProblem,
    PDSolution,
    coercive_linear_partial_inverse,
    lipschitz_partial_inverse,
    partially_inverted_resolvent,
    pd_reduction_check,
    pd_solve,
    pd_two_op_solve,
    power_iteration_norm,
)
from .games import (
    Box,
    GridGame,
    MatrixGame,
    Orthant,
    SaddleProblem,
    check_gradient_oracle,
    duality_gap,
    grid_duality_gap,
    grid_game_solve,
    matrix_game_saddle_problem,
    matrix_game_solve,
    quadrature_grid,
    saddle_solve,
)

__version__ = "0.1.0"
