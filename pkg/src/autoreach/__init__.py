"""Reachability analysis of linear time-invariant systems with guaranteed Hausdorff error bounds.

Main entry points: :func:`reach_adaptive` (outer approximations with tuned
parameters), :func:`inner_reach` (matching inner approximations) and
:func:`verify` (reach-avoid verification by refinement).
"""

from .inner import InnerReachResult, cross_polytope, inner_from_outer, inner_reach
from .kernels import BACKEND
from .lp import LinearProgram, LPError, solve_lp
from .matrix_functions import (
    ExpmBundle,
    IntervalMatrix,
    TruncationOrderError,
    curvature_interval_matrices,
    expm,
    expm_remainder,
    particular_solution_const,
    particular_solution_set,
    truncation_order_tuning,
)
from .models import decay_system, electric_circuit
from .reach import (
    BudgetInfeasibleError,
    LinearSystem,
    ReachResult,
    StepRecord,
    budgets,
    choose_zeta,
    error_affine,
    error_interval_inputs,
    error_particular_step,
    error_reduction_step,
    output_reach,
    reach_adaptive,
    reach_fixed,
    tune_dt_regression,
)
from .sets import (
    ConstrainedZonotope,
    EmptySetError,
    Interval,
    Polytope,
    Zonotope,
    box_enclosure_conzono,
    box_enclosure_zono,
    cartesian_product,
    err_radius,
    interval_matrix_times_zonotope,
    lin_comb_enclosure,
    linear_map,
    minkowski_diff_zono_poly,
    minkowski_sum,
    project_polygon,
    reduce_girard,
)
from .simulate import simulate, simulate_random
from .verify import (
    SpecSet,
    Specification,
    Verdict,
    containment_distance,
    containment_distance_conzono,
    containment_distance_zono,
    initial_epsilon_guess,
    intersection_check,
    intersection_diameter,
    verify,
)

__version__ = "0.1.0"
