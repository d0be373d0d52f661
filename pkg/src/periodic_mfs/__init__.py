"""Doubly-periodic potential flow past cylinders by the method of fundamental solutions.

Charges are periodic logarithmic potentials built from the Jacobi theta
function theta1, so the computed velocity is exactly doubly periodic.
"""
__version__ = "0.1.0"

from .config import ConfigError, ProblemConfig, config_from_dict, load_config
from .diagnostics import (
    AverageVelocity,
    ConvergenceRecord,
    DecayFit,
    average_velocity,
    boundary_error,
    convergence_sweep,
    fit_decay_rate,
)
from .field import FieldGrid, StreamlineSet, eval_grid, extract_streamlines, render_svg, write_field_csv
from .geometry import (
    CircleObstacle,
    FundamentalRegion,
    SampleSet,
    area_D0,
    grid_samples,
    in_obstacle_array,
    sample_region,
)
from .lattice import Lattice, ReducedArgument, make_lattice, reduce_argument
from .mfs import (
    ChargeConfig,
    FlowModel,
    SolverError,
    assemble_and_solve,
    compute_u,
    compute_uj,
    eval_potential,
    eval_stream,
    eval_velocity,
    place_points,
    potential_jumps,
    solve_flow,
    surface_level,
)
from .theta import (
    ThetaAccuracy,
    ThetaConvergenceError,
    ThetaPoleError,
    log_abs_theta1,
    log_deriv_theta1,
    theta1,
    theta1_prime,
    theta1_product,
)
