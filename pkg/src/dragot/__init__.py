"""Semi-discrete optimal transport solvers with scheduled regularization.

The library is organized around a handful of small modules:

  measures       discrete targets, samplable sources, counter-based RNG
  semidual       c-transforms, softened assignments, stochastic gradients
  projection     clip-to-box projections onto admissible potential sets
  solvers        projected averaged SGD loop and its variants
  transport_map  cell assignment, map evaluation, quantile labeling
  ground_truth   benchmark instances with known optimal potentials
  metrics        error functionals, evaluation records, rate fitting
  experiments    flat-file configs and the experiment runner (CLI: dragot)
"""

from .ground_truth import GroundTruthInstance, example1, example2, example3
from .measures import (
    DiscreteMeasure,
    Gaussian,
    ShiftedUniformInterval,
    SourceDistribution,
    UniformBall,
    UniformBox,
    load_measure_csv,
    pairwise_radii,
    save_measure_csv,
)
from .metrics import (
    EvalRecord,
    average_records,
    cost_gap,
    fit_rate,
    map_error,
    potential_error_sq,
    read_records,
    rsc_ratio,
    write_records,
)
from .projection import BoxProjection, cost_box, lipschitz_box, project
from .rng import RngStream
from .semidual import (
    ctransform_hard,
    ctransform_soft,
    mc_objective,
    minibatch_gradient,
    softmax_weights,
    stochastic_gradient,
)
from .solvers import (
    SolverConfig,
    SolverState,
    default_eval_schedule,
    init,
    run,
    solution,
    step,
    weighted_average_update,
)
from .transport_map import (
    CellAssignment,
    assign_cell,
    assign_cells,
    cell_masses,
    map_apply,
    map_apply_batch,
    mk_quantile_labels,
)

__version__ = "0.1.0"
