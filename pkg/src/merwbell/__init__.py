"""Classical path-ensemble random walk on the 3-cube that violates Mermin's
Bell inequality once a measurement step restricts the allowed transitions."""

from .measurement import (
    MERMIN_PAIRS,
    XY,
    YZ,
    ZX,
    BellSum,
    JointDistribution,
    MeasurementOutcome,
    MeasurementPair,
    TrajectoryEnsemble,
    bell_sum_measured,
    bell_sum_unmeasured,
    enumerate_trajectories,
    equality_probability,
    mask_graph,
    measurement_ensemble,
    mermin_bound_check,
)
from .path_ensemble import (
    ArrivalResult,
    CountVector,
    Distribution,
    arrival_distribution,
    evolve,
    merw_transition_matrix,
    suffix_continuation_counts,
    total_paths,
)
from .statespace import (
    FlipGraph,
    PropertyState,
    SiteOrdering,
    WalkConfig,
    build_full_cube,
    build_graph,
    build_standard_graph,
    index_of_state,
    state_of_index,
)

__version__ = "0.1.0"
