"""Cover-time estimation for dense graphs (minimum degree at least theta * n)."""

from .collapsed import CollapsedChain, build_collapsed, collapsed_conductance_bound, excursion_weights
from .errors import (
    AbsorbingEscape,
    BudgetError,
    CoverTimeError,
    DegenerateSplit,
    HypothesisViolation,
    InputError,
    InvalidCutError,
    InvalidGraphError,
    MixingTooSlow,
    ParseError,
    PartitionDivergence,
    PrecisionError,
    RegimeError,
    SolverFailure,
    TpiViolation,
)
from .estimator import (
    CoverReport,
    EstimatorConfig,
    TStar,
    estimate,
    expected_max_kappa,
    solve_tstar,
    theorem1_estimate,
    theorem2_estimate,
    theorem3_bounds,
)
from .graph import (
    Cut,
    DensityWitness,
    Graph,
    complete,
    cut_conductance,
    dense_random,
    dumbbell,
    generate,
    min_degree_ratio,
    parse_edge_list,
    read_edge_list,
    regular_circulant,
    stationary,
    write_edge_list,
)
from .markov import (
    ChainMatrices,
    FirstVisitEstimate,
    MixingCertificate,
    build_chain,
    first_visit_estimate,
    mixing_time,
    return_sum,
    taboo_nonvisit_prob,
)
from .partition import Partition, partition, verify_partition
from .spectral import CutSearchResult, best_cut, second_eigenpair
from .walker import TrialStats, WalkConfig, empirical_collapsed, measure_kappa, simulate_cover

__version__ = "0.1.0"
