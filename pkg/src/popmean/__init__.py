"""Belief aggregation from population means.

The package recovers an unknown state of the world from a population's
first-order beliefs plus a handful of second-order reports (expectations of
the population-average belief), and contrasts that procedure with
surprisingly-popular style mechanisms.  It also provides finite
belief-hierarchy tooling showing what any finite-order elicitation must miss.
"""
from .aggregate import (
    AggregationOutcome,
    SpVerdict,
    action_pmba,
    limited_info_pmba,
    match_state,
    monte_carlo_tolerance,
    most_surprisingly_popular,
    pmba_binary,
    pmba_multi,
    prediction_normalized_votes,
    solve_state_means,
    sp_sets,
    surprisingly_popular,
)
from .errors import (
    AmbiguousMatchError,
    CompoundSpaceError,
    DegenerateGroupingError,
    DegenerateReporterError,
    HerdingError,
    IncompatibleProfileError,
    MisspecOverlapError,
    NoSurpriseError,
    PopmeanError,
    RankDeficientError,
    UndefinedNormalizationError,
    UnidentifiableHierarchyError,
    UnreachableSignalError,
)
from .hierarchy import (
    LIPMAN_ANCHOR,
    OrderKTypes,
    PartitionModel,
    RecoveryResult,
    build_lipman,
    first_disagreement_order,
    full_info_posterior,
    full_info_posterior_exact,
    hierarchies_equal_up_to,
    kth_order_types,
    lipman_constant,
    load_partition_model,
    make_partition_model,
    recover_from_hierarchy,
    save_partition_model,
)
from .incentives import (
    PaymentSchedule,
    ScoringRule,
    TruthfulnessReport,
    score,
    settle,
    simplex_grid,
    truthfulness_check,
)
from .model import (
    AssumptionReport,
    BeliefDistribution,
    BeliefVector,
    ExpectedBeliefMatrix,
    InfoStructure,
    StateSpace,
    as_belief,
    bayes_posterior,
    belief_distribution,
    binary_symmetric,
    check_assumptions,
    expected_alpha,
    expected_belief_matrix,
    load_structure,
    posterior_matrix,
    product_lift,
    save_structure,
    tv_distance,
)
from .population import (
    AgentReport,
    CorrelationSpec,
    MisspecSpec,
    PopulationDraw,
    expected_vote_shares,
    misspecified_alpha,
    misspecified_alpha_batch,
    sample_population,
    truthful_alpha,
    vote,
    vote_share_matrix,
    write_population_csv,
)

__version__ = "0.1.0"
