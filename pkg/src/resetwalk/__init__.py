"""Random walks under stochastic resetting on finite undirected networks.

Exact spectral/renewal propagators, first-passage and first-hitting
statistics, ergodicity diagnostics, heavy-tailed (Sibuya) resetting, and a
trajectory-level Monte Carlo oracle, plus a CSV-first command line.
"""

from .graphs import (
    EdgeListParseError,
    Graph,
    GraphDiagnostics,
    GraphError,
    GraphValidationError,
    barabasi_albert,
    complete_graph,
    dump_edge_list,
    generate_graph,
    load_edge_list,
    transition_matrix,
    validate,
    watts_strogatz,
)
from .renewal import (
    DefectiveLimitError,
    DeterministicPeriod,
    FiniteSupport,
    Geometric,
    ResetLaw,
    Sibuya,
    backward_recurrence_table,
    state_probability_table,
)
from .propagator import (
    PropagatorSeries,
    RelocationVector,
    SpectralData,
    SteadyState,
    bernoulli_propagator,
    ness,
    periodic_propagator,
    propagate,
    propagate_spectral,
    spectral_decompose,
    stationary_distribution,
)
from .firstpassage import (
    ZERO_RATE_PROXY,
    kemeny,
    mean_relaxation,
    mfpt_matrix,
    optimal_reset_rate,
    s_matrix,
)
from .survival import (
    ErgodicityReport,
    HittingProbability,
    HittingStats,
    KilledSystem,
    MfhtResult,
    SeriesTruncationError,
    ergodicity_check,
    hitting_probability,
    kill,
    mfht,
    moments,
    sibuya_mfht_regularized,
    survival_propagator,
    survival_series,
)
from .montecarlo import (
    EstimateInconclusiveError,
    SimConfig,
    SimEstimate,
    Trajectory,
    estimate,
    simulate_trajectory,
)

__version__ = "0.1.0"
