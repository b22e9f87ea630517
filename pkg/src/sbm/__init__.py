"""Sparse beta-model for random networks.

Edges are independent Bernoulli with p_ij = logistic(mu + beta_i + beta_j),
where beta is nonnegative and sparse.  The package covers exact likelihood
evaluation, support-constrained maximum likelihood over a box, the
degree-sorted L0 solution path with BIC selection, asymptotic inference,
diagnostic bounds, a reproducible Monte Carlo harness, and the two-stage
take-up regression pipeline.
"""

from .errors import DataFormatError, NonConvergenceError
from .graph import (
    DegreePartition,
    Graph,
    degree_partition,
    eigenvector_centrality,
    load_edge_list,
    sample_sbm,
    write_edge_list,
)
from .harness import (
    MonteCarloConfig,
    MonteCarloSummary,
    degree_distribution,
    model_fit_overlay,
    parse_mc_config,
    run_monte_carlo,
)
from .inference import ErFit, RiskBound, beta_min_threshold, er_mle, excess_risk_bound, theorem1_se
from .likelihood import (
    Moments,
    Reparam,
    SbmParams,
    SuffStats,
    from_dagger,
    gradient,
    hessian,
    moments,
    neg_log_lik,
    population_risk,
    to_dagger,
)
from .path import (
    BruteForceResult,
    PathEntry,
    SolutionPath,
    brute_force_l0,
    information_criterion,
    select,
    solution_path,
)
from .solver import ExistenceCheck, FitConfig, FitResult, existence_check, fit_support
from .analysis import (
    LogitFit,
    NodeRow,
    TakeupModel,
    build_node_table,
    fit_by_group,
    logistic_fit,
    run_takeup_models,
    takeup_table,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
