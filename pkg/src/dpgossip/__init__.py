"""Decentralized momentum SGD with random activation, top-k sparsified
gossip, and a Gaussian differential-privacy accountant."""

from .bounds import (
    BoundInputs,
    consensus_bound,
    consensus_contraction,
    corollary1_rate,
    momentum_bound,
    theorem2_bound,
    tuned_alpha,
)
from .compress import SparseUpdate, clip_per_coordinate, contraction_gap, top_k
from .engine import (
    AgentState,
    IterationTrace,
    RunConfig,
    RunMetrics,
    Simulation,
    activation_draw,
    agent_step,
    recommended_gamma,
    replica_apply,
    run,
)
from .graph import Topology, WeightMatrix, laplacian_weights, ring_chords, spectral_quantities
from .privacy import (
    AccountingLedger,
    BudgetError,
    PrivacyBudget,
    amplify_by_subsampling,
    calibrate_sigma,
    compose_advanced,
    gaussian_sensitivity,
    per_step_epsilon,
    sample_gaussian_noise,
    stream,
    verify_budget,
)
from .problems import (
    Dataset,
    LogisticProblem,
    QuadraticProblem,
    load_svmlight,
    logistic_grad,
    logistic_loss,
    quadratic_problem,
    save_svmlight,
    solve_reference,
    synthetic_logistic_data,
)

__version__ = "0.1.0"
