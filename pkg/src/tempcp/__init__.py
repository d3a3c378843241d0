"""Hierarchical core-periphery inference for temporal networks.

A temporal network is modeled as layers of independent edges whose
probability depends on the highest-numbered group shared by the two
endpoints; group memberships evolve between layers under a flip-count prior
built from precomputed J integrals.  Posterior samples over assignments and
the number of groups come from Markov-chain Monte Carlo with single-node
toggles, empty-group insertions/removals, and within-layer pattern swaps.
"""

__version__ = "0.1.0"

from .generate import OmegaTable, make_planted_instance, sample_assignment, sample_network
from .groups import (
    GroupAssignment,
    SufficientStats,
    apply_move,
    compute_stats,
    highest_common_group,
    load_assignment,
    save_assignment,
)
from .model import (
    JTable,
    build_jtable,
    cached_jtable,
    log_F,
    log_first_layer_prior,
    log_joint,
    log_k_prior,
    log_marginal_likelihood,
    log_transition,
)
from .moves import MoveKind, MoveProposal
from .network import EdgeListError, TemporalNetwork, load_network, save_network
from .oracle import ExactPosterior, enumerate_posterior, tv_distance, tv_to_empirical
from .render import render_heatmap, render_permuted_adjacency
from .sampler import (
    RunResult,
    SampleRecord,
    SamplerConfig,
    all_records,
    consensus,
    load_records,
    run,
    save_records,
)

__all__ = [
    "__version__",
    "TemporalNetwork",
    "EdgeListError",
    "load_network",
    "save_network",
    "GroupAssignment",
    "SufficientStats",
    "highest_common_group",
    "compute_stats",
    "apply_move",
    "save_assignment",
    "load_assignment",
    "MoveKind",
    "MoveProposal",
    "JTable",
    "build_jtable",
    "cached_jtable",
    "log_marginal_likelihood",
    "log_first_layer_prior",
    "log_transition",
    "log_F",
    "log_k_prior",
    "log_joint",
    "SamplerConfig",
    "SampleRecord",
    "RunResult",
    "run",
    "all_records",
    "consensus",
    "save_records",
    "load_records",
    "OmegaTable",
    "sample_assignment",
    "sample_network",
    "make_planted_instance",
    "ExactPosterior",
    "enumerate_posterior",
    "tv_distance",
    "tv_to_empirical",
    "render_heatmap",
    "render_permuted_adjacency",
]
