"""Hypergraph alignment by importance-weighted similarity propagation."""

from .hypercore import (Hypergraph, HypergraphError, HypergraphFormatError, clique_expansion, incidence,
                        normalized_incidence, parse_hypergraph, read_hypergraph, serialize_hypergraph, stats,
                        two_core, write_hypergraph)
from .initsim import CentralityScores, ConvergenceError, block_centrality
from .matching import Matching, dominant_match, greedy_match
from .metrics import (Alignment, accuracy, hyperedge_correctness, incidence_objective, nonexclusive_overlap,
                      overlap_objective, qp_objective)
from .perturb import NoiseSpec, perturb, rigid_hypergraph, sweep
from .propagate import CoolingConfig, SimilarityState, propagate
from .solver import SizeOrderError, SolverConfig, align, align_any

__version__ = "0.1.0"

__all__ = [
    "Alignment", "CentralityScores", "ConvergenceError", "CoolingConfig", "Hypergraph", "HypergraphError",
    "HypergraphFormatError", "Matching", "NoiseSpec", "SimilarityState", "SizeOrderError", "SolverConfig",
    "accuracy", "align", "align_any", "block_centrality", "clique_expansion", "dominant_match", "greedy_match",
    "hyperedge_correctness", "incidence", "incidence_objective", "nonexclusive_overlap", "normalized_incidence",
    "overlap_objective", "parse_hypergraph", "perturb", "propagate", "qp_objective", "read_hypergraph",
    "rigid_hypergraph", "serialize_hypergraph", "stats", "sweep", "two_core", "write_hypergraph",
]
