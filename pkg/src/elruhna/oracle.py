"""Exhaustive optimisers for tiny instances, used as test oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .hypercore import Hypergraph
from .metrics import Alignment, hyperedge_correctness, incidence_objective, nonexclusive_overlap

MAX_VERTICES = 8
MAX_EDGES = 6
MAX_ASSIGN = 7


class OracleSizeError(ValueError):
    """Instance too large for exhaustive search."""


def brute_force_vertex_align(HQ: Hypergraph, HD: Hypergraph, objective: str = "EC") -> tuple[float, dict[int, int]]:
    """Best injective vertex map for ``'EC'`` (hyperedge correctness) or ``'XO'``."""
    if not HQ.n <= HD.n <= MAX_VERTICES:
        raise OracleSizeError(f"need n_Q <= n_D <= {MAX_VERTICES}, got {HQ.n}, {HD.n}")
    score = {"EC": hyperedge_correctness, "XO": nonexclusive_overlap}[objective.upper()]
    best_val, best_map = -1.0, {}
    for image in itertools.permutations(range(HD.n), HQ.n):
        vmap = dict(enumerate(image))
        val = score(HQ, HD, Alignment(vmap))
        if val > best_val:
            best_val, best_map = val, vmap
    return best_val, best_map


def brute_force_edge_align(HQ: Hypergraph, HD: Hypergraph, sigma_V) -> tuple[float, dict[int, int]]:
    """Best injective hyperedge map for the incidence objective under a fixed vertex map.

    Query hyperedges may stay unmapped when ``m_Q > m_D``.
    """
    if HQ.m > MAX_EDGES or HD.m > MAX_EDGES:
        raise OracleSizeError(f"need m_Q, m_D <= {MAX_EDGES}, got {HQ.m}, {HD.m}")
    vmap = sigma_V.vertex_map if isinstance(sigma_V, Alignment) else dict(sigma_V)
    # gain[q][d]: normalised overlap of query edge q placed on data edge d
    gain = [[incidence_objective(Hypergraph(HQ.n, (e,)), Hypergraph(HD.n, (f,)), Alignment(vmap, {0: 0}))
             for f in HD.edges] for e in HQ.edges]
    best = [-1.0, {}]

    def extend(q: int, used: set, total: float, emap: dict) -> None:
        if q == HQ.m:
            if total > best[0]:
                best[0], best[1] = total, dict(emap)
            return
        for d in range(HD.m):
            if d not in used:
                used.add(d)
                emap[q] = d
                extend(q + 1, used, total + gain[q][d], emap)
                del emap[q]
                used.discard(d)
        extend(q + 1, used, total, emap)  # leave q unmapped

    extend(0, set(), 0.0, {})
    return best[0] / HQ.m if HQ.m else 0.0, best[1]


def brute_force_assignment(W) -> tuple[float, dict[int, int]]:
    """Maximum-weight assignment of a small dense nonnegative matrix.

    Every row of the smaller side is assigned (weights are nonnegative, so
    that loses nothing).
    """
    W = np.asarray(W.toarray() if hasattr(W, "toarray") else W, dtype=float)
    r, c = W.shape
    if min(r, c) > MAX_ASSIGN:
        raise OracleSizeError(f"min dimension must be <= {MAX_ASSIGN}")
    if r == 0 or c == 0:
        return 0.0, {}
    best_val, best = -math.inf, {}
    if r <= c:
        for cols in itertools.permutations(range(c), r):
            val = float(W[np.arange(r), cols].sum())
            if val > best_val:
                best_val, best = val, dict(enumerate(cols))
    else:
        for rows in itertools.permutations(range(r), c):
            val = float(W[rows, np.arange(c)].sum())
            if val > best_val:
                best_val, best = val, {row: col for col, row in enumerate(rows)}
    return best_val, best
