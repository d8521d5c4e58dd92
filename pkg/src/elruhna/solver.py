"""Iterative initialise / propagate / round / fix driver.

Each outer round works on the sub-problem of still unmatched query and data
nodes.  Pairs fixed in earlier rounds enter only through the importance
matrices ``W_V = BQ Y* BD^T`` and ``W_E = BQ^T X* BD``.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .hypercore import Hypergraph, normalized_incidence
from .initsim import ConvergenceError, block_centrality, init_similarity_dense, init_similarity_sparse
from .matching import canonical, dominant_match
from .metrics import Alignment, qp_objective
from .propagate import CoolingConfig, SimilarityState, propagate

log = logging.getLogger(__name__)


class SizeOrderError(ValueError):
    """The query is larger than the data on both sides; swap the inputs."""


@dataclass(frozen=True)
class SolverConfig:
    """Tunables of :func:`align`.

    ``k`` defaults to ``ceil(log2(max(|V|, |E|)))`` over both inputs and is
    only used in sparse mode.  ``forbid_vertices`` and ``forbid_edges`` hold
    ``(query, data)`` pairs that may never be matched.  ``balanced`` selects
    per-side renormalisation in the centrality power iteration.
    ``candidates`` picks how sparse mode ranks nearest attributes
    (see :func:`~elruhna.initsim.nearest_k`).
    """

    beta: float = 1.0
    mode: str = "dense"
    k: int | None = None
    cooling: CoolingConfig = field(default_factory=CoolingConfig)
    max_outer_rounds: int = 10
    seed: int = 0
    forbid_vertices: frozenset = frozenset()
    forbid_edges: frozenset = frozenset()
    balanced: bool = True
    centrality_tol: float = 1e-8
    centrality_max_iter: int = 1000
    candidates: str = "difference"

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.mode not in ("dense", "sparse"):
            raise ValueError(f"mode must be 'dense' or 'sparse', not {self.mode!r}")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")
        if self.candidates not in ("difference", "ratio"):
            raise ValueError(f"candidates must be 'difference' or 'ratio', not {self.candidates!r}")
        if self.max_outer_rounds < 1:
            raise ValueError("max_outer_rounds must be at least 1")
        object.__setattr__(self, "forbid_vertices", frozenset(map(tuple, self.forbid_vertices)))
        object.__setattr__(self, "forbid_edges", frozenset(map(tuple, self.forbid_edges)))


def default_k(*sizes: int) -> int:
    return max(1, math.ceil(math.log2(max(2, *sizes))))


@dataclass
class RoundRecord:
    round: int
    new_vertex_matches: int
    new_edge_matches: int
    qp_objective: float
    wall_ms: float
    finalized: bool = False
    centrality_converged: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def importance_from_partial(BQ, BD, X_star, Y_star) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """``(W_V, W_E) = (BQ Y* BD^T, BQ^T X* BD)`` for fixed partial matchings."""
    BQ, BD = sp.csr_matrix(BQ), sp.csr_matrix(BD)
    X_star, Y_star = sp.csr_matrix(X_star), sp.csr_matrix(Y_star)
    if X_star.shape != (BQ.shape[0], BD.shape[0]) or Y_star.shape != (BQ.shape[1], BD.shape[1]):
        raise ValueError("partial solution shapes do not conform with the incidence matrices")
    WV = canonical(BQ @ Y_star @ BD.T)
    WE = canonical(BQ.T @ X_star @ BD)
    return WV, WE


def has_unmatched(X, Y, sizes: tuple[int, int] | None = None) -> bool:
    """True when some query vertex (row of ``X``) or query hyperedge (row of ``Y``) is unmatched."""
    nq, mq = sizes if sizes is not None else (X.shape[0], Y.shape[0])
    matched_v = np.count_nonzero(np.diff(sp.csr_matrix(X).indptr)) if nq else 0
    matched_e = np.count_nonzero(np.diff(sp.csr_matrix(Y).indptr)) if mq else 0
    return matched_v < nq or matched_e < mq


def _mapping_matrix(mate: np.ndarray, ncols: int) -> sp.csr_matrix:
    rows = np.flatnonzero(mate >= 0)
    return sp.csr_matrix((np.ones(len(rows)), (rows, mate[rows])), shape=(len(mate), ncols))


def _drop(M: sp.csr_matrix, forbid, rows_g: np.ndarray, cols_g: np.ndarray) -> sp.csr_matrix:
    """Remove entries whose global (row, col) pair is forbidden."""
    M = canonical(M)
    if not forbid or M.nnz == 0:
        return M
    r_loc = {int(g): i for i, g in enumerate(rows_g)}
    c_loc = {int(g): j for j, g in enumerate(cols_g)}
    L = M.tolil()
    for q, d in forbid:
        i, j = r_loc.get(q), c_loc.get(d)
        if i is not None and j is not None:
            L[i, j] = 0
    return canonical(L)


def _restrict_to(M: sp.csr_matrix, pattern: sp.csr_matrix) -> sp.csr_matrix:
    mask = canonical(pattern).copy()
    mask.data[:] = 1.0
    return canonical(sp.csr_matrix(M).multiply(mask))


class _Problem:
    def __init__(self, HQ: Hypergraph, HD: Hypergraph, cfg: SolverConfig):
        self.HQ, self.HD, self.cfg = HQ, HD, cfg
        self.BQ = normalized_incidence(HQ)
        self.BD = normalized_incidence(HD)
        self.k = cfg.k or default_k(HQ.n, HQ.m, HD.n, HD.m)
        self.vq = -np.ones(HQ.n, dtype=np.int64)
        self.vd = -np.ones(HD.n, dtype=np.int64)
        self.eq = -np.ones(HQ.m, dtype=np.int64)
        self.ed = -np.ones(HD.m, dtype=np.int64)

    def unmatched(self) -> bool:
        return bool((self.vq < 0).any() or (self.eq < 0).any())

    def objective(self) -> float:
        X = _mapping_matrix(self.vq, self.HD.n)
        Y = _mapping_matrix(self.eq, self.HD.m)
        return qp_objective(X, Y, None, None, self.BQ, self.BD, 1.0 / self.HQ.m)

    def commit(self, M, rows_g, cols_g, q_mate, d_mate) -> int:
        added = 0
        for r, c, _ in dominant_match(M).pairs:
            q, d = int(rows_g[r]), int(cols_g[c])
            if q_mate[q] >= 0 or d_mate[d] >= 0:
                continue
            q_mate[q], d_mate[d] = d, q
            added += 1
        return added

    def round(self) -> tuple[int, int, dict]:
        cfg = self.cfg
        X_star = _mapping_matrix(self.vq, self.HD.n)
        Y_star = _mapping_matrix(self.eq, self.HD.m)
        WV, WE = importance_from_partial(self.BQ, self.BD, X_star, Y_star)

        uqv, udv = np.flatnonzero(self.vq < 0), np.flatnonzero(self.vd < 0)
        uqe, ude = np.flatnonzero(self.eq < 0), np.flatnonzero(self.ed < 0)
        BQs = canonical(self.BQ[uqv][:, uqe])
        BDs = canonical(self.BD[udv][:, ude])
        WVs = _drop(WV[uqv][:, udv], cfg.forbid_vertices, uqv, udv)
        WEs = _drop(WE[uqe][:, ude], cfg.forbid_edges, uqe, ude)

        converged = True
        try:
            scores = block_centrality(BQs, BDs, WVs, WEs, cfg.beta, cfg.centrality_tol,
                                      cfg.centrality_max_iter, balanced=cfg.balanced)
        except ConvergenceError as exc:
            log.warning("centrality: %s; using last iterate", exc)
            scores, converged = exc.scores, False

        if cfg.mode == "dense":
            X0, _ = init_similarity_dense(scores)
            X0 = _drop(X0, cfg.forbid_vertices, uqv, udv)
            Y0 = WEs + BQs.T @ X0 @ BDs
        else:
            X0, Yc = init_similarity_sparse(scores, self.k, cfg.candidates)
            X0 = _drop(X0, cfg.forbid_vertices, uqv, udv)
            Yc = _drop(Yc, cfg.forbid_edges, uqe, ude)
            Y0 = _restrict_to(WEs, Yc) + _masked_triple(BQs, X0, BDs, Yc)
        Y0 = _drop(Y0, cfg.forbid_edges, uqe, ude)

        state = propagate(SimilarityState(X0, Y0), BQs, BDs, cfg.cooling)

        Yr = _dominant_local(state.Y)
        X_in = _drop(WVs + BQs @ Yr @ BDs.T, cfg.forbid_vertices, uqv, udv)
        new_e = self.commit(Yr, uqe, ude, self.eq, self.ed)
        new_v = self.commit(X_in, uqv, udv, self.vq, self.vd)
        fallback = {"X0": X0, "Y0": Y0, "uqv": uqv, "udv": udv, "uqe": uqe, "ude": ude}
        return new_v, new_e, {"converged": converged, "fallback": fallback}

    def finalize(self, fb: dict) -> tuple[int, int]:
        """Greedy completion from pre-rounding similarities, on still-free nodes."""
        uqv, udv, uqe, ude = fb["uqv"], fb["udv"], fb["uqe"], fb["ude"]
        free_qv = self.vq[uqv] < 0
        free_dv = self.vd[udv] < 0
        free_qe = self.eq[uqe] < 0
        free_de = self.ed[ude] < 0
        X0 = canonical(fb["X0"])[np.flatnonzero(free_qv)][:, np.flatnonzero(free_dv)]
        Y0 = canonical(fb["Y0"])[np.flatnonzero(free_qe)][:, np.flatnonzero(free_de)]
        nv = self.commit(X0, uqv[free_qv], udv[free_dv], self.vq, self.vd)
        ne = self.commit(Y0, uqe[free_qe], ude[free_de], self.eq, self.ed)
        return nv, ne

    def alignment(self) -> Alignment:
        vm = {int(q): int(d) for q, d in enumerate(self.vq) if d >= 0}
        em = {int(q): int(d) for q, d in enumerate(self.eq) if d >= 0}
        return Alignment(vm, em)


def _dominant_local(Y: sp.csr_matrix) -> sp.csr_matrix:
    return dominant_match(Y).to_matrix()


def _masked_triple(BQs, X0, BDs, pattern) -> sp.csr_matrix:
    """``(BQs^T X0 BDs)`` evaluated only on the stored entries of ``pattern``."""
    P = canonical(pattern)
    if P.nnz == 0:
        return sp.csr_matrix(P.shape)
    left = canonical(BQs.T @ X0)          # m_Q x n_D
    right = canonical(BDs)                 # n_D x m_D
    rows = np.repeat(np.arange(P.shape[0]), np.diff(P.indptr))
    cols = P.indices
    # row r of left dotted with column c of right, per stored pair
    RT = canonical(right.T)
    vals = np.empty(len(rows))
    for t, (r, c) in enumerate(zip(rows, cols)):
        a0, a1 = left.indptr[r], left.indptr[r + 1]
        b0, b1 = RT.indptr[c], RT.indptr[c + 1]
        ai, bi = left.indices[a0:a1], RT.indices[b0:b1]
        common, ia, ib = np.intersect1d(ai, bi, assume_unique=True, return_indices=True)
        vals[t] = float(left.data[a0:a1][ia] @ RT.data[b0:b1][ib]) if len(common) else 0.0
    return canonical(sp.csr_matrix((vals, (rows, cols)), shape=P.shape))


def check_sizes(HQ: Hypergraph, HD: Hypergraph) -> None:
    if HQ.n == 0 or HQ.m == 0 or HD.n == 0 or HD.m == 0:
        raise ValueError("both hypergraphs must have vertices and hyperedges")
    if HQ.n <= HD.n and HQ.m <= HD.m:
        return
    if HD.n <= HQ.n and HD.m <= HQ.m:
        raise SizeOrderError(
            f"query ({HQ.n} vertices, {HQ.m} hyperedges) is larger than data "
            f"({HD.n}, {HD.m}); swap the inputs and invert the result"
        )
    log.info("neither orientation nests the sizes; proceeding with partial injections")


def align(HQ: Hypergraph, HD: Hypergraph, cfg: SolverConfig | None = None) -> tuple[Alignment, list[RoundRecord]]:
    """Align ``HQ`` into ``HD``.

    Returns the alignment and one :class:`RoundRecord` per outer round.
    Matched pairs are never revisited.  When a round adds nothing, or the
    round cap is reached with nodes still free, the remaining nodes are
    matched greedily from that round's initial similarities.
    """
    cfg = cfg or SolverConfig()
    check_sizes(HQ, HD)
    prob = _Problem(HQ, HD, cfg)
    trace: list[RoundRecord] = []
    prev_obj = -math.inf
    for rnd in range(cfg.max_outer_rounds):
        if not prob.unmatched():
            break
        t0 = time.perf_counter()
        new_v, new_e, info = prob.round()
        last = rnd == cfg.max_outer_rounds - 1
        finalized = False
        if new_v + new_e == 0 or (last and prob.unmatched()):
            fv, fe = prob.finalize(info["fallback"])
            new_v, new_e, finalized = new_v + fv, new_e + fe, True
        obj = prob.objective()
        if obj < prev_obj - 1e-12:
            log.warning("round %d lowered the objective from %.6g to %.6g", rnd, prev_obj, obj)
        prev_obj = obj
        trace.append(RoundRecord(rnd, new_v, new_e, obj, (time.perf_counter() - t0) * 1e3,
                                 finalized, info["converged"]))
        if finalized:
            break
    return prob.alignment(), trace


def align_any(HQ: Hypergraph, HD: Hypergraph, cfg: SolverConfig | None = None) -> tuple[Alignment, list[RoundRecord], bool]:
    """:func:`align` with automatic orientation.

    Returns an alignment from ``HQ`` to ``HD`` either way; the flag tells
    whether the solver ran on the swapped pair.
    """
    try:
        sigma, trace = align(HQ, HD, cfg)
        return sigma, trace, False
    except SizeOrderError:
        sigma, trace = align(HD, HQ, cfg)
        return sigma.inverse(), trace, True
