"""Similarity propagation with the local-matching and cooling rules.

One iteration updates every stored entry of the hyperedge similarity ``Y``
from the vertex similarities ``X``, then every stored entry of ``X`` from the
fresh ``Y``, then cools both matrices.  Entries are only ever updated or
deleted, never created.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .matching import canonical


@dataclass(frozen=True)
class CoolingConfig:
    temperature: float = 2.0
    n_iter: int = 20
    epsilon_zero: float = 1e-6
    tol: float = 1e-4

    def __post_init__(self) -> None:
        if not self.temperature > 1:
            raise ValueError("temperature must exceed 1")
        if self.n_iter < 1:
            raise ValueError("n_iter must be at least 1")
        if self.epsilon_zero < 0:
            raise ValueError("epsilon_zero must be nonnegative")


def row_max(M: sp.csr_matrix) -> np.ndarray:
    out = np.zeros(M.shape[0])
    if M.nnz:
        rows = np.repeat(np.arange(M.shape[0]), np.diff(M.indptr))
        np.maximum.at(out, rows, M.data)
    return out


def col_max(M: sp.csr_matrix) -> np.ndarray:
    out = np.zeros(M.shape[1])
    if M.nnz:
        np.maximum.at(out, M.indices, M.data)
    return out


@dataclass
class SimilarityState:
    """Vertex-pair and hyperedge-pair similarities with cached row/column maxima."""

    X: sp.csr_matrix
    Y: sp.csr_matrix
    bx_row: np.ndarray = field(init=False)
    bx_col: np.ndarray = field(init=False)
    by_row: np.ndarray = field(init=False)
    by_col: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.X = canonical(self.X)
        self.Y = canonical(self.Y)
        if (self.X.nnz and self.X.data.min() < 0) or (self.Y.nnz and self.Y.data.min() < 0):
            raise ValueError("similarities must be nonnegative")
        self.refresh()

    def refresh(self) -> None:
        self.bx_row, self.bx_col = row_max(self.X), col_max(self.X)
        self.by_row, self.by_col = row_max(self.Y), col_max(self.Y)

    def check_caches(self) -> bool:
        return (
            np.array_equal(self.bx_row, row_max(self.X))
            and np.array_equal(self.bx_col, col_max(self.X))
            and np.array_equal(self.by_row, row_max(self.Y))
            and np.array_equal(self.by_col, col_max(self.Y))
        )

    def copy(self) -> SimilarityState:
        return SimilarityState(self.X.copy(), self.Y.copy())


def rule2_decay(s, t1, t2):
    """Cooling of a similarity ``s`` against thresholds ``t1`` and ``t2``.

    Branches are tried in order: ``s`` if it clears both thresholds, else
    ``s * sqrt(min/max)`` if it clears the smaller one, else ``0``.
    Vectorised over arrays.
    """
    s, t1, t2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (s, t1, t2)))
    hi = np.maximum(t1, t2)
    lo = np.minimum(t1, t2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(hi > 0, np.sqrt(lo / np.where(hi > 0, hi, 1.0)), 1.0)
    out = np.where(hi <= s, s, np.where(lo <= s, s * ratio, 0.0))
    return out if out.ndim else float(out)


class Neighbourhoods:
    """Row-wise adjacency of both bipartite sides, as CSR index arrays.

    Built from the sparsity pattern of the (normalised) incidence matrices.
    """

    def __init__(self, BQ, BD):
        BQ = canonical(BQ)
        BD = canonical(BD)
        self.shape_q = BQ.shape
        self.shape_d = BD.shape
        self.q_v2e = _pattern(BQ)
        self.d_v2e = _pattern(BD)
        self.q_e2v = _pattern(canonical(BQ.T))
        self.d_e2v = _pattern(canonical(BD.T))


def _pattern(M: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    return M.indptr.astype(np.int64), M.indices.astype(np.int64)


def _sweep(target: sp.csr_matrix, qn, dn, source: sp.csr_matrix, b_row, b_col) -> sp.csr_matrix:
    vals = _kernels.rule1_sweep(
        target.indptr.astype(np.int64), target.indices.astype(np.int64),
        qn[0], qn[1], dn[0], dn[1],
        source.indptr.astype(np.int64), source.indices.astype(np.int64), source.data,
        b_row, b_col,
    )
    return sp.csr_matrix((vals, target.indices.copy(), target.indptr.copy()), shape=target.shape)


def rule1_update(state: SimilarityState, BQ, BD, i: int, j: int, kind: str = "vertex") -> float:
    """Local-matching value for a single pair, leaving ``state`` untouched.

    ``kind='vertex'`` rescores ``X[i, j]`` from ``Y`` over the hyperedges
    incident to ``i`` and ``j``; ``kind='edge'`` rescores ``Y[i, j]`` from
    ``X`` over the members of the two hyperedges.
    """
    nb = Neighbourhoods(BQ, BD)
    if kind == "vertex":
        qn, dn, src, br, bc = nb.q_v2e, nb.d_v2e, state.Y, state.by_row, state.by_col
        nr, nc = nb.shape_q[0], nb.shape_d[0]
    elif kind == "edge":
        qn, dn, src, br, bc = nb.q_e2v, nb.d_e2v, state.X, state.bx_row, state.bx_col
        nr, nc = nb.shape_q[1], nb.shape_d[1]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    target = sp.csr_matrix(([1.0], ([i], [j])), shape=(nr, nc))
    return float(_sweep(target, qn, dn, src, br, bc).data[0])


def _cool(M: sp.csr_matrix, temperature: float, eps: float) -> sp.csr_matrix:
    br, bc = row_max(M), col_max(M)
    rows = np.repeat(np.arange(M.shape[0]), np.diff(M.indptr))
    data = rule2_decay(M.data, br[rows] / temperature, bc[M.indices] / temperature)
    out = sp.csr_matrix((np.atleast_1d(data), M.indices.copy(), M.indptr.copy()), shape=M.shape)
    out.data[out.data < eps] = 0.0
    out.eliminate_zeros()
    return out


@dataclass
class PropagationTrace:
    iterations: int = 0
    max_change: list[float] = field(default_factory=list)
    nnz_x: list[int] = field(default_factory=list)
    nnz_y: list[int] = field(default_factory=list)


def _max_change(old: sp.csr_matrix, new: sp.csr_matrix) -> float:
    diff = (old - new).tocsr()
    return float(np.abs(diff.data).max()) if diff.nnz else 0.0


def propagate(state: SimilarityState, BQ, BD, cfg: CoolingConfig | None = None,
              trace: PropagationTrace | None = None,
              neighbourhoods: Neighbourhoods | None = None) -> SimilarityState:
    """Run up to ``cfg.n_iter`` propagate-then-cool iterations.

    The hyperedge phase reads ``X`` and its maxima as they were at the start
    of the iteration; the vertex phase reads the freshly updated ``Y`` with
    maxima recomputed after the hyperedge phase.  Stops early once no entry
    moves by more than ``cfg.tol``.  Returns a new state.
    """
    cfg = cfg or CoolingConfig()
    nb = neighbourhoods or Neighbourhoods(BQ, BD)
    nq, mq = nb.shape_q
    nd, md = nb.shape_d
    if state.X.shape != (nq, nd) or state.Y.shape != (mq, md):
        raise ValueError("similarity shapes do not conform with the incidence matrices")
    X, Y = state.X, state.Y
    bx_row, bx_col = state.bx_row, state.bx_col
    for _ in range(cfg.n_iter):
        Y_new = _sweep(Y, nb.q_e2v, nb.d_e2v, X, bx_row, bx_col)
        Y_new.eliminate_zeros()
        X_new = _sweep(X, nb.q_v2e, nb.d_v2e, Y_new, row_max(Y_new), col_max(Y_new))
        X_new.eliminate_zeros()
        Y_new = _cool(Y_new, cfg.temperature, cfg.epsilon_zero)
        X_new = _cool(X_new, cfg.temperature, cfg.epsilon_zero)
        change = max(_max_change(X, X_new), _max_change(Y, Y_new))
        X, Y = X_new, Y_new
        bx_row, bx_col = row_max(X), col_max(X)
        if trace is not None:
            trace.iterations += 1
            trace.max_change.append(change)
            trace.nnz_x.append(X.nnz)
            trace.nnz_y.append(Y.nnz)
        if change < cfg.tol:
            break
    return SimilarityState(X, Y)
