"""Locally dominant weighted bipartite matching.

The matcher commits entries that are the heaviest live entry in both their
row and their column.  Ties are broken by smaller row, then smaller column,
so the result is deterministic and equal to the greedy matching that scans
entries in that priority order.  Its weight is at least half the maximum
weight matching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int, float], ...]
    shape: tuple[int, int]

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def as_dict(self) -> dict[int, int]:
        return {r: c for r, c, _ in self.pairs}

    def to_matrix(self) -> sp.csr_matrix:
        """0/1 indicator matrix of the matched pairs."""
        rows = np.array([p[0] for p in self.pairs], dtype=np.int64)
        cols = np.array([p[1] for p in self.pairs], dtype=np.int64)
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=self.shape)


def canonical(W) -> sp.csr_matrix:
    """CSR copy with summed duplicates, sorted indices and no stored zeros."""
    W = sp.csr_matrix(W, dtype=np.float64, copy=True)
    W.sum_duplicates()
    W.eliminate_zeros()
    W.sort_indices()
    return W


def _wrap(W: sp.csr_matrix, entry_ids: np.ndarray) -> Matching:
    rows = np.repeat(np.arange(W.shape[0]), np.diff(W.indptr))
    pairs = sorted(
        (int(rows[k]), int(W.indices[k]), float(W.data[k])) for k in entry_ids
    )
    return Matching(tuple(pairs), W.shape)


def dominant_match(W) -> Matching:
    """Locally dominant matching of a nonnegative (sparse or dense) matrix.

    Zero entries are never matched.  The result is maximal on the support of
    ``W``: no stored entry has both its row and column unmatched.
    """
    W = canonical(W)
    if W.nnz and W.data.min() < 0:
        raise ValueError("dominant_match needs nonnegative weights")
    ids = _kernels.pointer_dominant_match(
        W.indptr.astype(np.int64), W.indices.astype(np.int64), W.data, W.shape[1]
    )
    return _wrap(W, ids)


def greedy_match(W) -> Matching:
    """Reference greedy matching: scan entries by (-weight, row, col)."""
    W = canonical(W)
    if W.nnz and W.data.min() < 0:
        raise ValueError("greedy_match needs nonnegative weights")
    rows = np.repeat(np.arange(W.shape[0]), np.diff(W.indptr))
    order = np.lexsort((W.indices, rows, -W.data))
    used_r = np.zeros(W.shape[0], dtype=bool)
    used_c = np.zeros(W.shape[1], dtype=bool)
    chosen = []
    for k in order:
        r, c = rows[k], W.indices[k]
        if not used_r[r] and not used_c[c]:
            used_r[r] = used_c[c] = True
            chosen.append(k)
    return _wrap(W, np.array(chosen, dtype=np.int64))


def _neighbours(B: sp.spmatrix, i: int) -> np.ndarray:
    B = sp.csr_matrix(B)
    return B.indices[B.indptr[i]:B.indptr[i + 1]]


def local_match_score(Y, BQ, BD, i: int, j: int) -> float:
    """Matching weight of ``Y`` restricted to the neighbourhoods of ``i`` and ``j``.

    Rows of ``Y`` are taken from the nonzero columns of row ``i`` of ``BQ``
    and columns from the nonzero columns of row ``j`` of ``BD``.  For a
    vertex pair pass the incidence matrices; for a hyperedge pair pass their
    transposes and the vertex similarity matrix as ``Y``.
    """
    rows = np.sort(_neighbours(BQ, i))
    cols = np.sort(_neighbours(BD, j))
    if len(rows) == 0 or len(cols) == 0:
        return 0.0
    sub = sp.csr_matrix(Y)[rows][:, cols]
    return dominant_match(sub).total_weight
