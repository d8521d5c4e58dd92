"""Initial similarities from block singular-vector centrality.

The block operator couples the two hypergraphs through the importance
matrices::

    M = [[W_V / beta,  BQ          ],     rows: query vertices + data hyperedges
         [BD^T,        W_E^T / beta]]     cols: data vertices  + query hyperedges

Its leading left vector is ``(l_Q, r_D)`` and its right vector ``(l_D, r_Q)``.
``M`` is never assembled; only products with its four blocks are formed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class ConvergenceError(RuntimeError):
    """Power iteration hit ``max_iter``; carries the last iterate."""

    def __init__(self, message: str, residual: float, scores: "CentralityScores"):
        super().__init__(message)
        self.residual = residual
        self.scores = scores


@dataclass(frozen=True)
class CentralityScores:
    l_Q: np.ndarray
    r_Q: np.ndarray
    l_D: np.ndarray
    r_D: np.ndarray
    sigma_max: float
    n_iter: int = 0

    def vertex_attributes(self) -> tuple[np.ndarray, np.ndarray]:
        return self.sigma_max * self.l_Q, self.sigma_max * self.l_D

    def edge_attributes(self) -> tuple[np.ndarray, np.ndarray]:
        return self.sigma_max * self.r_Q, self.sigma_max * self.r_D


class BlockOperator:
    """Matrix-free products with the coupled block matrix."""

    def __init__(self, BQ, BD, WV=None, WE=None, beta: float = 1.0):
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.BQ = sp.csr_matrix(BQ, dtype=float)
        self.BD = sp.csr_matrix(BD, dtype=float)
        self.nq, self.mq = self.BQ.shape
        self.nd, self.md = self.BD.shape
        self.WV = None if WV is None else sp.csr_matrix(WV, dtype=float) / beta
        self.WE = None if WE is None else sp.csr_matrix(WE, dtype=float) / beta
        if self.WV is not None and self.WV.shape != (self.nq, self.nd):
            raise ValueError(f"W_V has shape {self.WV.shape}, expected {(self.nq, self.nd)}")
        if self.WE is not None and self.WE.shape != (self.mq, self.md):
            raise ValueError(f"W_E has shape {self.WE.shape}, expected {(self.mq, self.md)}")
        if self.WV is not None and self.WV.nnz == 0:
            self.WV = None
        if self.WE is not None and self.WE.nnz == 0:
            self.WE = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nq + self.md, self.nd + self.mq)

    def matvec(self, lD, rQ):
        """``M @ [lD; rQ]`` returned as ``(lQ, rD)``."""
        lQ = self.BQ @ rQ
        rD = self.BD.T @ lD
        if self.WV is not None:
            lQ = lQ + self.WV @ lD
        if self.WE is not None:
            rD = rD + self.WE.T @ rQ
        return lQ, rD

    def rmatvec(self, lQ, rD):
        """``M.T @ [lQ; rD]`` returned as ``(lD, rQ)``."""
        lD = self.BD @ rD
        rQ = self.BQ.T @ lQ
        if self.WV is not None:
            lD = lD + self.WV.T @ lQ
        if self.WE is not None:
            rQ = rQ + self.WE @ rD
        return lD, rQ

    def dense(self) -> np.ndarray:
        M = np.zeros(self.shape)
        if self.WV is not None:
            M[: self.nq, : self.nd] = self.WV.toarray()
        M[: self.nq, self.nd:] = self.BQ.toarray()
        M[self.nq:, : self.nd] = self.BD.T.toarray()
        if self.WE is not None:
            M[self.nq:, self.nd:] = self.WE.T.toarray()
        return M


def _unit(*parts):
    norm = math.sqrt(sum(float(p @ p) for p in parts))
    if norm == 0.0:
        return parts, 0.0
    return tuple(p / norm for p in parts), norm


def _balance(*parts):
    # each block rescaled to unit mean square (all-ones stays all-ones)
    out = []
    for p in parts:
        s = float(p @ p)
        out.append(p * math.sqrt(len(p) / s) if s > 0 else p)
    return tuple(out)


def block_centrality(BQ, BD, WV=None, WE=None, beta: float = 1.0, tol: float = 1e-8,
                     max_iter: int = 1000, balanced: bool = False) -> CentralityScores:
    """Leading singular triple of the block operator by alternating power iteration.

    Starts from the all-ones right vector.  Converged when successive left and
    right unit vectors each move by less than ``tol``.  Left ``(l_Q, r_D)``
    and right ``(l_D, r_Q)`` are unit vectors with ``M right = sigma left``;
    the sign makes the largest-magnitude right entry positive.

    With ``balanced=True`` the four blocks are rescaled separately after every
    product, so the query and data halves keep comparable scale even when
    their spectra differ (the plain iteration resolves that by annihilating
    the weaker half).  ``sigma_max`` is then the bilinear form ``left' M right``.
    """
    op = BlockOperator(BQ, BD, WV, WE, beta)
    if op.shape[0] == 0 or op.shape[1] == 0:
        z = np.zeros
        return CentralityScores(z(op.nq), z(op.mq), z(op.nd), z(op.md), 0.0, 0)
    bal = _balance if balanced else (lambda *p: p)
    (lD, rQ), _ = _unit(*bal(np.ones(op.nd), np.ones(op.mq)))
    (lQ, rD), sigma = _unit(*bal(*op.matvec(lD, rQ)))
    delta = math.inf
    it = 0
    while sigma > 0.0 and it < max_iter:
        it += 1
        (nlD, nrQ), _ = _unit(*bal(*op.rmatvec(lQ, rD)))
        (nlQ, nrD), sigma = _unit(*bal(*op.matvec(nlD, nrQ)))
        delta = max(
            math.sqrt(float((nlD - lD) @ (nlD - lD) + (nrQ - rQ) @ (nrQ - rQ))),
            math.sqrt(float((nlQ - lQ) @ (nlQ - lQ) + (nrD - rD) @ (nrD - rD))),
        )
        lD, rQ, lQ, rD = nlD, nrQ, nlQ, nrD
        if delta < tol:
            break
    if sigma == 0.0:
        z = np.zeros
        return CentralityScores(z(op.nq), z(op.mq), z(op.nd), z(op.md), 0.0, it)
    if balanced:
        mlQ, mrD = op.matvec(lD, rQ)
        sigma = float(lQ @ mlQ + rD @ mrD)
    else:
        (lQ, rD), sigma = _unit(*op.matvec(lD, rQ))
    right = np.concatenate([lD, rQ])
    if right[np.argmax(np.abs(right))] < 0:
        lD, rQ, lQ, rD = -lD, -rQ, -lQ, -rD
    scores = CentralityScores(lQ, rQ, lD, rD, float(sigma), it)
    if delta >= tol:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations (step {delta:.3g})",
            _residual(op, scores), scores,
        )
    return scores


def _residual(op: BlockOperator, s: CentralityScores) -> float:
    lQ, rD = op.matvec(s.l_D, s.r_Q)
    return math.sqrt(float(np.sum((lQ - s.sigma_max * s.l_Q) ** 2) + np.sum((rD - s.sigma_max * s.r_D) ** 2)))


def residual(BQ, BD, WV, WE, beta: float, scores: CentralityScores) -> float:
    """``||M [l_D; r_Q] - sigma [l_Q; r_D]||``."""
    return _residual(BlockOperator(BQ, BD, WV, WE, beta), scores)


def compare(a, b):
    """``min(a, b) / max(a, b)`` with ``compare(0, 0) = 1``.  Vectorised."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 1.0)
    return out if out.ndim else float(out)


def degree_attributes(B) -> tuple[np.ndarray, np.ndarray]:
    """Row sums and column sums of an incidence-like matrix."""
    B = sp.csr_matrix(B)
    return np.asarray(B.sum(axis=1)).ravel(), np.asarray(B.sum(axis=0)).ravel()


def dense_similarity(a: np.ndarray, b: np.ndarray) -> sp.csr_matrix:
    """All pairs ``compare(a_i, b_j)``; zeros are not stored."""
    S = compare(np.asarray(a)[:, None], np.asarray(b)[None, :])
    return sp.csr_matrix(np.atleast_2d(S).reshape(len(a), len(b)))


def init_similarity_dense(scores: CentralityScores) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    aq, ad = scores.vertex_attributes()
    eq, ed = scores.edge_attributes()
    return dense_similarity(aq, ad), dense_similarity(eq, ed)


def nearest_k(a: np.ndarray, b: np.ndarray, k: int, by: str = "difference") -> sp.csr_matrix:
    """For each ``a_i`` keep the ``k`` entries of ``b`` nearest in value.

    ``by='difference'`` ranks candidates by ``|a_i - b_j|``; ``by='ratio'``
    ranks them by ``compare(a_i, b_j)`` (nearest on a log scale), which is
    the exact top-``k`` of the dense similarity row.  Stored values are
    ``compare(a_i, b_j)`` either way.  Ties go to the smaller data index.
    Uses one sort of ``b`` and an outward scan from the binary search
    position, so the cost is ``O((len(a) k + len(b)) log len(b))``.  Pairs
    with a zero attribute on either side are skipped.
    """
    if by not in ("difference", "ratio"):
        raise ValueError(f"unknown ranking {by!r}")
    ratio = by == "ratio"
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    live = np.flatnonzero(b > 0)
    order = live[np.lexsort((live, b[live]))]
    vals = b[order]
    nb = len(order)
    k = min(k, nb)
    rows, cols = [], []
    for i, x in enumerate(a):
        if x <= 0 or k == 0:
            continue
        hi = int(np.searchsorted(vals, x, side="left"))
        lo = hi - 1
        picked = []
        while len(picked) < k:
            left_ok, right_ok = lo >= 0, hi < nb
            if left_ok and right_ok:
                if ratio:
                    # larger ratio is nearer: vals[lo]/x vs x/vals[hi], cross-multiplied
                    dl, dr = x * x, vals[lo] * vals[hi]
                else:
                    dl, dr = x - vals[lo], vals[hi] - x
                if dl < dr or (dl == dr and order[lo] < order[hi]):
                    take_left = True
                else:
                    take_left = False
            else:
                take_left = left_ok
            if take_left:
                picked.append(order[lo])
                lo -= 1
            else:
                picked.append(order[hi])
                hi += 1
        rows.extend([i] * len(picked))
        cols.extend(picked)
    rows = np.array(rows, dtype=np.int64)
    cols = np.array(cols, dtype=np.int64)
    vals_out = compare(a[rows], b[cols]) if len(rows) else np.zeros(0)
    S = sp.csr_matrix((np.atleast_1d(vals_out), (rows, cols)), shape=(len(a), len(b)))
    S.eliminate_zeros()
    S.sort_indices()
    return S


def init_similarity_sparse(scores: CentralityScores, k: int,
                           by: str = "difference") -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Top-``k`` nearest-attribute candidates per query vertex and hyperedge.

    ``k`` larger than the data side is clamped with a warning.  ``by`` is
    passed to :func:`nearest_k`.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > max(len(scores.l_D), len(scores.r_D)):
        warnings.warn(f"k={k} exceeds the data side; keeping all pairs", stacklevel=2)
    aq, ad = scores.vertex_attributes()
    eq, ed = scores.edge_attributes()
    return nearest_k(aq, ad, k, by), nearest_k(eq, ed, k, by)
