"""Alignment quality objectives.

All functions take a query hypergraph ``HQ``, a data hypergraph ``HD`` and
an :class:`Alignment`.  Normalised metrics lie in ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .hypercore import Hypergraph


class MetricError(ValueError):
    """Raised when a metric is undefined for its input."""


def _check_injective(mapping: Mapping[int, int], what: str) -> None:
    if len(set(mapping.values())) != len(mapping):
        raise MetricError(f"{what} is not injective")


@dataclass(frozen=True)
class Alignment:
    """A partial vertex injection and a partial hyperedge injection.

    ``vertex_map[q] = d`` maps query vertex ``q`` to data vertex ``d``; unmapped
    ids are simply absent.  ``edge_map`` is the same for hyperedge indices.
    """

    vertex_map: dict[int, int] = field(default_factory=dict)
    edge_map: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertex_map", {int(k): int(v) for k, v in self.vertex_map.items()})
        object.__setattr__(self, "edge_map", {int(k): int(v) for k, v in self.edge_map.items()})
        _check_injective(self.vertex_map, "vertex_map")
        _check_injective(self.edge_map, "edge_map")

    def check_ranges(self, HQ: Hypergraph, HD: Hypergraph) -> None:
        for q, d in self.vertex_map.items():
            if not (0 <= q < HQ.n and 0 <= d < HD.n):
                raise MetricError(f"vertex pair ({q}, {d}) out of range")
        for q, d in self.edge_map.items():
            if not (0 <= q < HQ.m and 0 <= d < HD.m):
                raise MetricError(f"edge pair ({q}, {d}) out of range")

    def inverse(self) -> Alignment:
        return Alignment(
            {d: q for q, d in self.vertex_map.items()},
            {d: q for q, d in self.edge_map.items()},
        )

    def compose(self, other: Alignment) -> Alignment:
        """``other`` after ``self``: maps ``q`` to ``other(self(q))`` where both defined."""
        vm = {q: other.vertex_map[d] for q, d in self.vertex_map.items() if d in other.vertex_map}
        em = {q: other.edge_map[d] for q, d in self.edge_map.items() if d in other.edge_map}
        return Alignment(vm, em)

    def vertex_matrix(self, n_q: int, n_d: int) -> sp.csr_matrix:
        return _pairs_to_matrix(self.vertex_map, n_q, n_d)

    def edge_matrix(self, m_q: int, m_d: int) -> sp.csr_matrix:
        return _pairs_to_matrix(self.edge_map, m_q, m_d)

    @classmethod
    def from_matrices(cls, X: sp.spmatrix | None = None, Y: sp.spmatrix | None = None) -> Alignment:
        return cls(_matrix_to_pairs(X), _matrix_to_pairs(Y))


def _pairs_to_matrix(mapping: Mapping[int, int], nr: int, nc: int) -> sp.csr_matrix:
    rows = np.fromiter(mapping.keys(), dtype=np.int64, count=len(mapping))
    cols = np.fromiter(mapping.values(), dtype=np.int64, count=len(mapping))
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nr, nc))


def _matrix_to_pairs(M: sp.spmatrix | None) -> dict[int, int]:
    if M is None:
        return {}
    C = sp.coo_matrix(M)
    keep = C.data != 0
    rows, cols = C.row[keep], C.col[keep]
    if len(set(rows.tolist())) != len(rows) or len(set(cols.tolist())) != len(cols):
        raise ValueError("matrix has a row or column with more than one nonzero")
    return dict(zip(rows.tolist(), cols.tolist()))


def is_alignment_matrix(M: sp.spmatrix) -> bool:
    """0/1 entries with every row and column sum at most one."""
    M = sp.csr_matrix(M)
    if M.nnz and not np.all((M.data == 0) | (M.data == 1)):
        return False
    if M.nnz == 0:
        return True
    return bool(M.sum(axis=0).max() <= 1 and M.sum(axis=1).max() <= 1)


def identity_alignment(H: Hypergraph) -> Alignment:
    return Alignment({v: v for v in range(H.n)}, {e: e for e in range(H.m)})


def accuracy(sigma: Alignment, truth: Alignment, subset: Iterable[int] | None = None) -> float:
    """Fraction of ``subset`` whose image under ``sigma`` equals the truth.

    ``subset`` defaults to the domain of ``truth.vertex_map``.  Unmapped
    vertices count as wrong.
    """
    S = list(truth.vertex_map) if subset is None else list(subset)
    if not S:
        raise MetricError("accuracy over an empty vertex set is undefined")
    hits = 0
    for v in S:
        if v not in truth.vertex_map:
            raise MetricError(f"vertex {v} has no ground truth")
        d = sigma.vertex_map.get(v)
        hits += d is not None and d == truth.vertex_map[v]
    return hits / len(S)


def _image(e: tuple[int, ...], vmap: Mapping[int, int]) -> list[int] | None:
    out = []
    for v in e:
        d = vmap.get(v)
        if d is None:
            return None
        out.append(d)
    return out


def hyperedge_correctness(HQ: Hypergraph, HD: Hypergraph, sigma: Alignment) -> float:
    """Fraction of query hyperedges whose vertex image is a data hyperedge.

    A query hyperedge containing an unmapped vertex is not preserved.
    """
    if HQ.m == 0:
        raise MetricError("hyperedge correctness is undefined for an edgeless query")
    data_edges = set(HD.edges)
    hit = 0
    for e in HQ.edges:
        img = _image(e, sigma.vertex_map)
        hit += img is not None and tuple(sorted(img)) in data_edges
    return hit / HQ.m


def _overlap(e: tuple[int, ...], f: tuple[int, ...], vmap: Mapping[int, int]) -> int:
    target = set(f)
    return sum(1 for v in e if vmap.get(v, -1) in target)


def overlap_objective(HQ: Hypergraph, HD: Hypergraph, align: Alignment) -> float:
    """Raw count of incidences ``(v, e)`` preserved as ``(σ_V(v), σ_E(e))``."""
    total = 0
    for qe, de in align.edge_map.items():
        total += _overlap(HQ.edges[qe], HD.edges[de], align.vertex_map)
    return float(total)


def incidence_objective(HQ: Hypergraph, HD: Hypergraph, align: Alignment) -> float:
    """Size-normalised overlap averaged over query hyperedges."""
    if HQ.m == 0:
        raise MetricError("incidence objective is undefined for an edgeless query")
    total = 0.0
    for qe, de in align.edge_map.items():
        e, f = HQ.edges[qe], HD.edges[de]
        total += _overlap(e, f, align.vertex_map) / math.sqrt(len(e) * len(f))
    return total / HQ.m


def nonexclusive_overlap(HQ: Hypergraph, HD: Hypergraph, vertex_map: Mapping[int, int] | Alignment) -> float:
    """Best normalised overlap of each query hyperedge with any data hyperedge, averaged."""
    if HQ.m == 0 or HD.m == 0:
        raise MetricError("non-exclusive overlap needs hyperedges on both sides")
    vmap = vertex_map.vertex_map if isinstance(vertex_map, Alignment) else vertex_map
    inc = HD.vertex_edges
    total = 0.0
    for e in HQ.edges:
        counts: dict[int, int] = {}
        for v in e:
            d = vmap.get(v)
            if d is None:
                continue
            for f in inc[d]:
                counts[f] = counts.get(f, 0) + 1
        if counts:
            total += max(c / math.sqrt(len(e) * len(HD.edges[f])) for f, c in counts.items())
    return total / HQ.m


def frobenius(A: sp.spmatrix, B: sp.spmatrix) -> float:
    """Frobenius inner product of two equally shaped sparse matrices."""
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(sp.csr_matrix(A).multiply(B).sum())


def qp_objective(X, Y, WV, WE, BQ, BD, beta: float) -> float:
    """Incidence alignment objective ``<WV,X> + <WE,Y> + beta <BQ Y, X BD>``.

    ``BQ``/``BD`` are the normalised incidence matrices; ``WV`` and
    ``WE`` may be ``None`` for zero.
    """
    X, Y, BQ, BD = (sp.csr_matrix(M) for M in (X, Y, BQ, BD))
    nq, nd = X.shape
    mq, md = Y.shape
    if BQ.shape != (nq, mq) or BD.shape != (nd, md):
        raise ValueError(
            f"incidence shapes {BQ.shape}, {BD.shape} do not conform with X {X.shape} and Y {Y.shape}"
        )
    value = 0.0
    if WV is not None:
        value += frobenius(WV, X)
    if WE is not None:
        value += frobenius(WE, Y)
    if beta:
        value += beta * frobenius(BQ @ Y, X @ BD)
    return value
