"""Hypergraph data model, text I/O, 2-core peeling and incidence matrices.

Hypergraphs are stored as an ordered tuple of hyperedges, each a sorted tuple
of dense vertex ids in ``[0, n)``.  Sparse matrices are ``scipy.sparse``
CSR matrices in canonical form (sorted indices, no duplicates, no explicit
zeros).
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class HypergraphFormatError(ValueError):
    """Raised when hypergraph text cannot be parsed."""


class HypergraphError(ValueError):
    """Raised when a hypergraph violates its structural invariants."""


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """A hypergraph on vertices ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of vertices.  Vertices need not appear in any hyperedge.
    edges : sequence of iterables of int
        Hyperedges in order.  Each is normalised to a sorted tuple; duplicate
        hyperedges are kept as distinct edges.
    labels : sequence of str, optional
        External vertex names, one per vertex.
    """

    n: int
    edges: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        norm = []
        for idx, e in enumerate(self.edges):
            t = tuple(sorted(int(v) for v in e))
            if not t:
                raise HypergraphError(f"hyperedge {idx} is empty")
            if len(set(t)) != len(t):
                raise HypergraphError(f"hyperedge {idx} repeats a vertex")
            if t[0] < 0 or t[-1] >= self.n:
                raise HypergraphError(f"hyperedge {idx} has a vertex outside [0, {self.n})")
            norm.append(t)
        object.__setattr__(self, "edges", tuple(norm))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.n:
                raise HypergraphError("label table length differs from n")
            object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return len(self.edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.n, self.edges, self.labels))

    def __repr__(self) -> str:
        return f"Hypergraph(n={self.n}, m={self.m})"

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for e in self.edges:
            deg[list(e)] += 1
        return deg

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([len(e) for e in self.edges], dtype=np.int64)

    @cached_property
    def vertex_edges(self) -> tuple[tuple[int, ...], ...]:
        """Incident hyperedge ids for every vertex, ascending."""
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for idx, e in enumerate(self.edges):
            for v in e:
                inc[v].append(idx)
        return tuple(tuple(x) for x in inc)

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v)


@dataclass(frozen=True)
class InstanceStats:
    n: int
    m: int
    mean_size: float
    bipartite_size: int

    def as_dict(self, digits: int | None = 1) -> dict:
        mean = round(self.mean_size, digits) if digits is not None else self.mean_size
        return {
            "n": self.n,
            "m": self.m,
            "mean_size": mean,
            "mean_size_exact": self.mean_size,
            "bipartite_size": self.bipartite_size,
        }


def parse_hypergraph(text: str) -> Hypergraph:
    """Parse the one-hyperedge-per-line text format.

    Tokens are mapped to dense ids in order of first appearance.  Lines that
    start with ``#`` are comments; blank lines are allowed only after the
    last hyperedge.
    """
    ids: dict[str, int] = {}
    edges: list[tuple[int, ...]] = []
    pending_blank = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line:
            if pending_blank is None:
                pending_blank = lineno
            continue
        if pending_blank is not None and edges:
            raise HypergraphFormatError(f"line {pending_blank}: empty line between hyperedges")
        pending_blank = None
        members: list[int] = []
        for tok in line.split():
            if tok not in ids:
                ids[tok] = len(ids)
            vid = ids[tok]
            if vid not in members:
                members.append(vid)
        edges.append(tuple(members))
    if not edges:
        raise HypergraphFormatError("no hyperedges found")
    labels = [None] * len(ids)
    for tok, vid in ids.items():
        labels[vid] = tok
    return Hypergraph(len(ids), tuple(edges), tuple(labels))


def read_hypergraph(path) -> Hypergraph:
    with open(path, encoding="utf-8") as fh:
        return parse_hypergraph(fh.read())


def serialize_hypergraph(H: Hypergraph) -> str:
    """One hyperedge per line, members in ascending id order.

    Re-parsing reproduces the id assignment when ids were assigned by first
    appearance (as :func:`parse_hypergraph` does).
    """
    lines = [" ".join(H.label(v) for v in e) for e in H.edges]
    return "\n".join(lines) + "\n"


def write_hypergraph(H: Hypergraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_hypergraph(H))


def relabel_first_appearance(H: Hypergraph) -> tuple[Hypergraph, np.ndarray]:
    """Renumber vertices in order of first appearance in the edge list.

    Returns the renumbered hypergraph and ``old_of_new``.  Vertices that lie in
    no hyperedge are placed last, in id order.
    """
    order: list[int] = []
    seen = np.zeros(H.n, dtype=bool)
    for e in H.edges:
        for v in e:
            if not seen[v]:
                seen[v] = True
                order.append(v)
    order.extend(int(v) for v in np.flatnonzero(~seen))
    old_of_new = np.array(order, dtype=np.int64)
    new_of_old = np.empty(H.n, dtype=np.int64)
    new_of_old[old_of_new] = np.arange(H.n)
    edges = tuple(tuple(int(new_of_old[v]) for v in e) for e in H.edges)
    labels = None if H.labels is None else tuple(H.labels[v] for v in old_of_new)
    return Hypergraph(H.n, edges, labels), old_of_new


def two_core(H: Hypergraph) -> tuple[Hypergraph, np.ndarray, np.ndarray]:
    """2-core of the bipartite representation of ``H``.

    Degree-1 vertices and size-1 hyperedges are peeled with a worklist until
    none remain.  Vertices of degree 0 are dropped as well.

    Returns
    -------
    core : Hypergraph
        The surviving sub-hypergraph with vertices renumbered by ascending
        original id.
    kept_vertices : ndarray
        ``kept_vertices[new_id]`` is the original vertex id.
    kept_edges : ndarray
        ``kept_edges[new_idx]`` is the original hyperedge index.
    """
    deg = H.degrees.copy()
    size = H.sizes.copy()
    v_alive = np.ones(H.n, dtype=bool)
    e_alive = np.ones(H.m, dtype=bool)
    inc = H.vertex_edges

    # worklist holds ('v', id) or ('e', id) nodes of the bipartite graph
    work: deque[tuple[int, int]] = deque()
    for v in range(H.n):
        if deg[v] < 2:
            work.append((0, v))
    for e in range(H.m):
        if size[e] < 2:
            work.append((1, e))
    while work:
        kind, x = work.popleft()
        if kind == 0:
            if not v_alive[x]:
                continue
            v_alive[x] = False
            for e in inc[x]:
                if e_alive[e]:
                    size[e] -= 1
                    if size[e] < 2:
                        work.append((1, e))
        else:
            if not e_alive[x]:
                continue
            e_alive[x] = False
            for v in H.edges[x]:
                if v_alive[v]:
                    deg[v] -= 1
                    if deg[v] < 2:
                        work.append((0, v))

    kept_vertices = np.flatnonzero(v_alive)
    kept_edges = np.flatnonzero(e_alive)
    new_id = np.full(H.n, -1, dtype=np.int64)
    new_id[kept_vertices] = np.arange(len(kept_vertices))
    edges = tuple(tuple(int(new_id[v]) for v in H.edges[e] if v_alive[v]) for e in kept_edges)
    labels = None if H.labels is None else tuple(H.labels[v] for v in kept_vertices)
    return Hypergraph(len(kept_vertices), edges, labels), kept_vertices, kept_edges


def sub_hypergraph(H: Hypergraph, edge_ids: Iterable[int]) -> Hypergraph:
    """Keep the listed hyperedges (in the given order) and all vertices."""
    return Hypergraph(H.n, tuple(H.edges[e] for e in edge_ids), H.labels)


def incidence(H: Hypergraph) -> sp.csr_matrix:
    """The ``n x m`` 0/1 incidence matrix."""
    rows = np.fromiter((v for e in H.edges for v in e), dtype=np.int64, count=int(H.sizes.sum()))
    cols = np.repeat(np.arange(H.m), H.sizes)
    B = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(H.n, H.m))
    B.sum_duplicates()
    B.sort_indices()
    return B


def normalized_incidence(H: Hypergraph) -> sp.csr_matrix:
    """Incidence matrix with column ``e`` scaled by ``1/sqrt(|e|)``."""
    B = incidence(H)
    if H.m == 0:
        return B
    scale = 1.0 / np.sqrt(H.sizes.astype(float))
    return sp.csr_matrix(B @ sp.diags(scale))


def clique_expansion(H: Hypergraph) -> sp.csr_matrix:
    """Adjacency matrix of the clique expansion (0/1, zero diagonal)."""
    B = incidence(H)
    A = (B @ B.T).tocsr()
    A.setdiag(0)
    A.eliminate_zeros()
    A.data[:] = 1.0
    A.sort_indices()
    return A


def stats(H: Hypergraph) -> InstanceStats:
    if H.m == 0:
        raise HypergraphError("mean hyperedge size is undefined for m = 0")
    return InstanceStats(H.n, H.m, float(H.sizes.mean()), H.n + H.m)


def vertex_profiles(H: Hypergraph) -> list[tuple[int, tuple[int, ...]]]:
    """``(degree, sorted incident hyperedge sizes)`` for every vertex."""
    return [(len(inc), tuple(sorted(len(H.edges[e]) for e in inc))) for inc in H.vertex_edges]


def refinement_colors(H: Hypergraph, max_rounds: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Colour refinement (1-WL) on the bipartite representation.

    Returns stable vertex and hyperedge colour classes as dense integers.
    Two nodes in different classes cannot be swapped by any automorphism.
    """
    vcol = np.zeros(H.n, dtype=np.int64)
    ecol = np.zeros(H.m, dtype=np.int64)
    inc = H.vertex_edges
    rounds = max_rounds if max_rounds is not None else H.n + H.m + 1
    n_classes = (1, 1 if H.m else 0)
    for _ in range(rounds):
        e_sig = [(ecol[i], tuple(sorted(vcol[v] for v in e))) for i, e in enumerate(H.edges)]
        ecol = _dense_codes(e_sig)
        v_sig = [(vcol[v], tuple(sorted(ecol[e] for e in inc[v]))) for v in range(H.n)]
        vcol = _dense_codes(v_sig)
        counts = (len(set(vcol.tolist())), len(set(ecol.tolist())))
        if counts == n_classes:
            break
        n_classes = counts
    return vcol, ecol


def _dense_codes(signatures: Sequence) -> np.ndarray:
    table = {sig: i for i, sig in enumerate(sorted(set(signatures)))}
    return np.array([table[s] for s in signatures], dtype=np.int64)


def is_rigid(H: Hypergraph) -> bool:
    """True when colour refinement separates every vertex and no hyperedge repeats.

    This is sufficient (not necessary) for the automorphism group to be
    trivial on vertices and hyperedges.
    """
    if len(set(H.edges)) != H.m:
        return False
    vcol, _ = refinement_colors(H)
    return len(set(vcol.tolist())) == H.n


def duplicate_edge_count(H: Hypergraph) -> int:
    return sum(c - 1 for c in Counter(H.edges).values())
