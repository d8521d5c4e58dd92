"""Noise model, synthetic instances and the noise-sweep harness.

Noise replaces a fraction ``q`` of the hyperedges by random hyperedges whose
size is Poisson with rate ``lambda`` (clamped to ``[1, n]``) and whose members
are drawn uniformly without replacement.  The noisy copy is then relabelled
by a random permutation and reduced to its 2-core.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .hypercore import Hypergraph, is_rigid, two_core
from .metrics import Alignment, accuracy, hyperedge_correctness

DEFAULT_LEVELS = (0.0, 0.05, 0.1, 0.15, 0.2)


@dataclass(frozen=True)
class NoiseSpec:
    noise_level: float = 0.0
    lam: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.noise_level <= 1.0:
            raise ValueError("noise_level must lie in [0, 1]")
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lambda must be positive")


def random_hyperedge(n: int, lam: float, rng: np.random.Generator) -> tuple[int, ...]:
    """Poisson(``lam``) many distinct vertices of ``0..n-1`` (at least one)."""
    if n < 1:
        raise ValueError("need at least one vertex")
    size = int(min(max(rng.poisson(lam), 1), n))
    return tuple(sorted(int(v) for v in rng.choice(n, size=size, replace=False)))


def permute(H: Hypergraph, rng: np.random.Generator) -> tuple[Hypergraph, Alignment]:
    """Relabel vertices and shuffle hyperedge order uniformly at random.

    The returned truth maps original ids to ids in the permuted copy.
    """
    vperm = rng.permutation(H.n)
    eorder = rng.permutation(H.m)  # new position t holds old edge eorder[t]
    edges = tuple(tuple(int(vperm[v]) for v in H.edges[old]) for old in eorder)
    labels = None
    if H.labels is not None:
        labels = [None] * H.n
        for old, new in enumerate(vperm):
            labels[new] = H.labels[old]
    truth = Alignment(
        {v: int(vperm[v]) for v in range(H.n)},
        {int(old): t for t, old in enumerate(eorder)},
    )
    return Hypergraph(H.n, edges, labels), truth


def perturb(H: Hypergraph, spec: NoiseSpec) -> tuple[Hypergraph, Alignment]:
    """Noisy, permuted, 2-cored copy of ``H`` and the ground truth into it.

    Exactly ``ceil(q m)`` hyperedges are replaced.  The truth's edge map
    covers unreplaced hyperedges that survive the 2-core; its vertex map
    covers surviving vertices.
    """
    rng = np.random.default_rng(spec.seed)
    lam = spec.lam if spec.lam is not None else float(H.sizes.mean())
    n_replace = math.ceil(spec.noise_level * H.m - 1e-9)
    replaced = set(rng.choice(H.m, size=n_replace, replace=False).tolist()) if n_replace else set()
    edges = list(H.edges)
    for e in sorted(replaced):
        edges[e] = random_hyperedge(H.n, lam, rng)
    noisy = Hypergraph(H.n, tuple(edges), H.labels)
    permuted, perm_truth = permute(noisy, rng)
    core, kept_v, kept_e = two_core(permuted)
    new_v = {int(old): i for i, old in enumerate(kept_v)}
    new_e = {int(old): i for i, old in enumerate(kept_e)}
    vmap = {q: new_v[d] for q, d in perm_truth.vertex_map.items() if d in new_v}
    emap = {q: new_e[d] for q, d in perm_truth.edge_map.items() if d in new_e and q not in replaced}
    return core, Alignment(vmap, emap)


def random_hypergraph(n: int, m: int, lam: float, rng: np.random.Generator,
                      min_size: int = 2) -> Hypergraph:
    """``m`` random hyperedges on ``n`` vertices with Poisson sizes, at least ``min_size``."""
    edges = []
    for _ in range(m):
        size = int(min(max(rng.poisson(lam), min_size), n))
        edges.append(tuple(int(v) for v in rng.choice(n, size=size, replace=False)))
    return Hypergraph(n, tuple(edges))


def rigid_hypergraph(n: int, mean_size: float, mean_degree: float, seed: int,
                     max_tries: int = 200) -> Hypergraph:
    """A random 2-core whose vertices colour refinement fully separates.

    Hyperedge sizes are ``2 + Poisson(mean_size - 2)`` so their mean is about
    ``mean_size``; the edge count is chosen so the mean vertex degree is about
    ``mean_degree``.
    """
    rng = np.random.default_rng(seed)
    m = max(2, round(n * mean_degree / mean_size))
    for _ in range(max_tries):
        edges = []
        for _ in range(m):
            size = int(min(2 + rng.poisson(max(mean_size - 2.0, 1e-9)), n))
            edges.append(tuple(int(v) for v in rng.choice(n, size=size, replace=False)))
        core, _, _ = two_core(Hypergraph(n, tuple(edges)))
        if core.m and is_rigid(core):
            return core
    raise RuntimeError(f"no rigid instance found in {max_tries} tries")


@dataclass(frozen=True)
class SweepRow:
    instance: str
    level: float
    seed: int
    accuracy: float
    edge_correctness: float
    runtime_ms: float
    swapped: bool = False


@dataclass(frozen=True)
class AggregateRow:
    instance: str
    level: float
    runs: int
    mean_accuracy: float
    std_accuracy: float
    mean_edge_correctness: float
    std_edge_correctness: float
    mean_runtime_ms: float


def run_cell(H: Hypergraph, level: float, level_index: int, seed: int, cfg, instance: str = "",
             lam: float | None = None) -> SweepRow:
    """Perturb, align in whichever orientation nests the sizes, and score."""
    from .solver import align_any

    cell_seed = int(np.random.SeedSequence([seed, level_index]).generate_state(1)[0])
    noisy, truth = perturb(H, NoiseSpec(level, lam, cell_seed))
    t0 = time.perf_counter()
    cfg = replace(cfg, seed=seed)
    sigma, _, swapped = _orient_and_align(H, noisy, cfg, align_any)
    runtime = (time.perf_counter() - t0) * 1e3
    if swapped:
        # score in the solver's orientation: noisy copy into the original
        acc = accuracy(sigma.inverse(), truth.inverse())
        ec = hyperedge_correctness(noisy, H, sigma.inverse())
    else:
        acc = accuracy(sigma, truth)
        ec = hyperedge_correctness(H, noisy, sigma)
    return SweepRow(instance, level, seed, acc, ec, runtime, swapped)


def _orient_and_align(H, noisy, cfg, align_any):
    if noisy.m == 0 or noisy.n == 0:
        return Alignment(), [], False
    return align_any(H, noisy, cfg)


def _run_cell_args(args) -> SweepRow:
    return run_cell(*args)


def aggregate(rows: list[SweepRow]) -> list[AggregateRow]:
    out = []
    for level in sorted({r.level for r in rows}):
        group = [r for r in rows if r.level == level]
        acc = np.array([r.accuracy for r in group])
        ec = np.array([r.edge_correctness for r in group])
        rt = np.array([r.runtime_ms for r in group])
        out.append(AggregateRow(group[0].instance, level, len(group), float(acc.mean()), float(acc.std()),
                                float(ec.mean()), float(ec.std()), float(rt.mean())))
    return out


def sweep(H: Hypergraph, noise_levels, seeds, cfg, instance: str = "", jobs: int = 1,
          lam: float | None = None) -> tuple[list[SweepRow], list[AggregateRow]]:
    """Every (level, seed) cell, plus mean and population std per level.

    Each cell draws its noise from ``(seed, level index)``, so results do not
    depend on ``jobs``.  Raw rows come back sorted by level, then seed.
    """
    levels = list(noise_levels)
    seeds = list(seeds)
    if not levels or not seeds:
        raise ValueError("need at least one noise level and one seed")
    cells = [(H, lvl, li, s, cfg, instance, lam) for li, lvl in enumerate(levels) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_args, cells))
    else:
        rows = [_run_cell_args(c) for c in cells]
    rows.sort(key=lambda r: (r.level, r.seed))
    return rows, aggregate(rows)
