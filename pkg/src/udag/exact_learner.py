"""Exhaustive search for the sparsest UDAG whose separations are all in an independence oracle.

Hard constraint: every elementary separation of the candidate graph must be
declared independent by the oracle (the graph is an independence map).
Soft constraints: a penalty per undirected edge and per directed edge.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from typing import Iterator

import numpy as np

from .distributions import CI_TOL, DiscreteDistribution, ci_deviation
from .graph import Udag, UdagError, default_names, members, to_mask
from .separation import elementary_triplets, separation_signature

GRAPH_CLASSES = ("udag", "dag", "lwf_cg")
MAX_EXHAUSTIVE_NODES = 5
# below this many candidates a process pool costs more than it saves
PARALLEL_MIN_GRAPHS = 2000


class TooLarge(UdagError):
    pass


class SizeMismatch(UdagError):
    pass


class NoConsistentGraph(UdagError):
    pass


@dataclass(frozen=True)
class IndependenceOracle:
    """Elementary independences ``(a, b, Z)``; stored with ``a < b``, queried in either order."""

    n: int
    triplets: frozenset = frozenset()
    names: tuple = ()

    def __post_init__(self):
        canon = set()
        for a, b, z in self.triplets:
            z = frozenset(z)
            if a == b or a in z or b in z:
                raise ValueError(f"malformed triplet {(a, b, sorted(z))}")
            if not (0 <= a < self.n and 0 <= b < self.n and all(0 <= c < self.n for c in z)):
                raise ValueError(f"triplet {(a, b, sorted(z))} outside node range")
            canon.add((min(a, b), max(a, b), z))
        object.__setattr__(self, "triplets", frozenset(canon))
        if not self.names:
            object.__setattr__(self, "names", tuple(default_names(self.n)))

    def __contains__(self, item) -> bool:
        a, b, z = item
        return (min(a, b), max(a, b), frozenset(z)) in self.triplets

    def __len__(self):
        return len(self.triplets)

    def mask_set(self) -> frozenset:
        return frozenset((a, b, to_mask(z)) for a, b, z in self.triplets)


@dataclass(frozen=True)
class LearnerConfig:
    graph_class: str = "udag"
    line_weight: float = 1.0
    arrow_weight: float = 1.0
    return_all_optima: bool = False
    max_nodes: int = MAX_EXHAUSTIVE_NODES

    def __post_init__(self):
        if self.graph_class not in GRAPH_CLASSES:
            raise ValueError(f"graph_class must be one of {GRAPH_CLASSES}")
        if self.line_weight < 0 or self.arrow_weight < 0:
            raise ValueError("edge weights must be non-negative")


@dataclass
class LearnResult:
    graphs: list[Udag]
    objective: float
    graphs_searched: int
    details: dict = field(default_factory=dict)


# -- enumeration ------------------------------------------------------------------

@lru_cache(maxsize=None)
def _dag_edge_sets(n: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    pairs = list(combinations(range(n), 2))
    out = []
    for choice in product((0, 1, 2), repeat=len(pairs)):
        edges = tuple((a, b) if c == 1 else (b, a) for (a, b), c in zip(pairs, choice) if c)
        if _acyclic(n, edges):
            out.append(edges)
    return tuple(out)


def _acyclic(n, edges) -> bool:
    indeg = [0] * n
    out = [[] for _ in range(n)]
    for a, b in edges:
        out[a].append(b)
        indeg[b] += 1
    stack = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for w in out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    return seen == n


def _ug_edge_sets(n: int) -> Iterator[tuple[tuple[int, int], ...]]:
    pairs = list(combinations(range(n), 2))
    for bits in range(1 << len(pairs)):
        yield tuple(p for i, p in enumerate(pairs) if (bits >> i) & 1)


def _lwf_edge_sets(n: int):
    pairs = list(combinations(range(n), 2))
    for choice in product((0, 1, 2, 3), repeat=len(pairs)):
        arrows = tuple((a, b) if c == 1 else (b, a) for (a, b), c in zip(pairs, choice) if c in (1, 2))
        lines = tuple(p for p, c in zip(pairs, choice) if c == 3)
        yield arrows, lines


def enumerate_graphs(n: int, graph_class: str = "udag", names=None,
                     max_nodes: int = MAX_EXHAUSTIVE_NODES) -> Iterator[Udag]:
    """Every labeled graph of the class on ``n`` nodes, exactly once.

    ``udag`` is the product of all DAGs and all UGs (DAG-major order).
    """
    if graph_class not in GRAPH_CLASSES:
        raise ValueError(f"unknown graph class {graph_class!r}")
    if n > max_nodes:
        raise TooLarge(f"exhaustive enumeration capped at {max_nodes} nodes (got {n})")
    if graph_class == "dag":
        for arrows in _dag_edge_sets(n):
            yield Udag(n, arrows, (), names=names)
    elif graph_class == "udag":
        ugs = list(_ug_edge_sets(n))
        for arrows in _dag_edge_sets(n):
            for lines in ugs:
                yield Udag(n, arrows, lines, names=names)
    else:
        for arrows, lines in _lwf_edge_sets(n):
            if not _acyclic(n, arrows):
                continue
            G = Udag(n, arrows, lines, names=names)
            if G.is_lwf_cg():
                yield G


def count_graphs(n: int, graph_class: str = "udag") -> int:
    if graph_class == "udag":
        return len(_dag_edge_sets(n)) * (1 << (n * (n - 1) // 2))
    return sum(1 for _ in enumerate_graphs(n, graph_class, max_nodes=max(n, MAX_EXHAUSTIVE_NODES)))


# -- oracles --------------------------------------------------------------------

def oracle_from_graph(G: Udag) -> IndependenceOracle:
    sig = separation_signature(G)
    return IndependenceOracle(G.n, frozenset((a, b, frozenset(members(z))) for a, b, z in sig),
                              names=G.names)


def oracle_from_distribution(p: DiscreteDistribution, tol: float = CI_TOL) -> IndependenceOracle:
    full = (1 << p.n) - 1
    trip = set()
    for a, b, z in elementary_triplets(full):
        zs = members(z)
        if ci_deviation(p, [a], [b], zs) <= tol:
            trip.add((a, b, frozenset(zs)))
    return IndependenceOracle(p.n, frozenset(trip), names=p.names)


def consistent(G: Udag, oracle: IndependenceOracle) -> bool:
    """True iff every elementary separation of ``G`` is declared independent by ``oracle``.

    Triplets are visited with ``|Z|`` ascending and the check stops at the first
    separation the oracle lacks.
    """
    from .separation import reach_mask

    if G.n != oracle.n:
        raise SizeMismatch(f"graph has {G.n} nodes, oracle has {oracle.n}")
    allowed = oracle.mask_set()
    for a, b, z in elementary_triplets(G.nodes):
        if (a, b, z) in allowed:
            continue
        u1, u2, _ = reach_mask(G, 1 << a, z)
        if not ((u1 | u2) >> b) & 1:
            return False
    return True


# -- search -----------------------------------------------------------------------

def _edge_key(G: Udag):
    return (sorted(G.undirected), sorted(G.directed))


def _objective(G: Udag, cfg: LearnerConfig) -> float:
    return cfg.line_weight * len(G.undirected) + cfg.arrow_weight * len(G.directed)


def _triplet_index(n: int) -> dict:
    return {t: i for i, t in enumerate(elementary_triplets((1 << n) - 1))}


def _signature_bits(G: Udag, index: dict) -> int:
    bits = 0
    for t in separation_signature(G):
        bits |= 1 << index[t]
    return bits


def _signature_chunk(args):
    n, graph_class, lo, hi = args
    index = _triplet_index(n)
    graphs = list(enumerate_graphs(n, graph_class))[lo:hi]
    return [_signature_bits(G, index) for G in graphs]


def _worker_count() -> int:
    env = os.environ.get("UDAG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


@lru_cache(maxsize=8)
def search_space(n: int, graph_class: str) -> tuple[list[Udag], list[int]]:
    """All graphs of the class with their separation signatures as bitmasks over
    ``elementary_triplets`` order.  Cached per process."""
    graphs = list(enumerate_graphs(n, graph_class))
    workers = _worker_count()
    if workers > 1 and len(graphs) > PARALLEL_MIN_GRAPHS:
        step = -(-len(graphs) // workers)
        chunks = [(n, graph_class, lo, min(lo + step, len(graphs))) for lo in range(0, len(graphs), step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            sigs = [s for part in pool.map(_signature_chunk, chunks) for s in part]
    else:
        index = _triplet_index(n)
        sigs = [_signature_bits(G, index) for G in graphs]
    return graphs, sigs


def learn(oracle: IndependenceOracle, config: LearnerConfig = LearnerConfig()) -> LearnResult:
    """Sparsest graphs of the configured class that are independence maps of ``oracle``.

    Ties are broken by (sorted undirected edges, sorted directed edges) unless
    ``return_all_optima`` is set.
    """
    n = oracle.n
    if n > config.max_nodes:
        raise TooLarge(f"exhaustive search capped at {config.max_nodes} nodes (got {n})")
    graphs, sigs = search_space(n, config.graph_class)
    index = _triplet_index(n)
    allowed = 0
    for t in oracle.mask_set():
        allowed |= 1 << index[t]
    forbidden = ~allowed
    objectives = np.array([_objective(G, config) for G in graphs])
    ok = np.array([(s & forbidden) == 0 for s in sigs], dtype=bool)
    if not ok.any():
        raise NoConsistentGraph("no graph of the class is an independence map of the oracle")
    best = objectives[ok].min()
    winners = [graphs[i] for i in np.flatnonzero(ok & np.isclose(objectives, best, rtol=0, atol=1e-12))]
    winners.sort(key=_edge_key)
    if not config.return_all_optima:
        winners = winners[:1]
    names = oracle.names
    if names and tuple(names) != graphs[0].names:
        winners = [Udag(G.n, G.directed, G.undirected, names=names) for G in winners]
    return LearnResult(winners, float(best), len(graphs),
                       details={"consistent_graphs": int(ok.sum())})

