"""Graphs with directed and undirected edges (UDAGs) and plain undirected graphs.

Node sets are handled internally as integer bitmasks (bit ``i`` set means node
``i`` is a member); the public functions take and return ``frozenset`` of node
ids.  A graph carries a vertex mask so that induced subgraphs keep the node ids
of their parent graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

MAX_NODES = 64

NodeSet = frozenset


class UdagError(Exception):
    """Base class for domain errors raised by this package."""


class SelfLoop(UdagError):
    def __init__(self, node: int):
        self.node = node
        super().__init__(f"self-loop on node {node}")


class DuplicateEdge(UdagError):
    def __init__(self, edge, kind: str):
        self.edge = edge
        super().__init__(f"duplicate {kind} edge {edge}")


class DirectedCycle(UdagError):
    def __init__(self, cycle: Sequence[int]):
        self.cycle = list(cycle)
        super().__init__("directed cycle " + " -> ".join(map(str, self.cycle)))


class InvalidNode(UdagError):
    pass


# -- bitmask helpers ---------------------------------------------------------

def to_mask(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask``, including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _closure(start: int, step: Sequence[int]) -> int:
    seen = start
    frontier = start
    while frontier:
        nxt = 0
        for v in members(frontier):
            nxt |= step[v]
        frontier = nxt & ~seen
        seen |= frontier
    return seen


# -- graphs ------------------------------------------------------------------

class Udag:
    """Graph over nodes ``0..n-1`` with directed edges and undirected edges.

    Only directed cycles are forbidden.  A pair of nodes may be joined by one
    directed edge and one undirected edge at the same time.  Instances are
    immutable.
    """

    __slots__ = ("n", "names", "nodes", "directed", "undirected", "pa_mask", "ch_mask", "ne_mask",
                 "up_mask", "down_mask")

    def __init__(self, n: int, directed: Iterable[tuple[int, int]] = (),
                 undirected: Iterable[tuple[int, int]] = (), names: Sequence[str] | None = None,
                 nodes: int | None = None):
        if not 0 <= n <= MAX_NODES:
            raise InvalidNode(f"node count {n} outside [0, {MAX_NODES}]")
        names = list(names) if names is not None else default_names(n)
        if len(names) != n:
            raise InvalidNode(f"expected {n} names, got {len(names)}")
        full = (1 << n) - 1
        nodes = full if nodes is None else nodes
        if nodes & ~full:
            raise InvalidNode("vertex mask outside node range")

        arrows: set[tuple[int, int]] = set()
        lines: set[tuple[int, int]] = set()
        for a, b in directed:
            _check_pair(a, b, nodes)
            if (a, b) in arrows:
                raise DuplicateEdge((a, b), "directed")
            if (b, a) in arrows:
                raise DirectedCycle([a, b, a])
            arrows.add((a, b))
        for a, b in undirected:
            _check_pair(a, b, nodes)
            key = (min(a, b), max(a, b))
            if key in lines:
                raise DuplicateEdge(key, "undirected")
            lines.add(key)

        pa = [0] * n
        ch = [0] * n
        ne = [0] * n
        for a, b in arrows:
            pa[b] |= 1 << a
            ch[a] |= 1 << b
        for a, b in lines:
            ne[a] |= 1 << b
            ne[b] |= 1 << a

        cycle = _find_directed_cycle(n, ch, nodes)
        if cycle:
            raise DirectedCycle(cycle)

        object.__setattr__(self, "n", n)
        object.__setattr__(self, "names", tuple(names))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "directed", frozenset(arrows))
        object.__setattr__(self, "undirected", frozenset(lines))
        object.__setattr__(self, "pa_mask", tuple(pa))
        object.__setattr__(self, "ch_mask", tuple(ch))
        object.__setattr__(self, "ne_mask", tuple(ne))
        object.__setattr__(self, "up_mask", tuple(p | q for p, q in zip(pa, ne)))
        object.__setattr__(self, "down_mask", tuple(c | q for c, q in zip(ch, ne)))

    def __setattr__(self, name, value):
        raise AttributeError("Udag is immutable")

    def __eq__(self, other):
        if not isinstance(other, Udag):
            return NotImplemented
        return (self.n, self.nodes, self.directed, self.undirected) == (
            other.n, other.nodes, other.directed, other.undirected)

    def __hash__(self):
        return hash((self.n, self.nodes, self.directed, self.undirected))

    def __repr__(self):
        arrows = ", ".join(f"{self.names[a]}->{self.names[b]}" for a, b in sorted(self.directed))
        lines = ", ".join(f"{self.names[a]}--{self.names[b]}" for a, b in sorted(self.undirected))
        return f"Udag(n={self.n}, directed=[{arrows}], undirected=[{lines}])"

    @property
    def node_ids(self) -> list[int]:
        return members(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.directed) + len(self.undirected)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidNode(f"unknown node {name!r}") from None

    def adjacent_mask(self, v: int) -> int:
        return self.pa_mask[v] | self.ch_mask[v] | self.ne_mask[v]

    # mask-level relations; ``an``/``de`` follow edges that are directed or
    # undirected and include the start set itself
    def pa_of(self, mask: int) -> int:
        out = 0
        for v in members(mask):
            out |= self.pa_mask[v]
        return out

    def ch_of(self, mask: int) -> int:
        out = 0
        for v in members(mask):
            out |= self.ch_mask[v]
        return out

    def ne_of(self, mask: int) -> int:
        out = 0
        for v in members(mask):
            out |= self.ne_mask[v]
        return out

    def an_of(self, mask: int) -> int:
        return _closure(mask, self.up_mask)

    def de_of(self, mask: int) -> int:
        return _closure(mask, self.down_mask)

    def is_dag(self) -> bool:
        return not self.undirected

    def is_ug(self) -> bool:
        return not self.directed

    def is_lwf_cg(self) -> bool:
        """No double edges and no semi-directed cycles."""
        if any((min(a, b), max(a, b)) in self.undirected for a, b in self.directed):
            return False
        return all(not (self.de_of(1 << b) >> a) & 1 for a, b in self.directed)


class Ug:
    """Undirected graph over nodes ``0..n-1`` restricted to a vertex mask."""

    __slots__ = ("n", "names", "nodes", "edges", "adj")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = (),
                 names: Sequence[str] | None = None, nodes: int | None = None):
        names = list(names) if names is not None else default_names(n)
        nodes = (1 << n) - 1 if nodes is None else nodes
        keys = set()
        adj = [0] * n
        for a, b in edges:
            _check_pair(a, b, nodes)
            key = (min(a, b), max(a, b))
            keys.add(key)
            adj[a] |= 1 << b
            adj[b] |= 1 << a
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "names", tuple(names))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(keys))
        object.__setattr__(self, "adj", tuple(adj))

    def __setattr__(self, name, value):
        raise AttributeError("Ug is immutable")

    def __eq__(self, other):
        if not isinstance(other, Ug):
            return NotImplemented
        return (self.n, self.nodes, self.edges) == (other.n, other.nodes, other.edges)

    def __hash__(self):
        return hash((self.n, self.nodes, self.edges))

    def __repr__(self):
        body = ", ".join(f"{self.names[a]}--{self.names[b]}" for a, b in sorted(self.edges))
        return f"Ug(n={self.n}, nodes={[self.names[v] for v in members(self.nodes)]}, edges=[{body}])"

    @classmethod
    def from_adjacency(cls, n, adj, names=None, nodes=None) -> "Ug":
        edges = [(a, b) for a in range(n) for b in members(adj[a]) if a < b]
        return cls(n, edges, names=names, nodes=nodes)

    def has_edge(self, a: int, b: int) -> bool:
        return bool((self.adj[a] >> b) & 1)

    def neighbors(self, v: int) -> frozenset:
        return frozenset(members(self.adj[v]))

    def is_complete(self, nodes: Iterable[int]) -> bool:
        m = to_mask(nodes)
        return all((self.adj[v] | (1 << v)) & m == m for v in members(m))

    def is_subgraph_of(self, other: "Ug") -> bool:
        return self.edges <= other.edges


def default_names(n: int) -> list[str]:
    if n <= 26:
        return [chr(ord("A") + i) for i in range(n)]
    return [f"X{i}" for i in range(n)]


def _check_pair(a: int, b: int, nodes: int) -> None:
    for v in (a, b):
        if not isinstance(v, int) or v < 0 or not (nodes >> v) & 1:
            raise InvalidNode(f"node {v!r} not in graph")
    if a == b:
        raise SelfLoop(a)


def _find_directed_cycle(n: int, ch: Sequence[int], nodes: int) -> list[int] | None:
    color = [0] * n
    parent = [-1] * n
    for root in members(nodes):
        if color[root]:
            continue
        stack = [(root, iter(members(ch[root])))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            for w in it:
                if color[w] == 0:
                    color[w] = 1
                    parent[w] = v
                    stack.append((w, iter(members(ch[w]))))
                    break
                if color[w] == 1:
                    cycle = [w]
                    u = v
                    while u != w:
                        cycle.append(u)
                        u = parent[u]
                    cycle.append(w)
                    return cycle[::-1]
            else:
                color[v] = 2
                stack.pop()
    return None


# -- public operations --------------------------------------------------------

def new_udag(n: int, directed: Iterable[tuple[int, int]] = (),
             undirected: Iterable[tuple[int, int]] = (), names: Sequence[str] | None = None) -> Udag:
    """Build and validate a UDAG; raises SelfLoop, DirectedCycle or DuplicateEdge."""
    return Udag(n, directed, undirected, names=names)


def _check_set(G, X) -> int:
    m = to_mask(X)
    if m & ~G.nodes:
        raise InvalidNode(f"node set {sorted(X)} not within graph")
    return m


def pa(G: Udag, X: Iterable[int]) -> frozenset:
    return frozenset(members(G.pa_of(_check_set(G, X))))


def ch(G: Udag, X: Iterable[int]) -> frozenset:
    return frozenset(members(G.ch_of(_check_set(G, X))))


def ne(G: Udag, X: Iterable[int]) -> frozenset:
    return frozenset(members(G.ne_of(_check_set(G, X))))


def an(G: Udag, X: Iterable[int]) -> frozenset:
    return frozenset(members(G.an_of(_check_set(G, X))))


def de(G: Udag, X: Iterable[int]) -> frozenset:
    return frozenset(members(G.de_of(_check_set(G, X))))


def is_ancestral_set(G: Udag, W: Iterable[int]) -> bool:
    m = _check_set(G, W)
    return G.an_of(m) == m


def induced_mask(G: Udag, w: int) -> Udag:
    directed = [(a, b) for a, b in G.directed if (w >> a) & 1 and (w >> b) & 1]
    undirected = [(a, b) for a, b in G.undirected if (w >> a) & 1 and (w >> b) & 1]
    return Udag(G.n, directed, undirected, names=G.names, nodes=w & G.nodes)


def induced_subgraph(G: Udag, W: Iterable[int]) -> Udag:
    """Subgraph induced by ``W``; node ids are kept, nodes outside ``W`` are dropped."""
    return induced_mask(G, _check_set(G, W))


def sections(G: Udag, within: int | None = None) -> list[int]:
    """Connected components of the undirected part of ``G`` restricted to ``within``.

    Singleton components are included.
    """
    within = G.nodes if within is None else within & G.nodes
    step = [q & within for q in G.ne_mask]
    out = []
    left = within
    while left:
        v = left & -left
        comp = _closure(v, step)
        out.append(comp)
        left &= ~comp
    return out


def moral_adjacency(G: Udag, within: int | None = None) -> list[int]:
    """Adjacency masks of the moral graph of the subgraph of ``G`` induced by ``within``."""
    within = G.nodes if within is None else within & G.nodes
    adj = [0] * G.n
    for v in members(within):
        adj[v] = (G.pa_mask[v] | G.ch_mask[v] | G.ne_mask[v]) & within
    for sec in sections(G, within):
        parents = G.pa_of(sec) & within
        for v in members(parents):
            adj[v] |= parents & ~(1 << v)
    return adj


def moral_graph(G: Udag) -> Ug:
    """Moral graph: join adjacent nodes and parents of a common undirected section."""
    return Ug.from_adjacency(G.n, moral_adjacency(G), names=G.names, nodes=G.nodes)


def marginal_adjacency(n: int, adj: Sequence[int], nodes: int, w: int) -> list[int]:
    out = [0] * n
    outside = nodes & ~w
    for a in members(w):
        reach = adj[a]
        frontier = reach & outside
        seen = frontier
        while frontier:
            nxt = 0
            for v in members(frontier):
                nxt |= adj[v]
            reach |= nxt
            frontier = nxt & outside & ~seen
            seen |= frontier
        out[a] = reach & w & ~(1 << a)
    return out


def marginal_ug(H: Ug, W: Iterable[int]) -> Ug:
    """Marginal subgraph of ``H`` over ``W``: edges of ``H`` plus paths outside ``W``."""
    w = to_mask(W)
    if w & ~H.nodes:
        raise InvalidNode("node set not within graph")
    return Ug.from_adjacency(H.n, marginal_adjacency(H.n, H.adj, H.nodes, w), names=H.names, nodes=w)


def clique_masks(n: int, adj: Sequence[int], nodes: int) -> list[int]:
    """Maximal cliques by Bron-Kerbosch with pivoting."""
    out: list[int] = []

    def expand(r: int, p: int, x: int) -> None:
        if not p and not x:
            out.append(r)
            return
        pivot = max(members(p | x), key=lambda u: popcount(p & adj[u]))
        for v in members(p & ~adj[pivot]):
            expand(r | (1 << v), p & adj[v], x & adj[v])
            p &= ~(1 << v)
            x |= 1 << v

    if nodes:
        expand(0, nodes, 0)
    out.sort(key=lambda m: members(m))
    return out


def cliques(H: Ug) -> list[frozenset]:
    """Maximal complete sets of ``H``, each once, sorted by member list."""
    return [frozenset(members(c)) for c in clique_masks(H.n, H.adj, H.nodes)]


# -- minimal ancestral sets and the component decomposition -------------------

@dataclass(frozen=True)
class Decomposition:
    minimal_ancestral_sets: list[frozenset]
    components: list[frozenset]
    boundaries: list[frozenset]
    star_graphs: list[Ug]


def _order_key(m: int):
    return (popcount(m), members(m))


def minimal_ancestral_masks(G: Udag) -> list[int]:
    sets = {G.an_of(1 << v) for v in members(G.nodes)}
    # any linear extension of inclusion: sort by size, then member list
    return sorted(sets, key=_order_key)


def star_adjacency(G: Udag, comp: int, bd: int) -> list[int]:
    adj = moral_adjacency(G, comp | bd)
    for v in members(bd):
        adj[v] |= bd & ~(1 << v)
    return adj


def decompose(G: Udag) -> Decomposition:
    ws = minimal_ancestral_masks(G)
    comps, bds, stars = [], [], []
    covered = 0
    for w in ws:
        c = w & ~covered
        covered |= w
        bd = G.pa_of(c) & ~c
        comps.append(c)
        bds.append(bd)
        stars.append(Ug.from_adjacency(G.n, star_adjacency(G, c, bd), names=G.names, nodes=c | bd))
    return Decomposition(
        minimal_ancestral_sets=[frozenset(members(w)) for w in ws],
        components=[frozenset(members(c)) for c in comps],
        boundaries=[frozenset(members(b)) for b in bds],
        star_graphs=stars,
    )


def ancestral_masks(G: Udag, within: int | None = None) -> list[int]:
    """All ancestral subsets of ``within`` (default: all nodes), including the empty set.

    Built as unions of single-node closures, so the cost tracks the number of
    ancestral sets rather than 2**n.
    """
    within = G.nodes if within is None else within
    closures = sorted({G.an_of(1 << v) for v in members(within) if G.an_of(1 << v) & ~within == 0})
    found = {0}
    for c in closures:
        found |= {s | c for s in found}
    return sorted(found, key=_order_key)


def all_pairs(nodes: int) -> Iterator[tuple[int, int]]:
    return combinations(members(nodes), 2)


def random_udag(n: int, rng, arrow_prob: float = 0.3, line_prob: float = 0.3,
                names: Sequence[str] | None = None) -> Udag:
    """Random UDAG: arrows follow a random node order, lines are independent coin flips.

    ``rng`` is a ``numpy.random.Generator``.
    """
    order = [int(v) for v in rng.permutation(n)]
    directed, undirected = [], []
    for i, j in combinations(range(n), 2):
        a, b = order[i], order[j]
        if rng.random() < arrow_prob:
            directed.append((a, b))
        if rng.random() < line_prob:
            undirected.append((a, b))
    return Udag(n, directed, undirected, names=names)
