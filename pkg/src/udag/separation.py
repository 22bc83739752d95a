"""Separation in UDAGs.

Two criteria are implemented and must agree:

* ``separated_moral`` moralizes the subgraph induced by the ancestral closure of
  ``X | Y | Z`` and looks for a path from ``X`` to ``Y`` avoiding ``Z``;
* ``separated_reach`` grows the three reachability sets ``U1, U2, U3`` from
  ``X`` with seven closure rules and checks whether ``Y`` was reached.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

from .graph import (
    Udag,
    UdagError,
    ancestral_masks,
    induced_mask,
    members,
    moral_adjacency,
    popcount,
    submasks,
    to_mask,
)


class InvalidQuery(UdagError):
    pass


class PreconditionViolated(UdagError):
    pass


class NodeMismatch(UdagError):
    pass


@dataclass(frozen=True)
class SeparationQuery:
    X: frozenset
    Y: frozenset
    Z: frozenset = frozenset()

    def __post_init__(self):
        for field in ("X", "Y", "Z"):
            object.__setattr__(self, field, frozenset(getattr(self, field)))
        if not self.X or not self.Y:
            raise InvalidQuery("X and Y must be nonempty")
        if self.X & self.Y or self.X & self.Z or self.Y & self.Z:
            raise InvalidQuery("X, Y and Z must be pairwise disjoint")

    def masks(self, G: Udag) -> tuple[int, int, int]:
        x, y, z = to_mask(self.X), to_mask(self.Y), to_mask(self.Z)
        if (x | y | z) & ~G.nodes:
            raise InvalidQuery("query mentions nodes outside the graph")
        return x, y, z


@dataclass(frozen=True)
class ReachState:
    U1: frozenset
    U2: frozenset
    U3: frozenset

    def to_json(self, names, separated: bool) -> dict:
        return {
            "U1": [names[v] for v in sorted(self.U1)],
            "U2": [names[v] for v in sorted(self.U2)],
            "U3": [names[v] for v in sorted(self.U3)],
            "separated": separated,
        }


# -- moral-graph criterion -----------------------------------------------------

def _path_avoiding(adj, x: int, y: int, z: int) -> bool:
    seen = x
    frontier = x
    while frontier:
        nxt = 0
        for v in members(frontier):
            nxt |= adj[v]
        if nxt & y:
            return True
        frontier = nxt & ~z & ~seen
        seen |= frontier
    return False


def sep_moral_mask(G: Udag, x: int, y: int, z: int) -> bool:
    w = G.an_of(x | y | z)
    adj = moral_adjacency(G, w)
    return not _path_avoiding(adj, x, y, z)


def separated_moral(G: Udag, X: Iterable[int], Y: Iterable[int], Z: Iterable[int] = ()) -> bool:
    x, y, z = SeparationQuery(X, Y, Z).masks(G)
    return sep_moral_mask(G, x, y, z)


# -- reachability criterion -----------------------------------------------------

def reach_mask(G: Udag, x: int, z: int) -> tuple[int, int, int]:
    """Fixed point of the seven rules starting from ``U1 = U3 = {}``, ``U2 = X``.

    Rules, for ``D`` ranging over the graph:

    1. ``C in U2``, ``D -> C`` or ``D - C``, ``D not in Z``  =>  ``D in U2``
    2. ``C in U1 | U2``, ``C -> D``, ``D not in Z``          =>  ``D in U1``
    3. ``C in U1``, ``C - D``, ``D not in Z``                =>  ``D in U1``
    4. ``C in U1 | U2``, ``C -> D``, ``D in Z``              =>  ``D in U3``
    5. ``C in U1``, ``C - D``, ``D in Z``                    =>  ``D in U3``
    6. ``C in U3``, ``C - D``                                =>  ``D in U3``
    7. ``C in U3``, ``D -> C``, ``D not in Z``               =>  ``D in U2``

    All rules are monotone, so the closure does not depend on the order in
    which they fire; each node is expanded at most once per set.
    """
    pa, ch, ne, up = G.pa_mask, G.ch_mask, G.ne_mask, G.up_mask
    outside = G.nodes & ~z
    u1, u2, u3 = 0, x, 0
    new1, new2, new3 = 0, x, 0
    while new1 | new2 | new3:
        into1 = into2 = into3 = 0
        for c in members(new2):
            into2 |= up[c]          # rule 1
            into1 |= ch[c]          # rules 2, 4
        for c in members(new1):
            into1 |= ch[c] | ne[c]  # rules 2-5
        for c in members(new3):
            into3 |= ne[c]          # rule 6
            into2 |= pa[c]          # rule 7
        into3 |= into1 & z
        new1 = into1 & outside & ~u1
        new2 = into2 & outside & ~u2
        new3 = into3 & ~u3
        u1 |= new1
        u2 |= new2
        u3 |= new3
    return u1, u2, u3


def separated_reach(G: Udag, X: Iterable[int], Y: Iterable[int],
                    Z: Iterable[int] = ()) -> tuple[bool, ReachState]:
    x, y, z = SeparationQuery(X, Y, Z).masks(G)
    u1, u2, u3 = reach_mask(G, x, z)
    state = ReachState(frozenset(members(u1)), frozenset(members(u2)), frozenset(members(u3)))
    return not (y & (u1 | u2)), state


# -- elementary triplets -----------------------------------------------------------

def elementary_triplets(nodes: int) -> Iterator[tuple[int, int, int]]:
    """``(a, b, z)`` with ``a < b`` and ``z`` a mask disjoint from both, ``|z|`` ascending."""
    pairs = list(combinations(members(nodes), 2))
    rest = {(a, b): nodes & ~((1 << a) | (1 << b)) for a, b in pairs}
    by_size: dict[int, list] = {}
    for a, b in pairs:
        for z in submasks(rest[(a, b)]):
            by_size.setdefault(popcount(z), []).append((a, b, z))
    for k in sorted(by_size):
        yield from sorted(by_size[k], key=lambda t: (t[0], t[1], members(t[2])))


def separation_signature(G: Udag) -> frozenset:
    """All elementary separations ``(a, b, z_mask)`` of ``G`` with ``a < b``.

    Computed with the reachability rules, one fixed point per ``(a, z)``.
    """
    out = set()
    nodes = G.nodes
    for a in members(nodes)[:-1]:
        rest = nodes & ~(1 << a)
        for z in submasks(rest):
            u1, u2, _ = reach_mask(G, 1 << a, z)
            hit = u1 | u2
            for b in members(rest & ~z):
                if b > a and not (hit >> b) & 1:
                    out.add((a, b, z))
    return frozenset(out)


# -- pairs that no conditioning set separates ---------------------------------------

def non_separable_pairs(G: Udag) -> set[frozenset]:
    """Non-adjacent pairs joined by ``V1 -> V2 - ... - Vk <- Vn`` through ``an(V1 | Vn)``.

    For every undirected section ``S`` it suffices that ``V1`` points into ``S``,
    ``Vn`` points into ``S`` and ``S`` meets ``an({V1, Vn})``: undirected routes
    inside ``S`` may revisit nodes, so any node of ``S`` can be passed through.
    """
    from .graph import sections

    out = set()
    for sec in sections(G):
        into = G.pa_of(sec)
        for a, b in combinations(members(into), 2):
            if (G.adjacent_mask(a) >> b) & 1:
                continue
            if sec & G.an_of((1 << a) | (1 << b)):
                out.add(frozenset((a, b)))
    return out


# -- equivalence-preserving rewrite ------------------------------------------------

def _is_minimal_ancestral(G: Udag, w: int) -> bool:
    for sub in ancestral_masks(G, w):
        if sub != w and popcount(sub) > 1:
            return False
    return True


def transform_mask(G: Udag, w: int) -> Udag:
    if w & ~G.nodes:
        raise PreconditionViolated("W not within graph")
    if popcount(w) < 2:
        raise PreconditionViolated("W must contain more than one node")
    if G.an_of(w) != w:
        raise PreconditionViolated("W is not ancestral")
    if not _is_minimal_ancestral(G, w):
        raise PreconditionViolated("W has a smaller ancestral subset of size > 1")
    inside = lambda e: (w >> e[0]) & 1 and (w >> e[1]) & 1  # noqa: E731
    directed = [e for e in G.directed if not inside(e)]
    undirected = [e for e in G.undirected if not inside(e)]
    adj = moral_adjacency(induced_mask(G, w))
    undirected += [(a, b) for a in members(w) for b in members(adj[a]) if a < b]
    return Udag(G.n, directed, undirected, names=G.names, nodes=G.nodes)


def lemma3_transform(G: Udag, W: Iterable[int]) -> Udag:
    """Replace the subgraph induced by a minimal ancestral set ``W`` (|W| > 1) by its moral graph.

    The result represents the same separations as ``G``.
    """
    return transform_mask(G, to_mask(W))


def markov_equivalent(G1: Udag, G2: Udag) -> bool:
    if G1.n != G2.n or G1.nodes != G2.nodes:
        raise NodeMismatch("graphs are over different node sets")
    for a, b, z in elementary_triplets(G1.nodes):
        x, y = 1 << a, 1 << b
        if sep_moral_mask(G1, x, y, z) != sep_moral_mask(G2, x, y, z):
            return False
    return True
