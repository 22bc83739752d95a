"""Markov and factorization properties of explicit distributions with respect to a UDAG."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .distributions import (
    CI_TOL,
    DiscreteDistribution,
    NonPositiveDistribution,
    ci_deviation,
)
from .graph import (
    Udag,
    ancestral_masks,
    decompose,
    marginal_adjacency,
    members,
    moral_adjacency,
    star_adjacency,
    to_mask,
)
from .io import format_set_statement
from .separation import elementary_triplets, sep_moral_mask

# bound on log-linear interaction terms that must vanish
LOG_TOL = 1e-8


@dataclass
class MarkovReport:
    property: str
    holds: bool
    violations: list[tuple[str, float]] = field(default_factory=list)
    checked: int = 0

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "holds": self.holds,
            "violations": [{"statement": s, "deviation": d} for s, d in self.violations],
        }


def _require_positive(p: DiscreteDistribution, what: str) -> None:
    if not p.is_positive():
        raise NonPositiveDistribution(f"{what} needs a strictly positive distribution")


def _run(p, G, prop, statements, tol) -> MarkovReport:
    report = MarkovReport(prop, True)
    seen = set()
    for xs, ys, zs in statements:
        key = (frozenset(xs), frozenset(ys), frozenset(zs))
        if key in seen:
            continue
        seen.add(key)
        report.checked += 1
        dev = ci_deviation(p, xs, ys, zs)
        if dev > tol:
            report.violations.append((format_set_statement(p.names, xs, ys, zs), dev))
    report.holds = not report.violations
    return report


# -- statement generators ----------------------------------------------------------

def global_statements(G: Udag):
    for a, b, z in elementary_triplets(G.nodes):
        if sep_moral_mask(G, 1 << a, 1 << b, z):
            yield [a], [b], members(z)


def local_statements(G: Udag, w: int):
    adj = moral_adjacency(G, w)
    for a in members(w):
        rest = w & ~adj[a] & ~(1 << a)
        if rest:
            yield [a], members(rest), members(adj[a])


def pairwise_statements(G: Udag, w: int):
    adj = moral_adjacency(G, w)
    for a, b in combinations(members(w), 2):
        if not (adj[a] >> b) & 1:
            yield [a], [b], members(w & ~((1 << a) | (1 << b)))


def _over_ancestral(G, gen):
    for w in ancestral_masks(G):
        if w:
            yield from gen(G, w)


# -- checkers ----------------------------------------------------------------------

def satisfies_global(p: DiscreteDistribution, G: Udag, tol: float = CI_TOL) -> MarkovReport:
    """Every elementary separation of ``G`` must hold in ``p``."""
    p.matches(G)
    return _run(p, G, "global", global_statements(G), tol)


def satisfies_local(p: DiscreteDistribution, G: Udag, tol: float = CI_TOL) -> MarkovReport:
    p.matches(G)
    _require_positive(p, "the local Markov check")
    return _run(p, G, "local", _over_ancestral(G, local_statements), tol)


def satisfies_pairwise(p: DiscreteDistribution, G: Udag, tol: float = CI_TOL) -> MarkovReport:
    p.matches(G)
    _require_positive(p, "the pairwise Markov check")
    return _run(p, G, "pairwise", _over_ancestral(G, pairwise_statements), tol)


CHECKERS = {"global": satisfies_global, "local": satisfies_local, "pairwise": satisfies_pairwise}


# -- maximal ancestral sets ----------------------------------------------------------

def _moral_ne(G: Udag, w: int, a: int) -> int:
    return moral_adjacency(G, w)[a]


def maximal_ancestral_masks_for_node(G: Udag, a: int) -> list[int]:
    """Ancestral ``W`` containing ``a`` whose complement is exactly the descendants
    of the children of ``a`` lying outside ``W``."""
    out = []
    for w in ancestral_masks(G):
        if not (w >> a) & 1:
            continue
        outside_children = G.ch_mask[a] & ~w
        if G.nodes & ~w == G.de_of(outside_children):
            out.append(w)
    return out


def maximal_ancestral_masks_for_node_by_definition(G: Udag, a: int) -> list[int]:
    """Enumeration oracle: every strictly larger ancestral set strictly enlarges ``ne(a)``."""
    sets = [w for w in ancestral_masks(G) if (w >> a) & 1]
    nb = {w: _moral_ne(G, w, a) for w in sets}
    out = []
    for w in sets:
        ok = True
        for w2 in sets:
            if w2 != w and w2 & w == w:
                if not (nb[w] & ~nb[w2] == 0 and nb[w] != nb[w2]):
                    ok = False
                    break
        if ok:
            out.append(w)
    return out


def maximal_ancestral_sets_for_node(G: Udag, A: int) -> list[frozenset]:
    return [frozenset(members(w)) for w in maximal_ancestral_masks_for_node(G, A)]


def _is_complete(adj, m: int) -> bool:
    return all((adj[v] | (1 << v)) & m == m for v in members(m))


def maximal_ancestral_masks_fact(G: Udag) -> list[int]:
    """Nonempty ancestral ``W`` such that, for every node ``A`` outside ``W``, the
    parents in ``W`` of ``({A} | an(A)) - W`` are not complete in the moral graph of ``G_W``."""
    out = []
    for w in ancestral_masks(G):
        if not w:
            continue
        adj = moral_adjacency(G, w)
        ok = True
        for a in members(G.nodes & ~w):
            s = G.an_of(1 << a) & ~w
            if _is_complete(adj, G.pa_of(s) & w):
                ok = False
                break
        if ok:
            out.append(w)
    return out


def maximal_ancestral_masks_fact_by_definition(G: Udag) -> list[int]:
    """Enumeration oracle: the moral graph over ``W`` is a proper subgraph of the
    marginal over ``W`` of the moral graph of every strictly larger ancestral set."""
    sets = [w for w in ancestral_masks(G) if w]
    morals = {w: moral_adjacency(G, w) for w in sets}
    out = []
    for w in sets:
        own = morals[w]
        ok = True
        for w2 in sets:
            if w2 != w and w2 & w == w:
                marg = marginal_adjacency(G.n, morals[w2], w2, w)
                proper = all(own[v] & ~marg[v] == 0 for v in members(w)) and any(
                    own[v] != marg[v] for v in members(w))
                if not proper:
                    ok = False
                    break
        if ok:
            out.append(w)
    return out


def maximal_ancestral_sets_fact(G: Udag) -> list[frozenset]:
    return [frozenset(members(w)) for w in maximal_ancestral_masks_fact(G)]


# -- factorization -------------------------------------------------------------------

def _interactions(log_table: np.ndarray):
    """Yield ``(axes, term)`` for the log-linear expansion with reference level 0.

    ``term`` is the iterated difference of ``log_table`` along ``axes`` with all
    other axes held at level 0; ``p`` factorizes over a graph's cliques iff the
    term vanishes for every non-complete ``axes`` (positive tables).
    """
    k = log_table.ndim
    for r in range(2, k + 1):
        for axes in combinations(range(k), r):
            idx = tuple(slice(None) if i in axes else slice(0, 1) for i in range(k))
            t = log_table[idx]
            for ax in axes:
                t = t - np.take(t, [0], axis=ax)
            yield axes, t


def factorization_gap(table: np.ndarray, variables: list[int], adj) -> tuple[float, tuple]:
    """Largest interaction over a non-complete variable subset, and that subset."""
    log_t = np.log(table)
    worst, where = 0.0, ()
    for axes, term in _interactions(log_t):
        vs = [variables[i] for i in axes]
        if _is_complete(adj, to_mask(vs)):
            continue
        dev = float(np.abs(term).max())
        if dev > worst:
            worst, where = dev, tuple(vs)
    return worst, where


@dataclass
class FactorizationReport:
    holds: bool
    witness: list[int] | None = None
    deviation: float = 0.0
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds


def factorizes_thm4(p: DiscreteDistribution, G: Udag, tol: float = LOG_TOL,
                    maximal_only: bool = False) -> FactorizationReport:
    """Check that ``p(W)`` factorizes over the cliques of the moral graph of ``G_W``
    for every ancestral ``W`` (or only the maximal ones)."""
    p.matches(G)
    _require_positive(p, "the factorization check")
    sets = maximal_ancestral_masks_fact(G) if maximal_only else [w for w in ancestral_masks(G) if w]
    worst = 0.0
    for w in sets:
        vs = members(w)
        table = p.marginal_table(vs)
        adj = moral_adjacency(G, w)
        gap, where = factorization_gap(table, vs, adj)
        worst = max(worst, gap)
        if gap > tol:
            return FactorizationReport(False, witness=vs, deviation=gap,
                                       details={"subset": list(where), "sets_checked": len(sets)})
    return FactorizationReport(True, deviation=worst, details={"sets_checked": len(sets)})


def chain_product(p: DiscreteDistribution, G: Udag) -> np.ndarray:
    """``prod_i p(C_i | bd(C_i))`` as a full table."""
    dec = decompose(G)
    out = np.ones(p.cards)
    for comp, bd in zip(dec.components, dec.boundaries):
        axes = sorted(comp | bd)
        joint = p.marginal_table(axes)
        comp_pos = tuple(axes.index(v) for v in comp)
        cond = joint / joint.sum(axis=comp_pos, keepdims=True)
        shape = [p.cards[v] if v in axes else 1 for v in range(p.n)]
        out = out * cond.reshape(shape)
    return out


def factorizes_thm5(p: DiscreteDistribution, G: Udag, tol: float = CI_TOL,
                    log_tol: float = LOG_TOL) -> FactorizationReport:
    """Chain equality ``p(V) = prod_i p(C_i | bd(C_i))`` and a clique factorization of
    each ``p(C_i, bd(C_i))`` over the star graph of ``C_i``."""
    p.matches(G)
    _require_positive(p, "the factorization check")
    chain_dev = float(np.abs(chain_product(p, G) - p.table).max())
    dec = decompose(G)
    star_devs = []
    witness = None
    for i, (comp, bd) in enumerate(zip(dec.components, dec.boundaries)):
        c, b = to_mask(comp), to_mask(bd)
        vs = members(c | b)
        gap, _ = factorization_gap(p.marginal_table(vs), vs, star_adjacency(G, c, b))
        star_devs.append(gap)
        if gap > log_tol and witness is None:
            witness = vs
    holds = chain_dev <= tol and witness is None
    if chain_dev > tol and witness is None:
        witness = members(G.nodes)
    return FactorizationReport(holds, witness=witness, deviation=max([chain_dev] + star_devs),
                               details={"chain_deviation": chain_dev, "star_deviations": star_devs})


@dataclass
class IdentityRecord:
    component: int
    node: int
    deviation: float


def check_causal_identity(p: DiscreteDistribution, G: Udag, tol: float = CI_TOL) -> list[IdentityRecord]:
    """For each ``A`` in each ``C_i``: max ``|p(A | bd, C_i - A) - p(A | bd, pa(A), ne(A))|``.

    This is a measurement; whether the identity should hold is a modelling
    assumption, so nothing is asserted here.
    """
    p.matches(G)
    _require_positive(p, "the conditional identity check")
    dec = decompose(G)
    out = []
    for i, (comp, bd) in enumerate(zip(dec.components, dec.boundaries)):
        axes = sorted(comp | bd)
        joint = p.marginal_table(axes)
        for a in sorted(comp):
            ax = axes.index(a)
            lhs = joint / joint.sum(axis=ax, keepdims=True)
            cond = (to_mask(bd) | G.pa_mask[a] | G.ne_mask[a]) & ~(1 << a)
            drop = tuple(axes.index(v) for v in axes if v != a and not (cond >> v) & 1)
            small = joint.sum(axis=drop, keepdims=True) if drop else joint
            rhs = small / small.sum(axis=ax, keepdims=True)
            out.append(IdentityRecord(i, a, float(np.abs(lhs - rhs).max())))
    return out
