"""Explicit joint tables over finite variables, exact CI tests, fixtures and a Gibbs sampler.

Tables are numpy arrays with one axis per variable in declaration order;
flattened files use row-major (C) order, i.e. the last variable varies fastest.
Random draws use numpy's ``Generator`` (PCG64) seeded from an integer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Udag, UdagError, clique_masks, decompose, members, star_adjacency, to_mask

NORMALIZATION_TOL = 1e-12
CI_TOL = 1e-9
EVENT_FLOOR = 1e-12


class NonPositiveDistribution(UdagError):
    pass


class ZeroProbabilityEvidence(UdagError):
    pass


class UnsupportedStrictness(UdagError):
    pass


class VariableMismatch(UdagError):
    pass


class DiscreteDistribution:
    """Joint probability table; immutable by convention."""

    def __init__(self, names: Sequence[str], cards: Sequence[int], table, metadata: Mapping | None = None):
        cards = tuple(int(c) for c in cards)
        if len(names) != len(cards):
            raise ValueError("names and cards differ in length")
        if any(c < 1 for c in cards):
            raise ValueError("cardinalities must be positive")
        table = np.asarray(table, dtype=float)
        if table.size != int(np.prod(cards, dtype=np.int64)):
            raise ValueError(f"table has {table.size} entries, expected {int(np.prod(cards))}")
        table = table.reshape(cards)
        if (table < 0).any():
            raise ValueError("negative probability")
        total = table.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL * max(1, table.size):
            raise ValueError(f"table sums to {total!r}, not 1")
        self.names = tuple(names)
        self.cards = cards
        self.table = table
        self.table.flags.writeable = False
        self.metadata = dict(metadata or {})

    def __repr__(self):
        return f"DiscreteDistribution({list(zip(self.names, self.cards))})"

    @property
    def n(self) -> int:
        return len(self.cards)

    @classmethod
    def from_unnormalized(cls, names, cards, weights, metadata=None):
        w = np.asarray(weights, dtype=float)
        return cls(names, cards, w / w.sum(), metadata)

    def is_positive(self) -> bool:
        return bool((self.table > 0).all())

    def marginal_table(self, keep: Iterable[int]) -> np.ndarray:
        """Marginal over ``keep`` with axes in ascending variable order."""
        keep = sorted(set(keep))
        drop = tuple(i for i in range(self.n) if i not in keep)
        return self.table.sum(axis=drop) if drop else self.table

    def matches(self, G: Udag) -> None:
        if self.n != G.n:
            raise VariableMismatch(f"distribution has {self.n} variables, graph has {G.n} nodes")


def marginalize(p: DiscreteDistribution, keep: Iterable[int]) -> DiscreteDistribution:
    keep = sorted(set(keep))
    t = p.marginal_table(keep)
    return DiscreteDistribution([p.names[i] for i in keep], [p.cards[i] for i in keep], t / t.sum())


def condition(p: DiscreteDistribution, evidence: Mapping[int, int]) -> DiscreteDistribution:
    """Slice on ``evidence`` (variable index -> value) and renormalize over the remaining variables."""
    index = tuple(evidence.get(i, slice(None)) for i in range(p.n))
    t = p.table[index]
    mass = t.sum()
    if mass <= 0:
        raise ZeroProbabilityEvidence(f"p(evidence) = 0 for {dict(evidence)}")
    rest = [i for i in range(p.n) if i not in evidence]
    return DiscreteDistribution([p.names[i] for i in rest], [p.cards[i] for i in rest], t / mass)


def ci_deviation(p: DiscreteDistribution, X: Iterable[int], Y: Iterable[int], Z: Iterable[int] = ()) -> float:
    """Largest ``|p(x,y|z) - p(x|z) p(y|z)|`` over ``z`` with ``p(z) > 1e-12``."""
    xs, ys, zs = sorted(set(X)), sorted(set(Y)), sorted(set(Z))
    if set(xs) & set(ys) or set(xs) & set(zs) or set(ys) & set(zs):
        raise ValueError("X, Y, Z must be disjoint")
    if not xs or not ys:
        return 0.0
    order = xs + ys + zs
    joint = p.marginal_table(order)
    # marginal_table returns ascending axes; move them into X, Y, Z order
    asc = sorted(order)
    joint = np.transpose(joint, [asc.index(v) for v in order])
    shape = (int(np.prod([p.cards[v] for v in xs])), int(np.prod([p.cards[v] for v in ys])),
             int(np.prod([p.cards[v] for v in zs], dtype=np.int64)))
    joint = joint.reshape(shape)
    pz = joint.sum(axis=(0, 1))
    ok = pz > EVENT_FLOOR
    if not ok.any():
        return 0.0
    j = joint[:, :, ok] / pz[ok]
    px = j.sum(axis=1, keepdims=True)
    py = j.sum(axis=0, keepdims=True)
    return float(np.abs(j - px * py).max())


def ci_test_exact(p: DiscreteDistribution, X, Y, Z=(), tol: float = CI_TOL) -> bool:
    return ci_deviation(p, X, Y, Z) <= tol


def sample(p: DiscreteDistribution, m: int, seed: int) -> np.ndarray:
    """``m`` i.i.d. configurations as an ``(m, n)`` integer array."""
    rng = np.random.default_rng(seed)
    flat = rng.choice(p.table.size, size=m, p=p.table.ravel())
    return np.stack(np.unravel_index(flat, p.cards), axis=1)


# -- fixtures -------------------------------------------------------------------

def _clique_potential(rng, cards, clique) -> np.ndarray:
    shape = [cards[v] if v in clique else 1 for v in range(len(cards))]
    return np.exp(rng.uniform(-1.0, 1.0, size=shape))


def sample_markov_fixture(G: Udag, seed: int, strictness: str = "dag_or_ug_exact",
                          cards: Sequence[int] | int = 2) -> DiscreteDistribution:
    """Positive distribution built as a product of kernels ``q_i(C_i | bd(C_i))``.

    Each kernel is a normalized product of ``exp(U[-1, 1])`` potentials over
    the cliques of the star graph of component ``i``.  For DAGs, UGs and LWF
    chain graphs the result satisfies the global Markov property; for other
    UDAGs it only has the chained form, and ``metadata["markov_guaranteed"]``
    is False.
    """
    if strictness not in ("dag_or_ug_exact", "thm5_form"):
        raise UnsupportedStrictness(f"unknown strictness {strictness!r}")
    guaranteed = G.is_dag() or G.is_ug() or G.is_lwf_cg()
    if strictness == "dag_or_ug_exact" and not (G.is_dag() or G.is_ug()):
        raise UnsupportedStrictness("dag_or_ug_exact needs an all-directed or all-undirected graph")
    cards = [cards] * G.n if isinstance(cards, int) else list(cards)
    rng = np.random.default_rng(seed)
    dec = decompose(G)
    log_p = np.zeros(cards)
    for comp, bd in zip(dec.components, dec.boundaries):
        c, b = to_mask(comp), to_mask(bd)
        adj = star_adjacency(G, c, b)
        kernel = np.ones([1] * G.n)
        for k in clique_masks(G.n, adj, c | b):
            kernel = kernel * _clique_potential(rng, cards, set(members(k)))
        comp_axes = tuple(comp)
        kernel = kernel / kernel.sum(axis=comp_axes, keepdims=True)
        log_p = log_p + np.log(kernel)
    table = np.exp(log_p)
    table = np.broadcast_to(table, cards) / table.sum()
    meta = {"graph": repr(G), "seed": seed, "strictness": strictness, "markov_guaranteed": guaranteed}
    return DiscreteDistribution(G.names, cards, table, metadata=meta)


def random_table(n: int, seed: int, cards: Sequence[int] | int = 2, positive: bool = True) -> DiscreteDistribution:
    """Unstructured random joint table; with ``positive=False`` about a quarter of the cells are zero."""
    cards = [cards] * n if isinstance(cards, int) else list(cards)
    rng = np.random.default_rng(seed)
    w = rng.gamma(1.0, size=cards)
    if not positive:
        w = w * (rng.random(cards) > 0.25)
        if w.sum() == 0:
            w.flat[0] = 1.0
    return DiscreteDistribution.from_unnormalized(default_var_names(n), cards, w)


def default_var_names(n):
    from .graph import default_names
    return default_names(n)


# -- Gibbs sampler for one component -----------------------------------------------

@dataclass
class GibbsTrace:
    component: int
    sweeps: int
    nodes: list[int]
    boundary: list[int]
    # one entry per boundary configuration with positive probability
    boundary_configs: list[tuple] = field(default_factory=list)
    empirical: list[np.ndarray] = field(default_factory=list)
    exact: list[np.ndarray] = field(default_factory=list)
    tv: list[float] = field(default_factory=list)

    @property
    def max_tv(self) -> float:
        return max(self.tv) if self.tv else 0.0

    def to_json(self, names) -> dict:
        return {
            "component": self.component,
            "nodes": [names[v] for v in self.nodes],
            "boundary": [names[v] for v in self.boundary],
            "sweeps": self.sweeps,
            "burn_in": burn_in(self.sweeps),
            "per_boundary": [
                {"boundary_values": list(map(int, b)), "tv": tv}
                for b, tv in zip(self.boundary_configs, self.tv)
            ],
            "max_tv": self.max_tv,
        }


def burn_in(sweeps: int) -> int:
    return int(0.2 * sweeps)


def gibbs_run(p: DiscreteDistribution, G: Udag, i: int, sweeps: int, seed: int) -> GibbsTrace:
    """Random-scan Gibbs sampling of component ``C_i`` with its boundary clamped.

    A sweep is ``|C_i|`` single-site updates, each at a uniformly chosen node
    ``A`` drawn from ``p(A | bd(C_i), C_i \\ A)``.  The first 20% of sweeps are
    discarded; the state after every later sweep is counted.
    """
    p.matches(G)
    if not p.is_positive():
        raise NonPositiveDistribution("Gibbs sampling needs a strictly positive distribution")
    dec = decompose(G)
    if not 0 <= i < len(dec.components):
        raise IndexError(f"component index {i} out of range")
    comp = sorted(dec.components[i])
    bd = sorted(dec.boundaries[i])
    axes = sorted(comp + bd)
    joint = p.marginal_table(axes)
    # reorder axes to (boundary..., component...)
    joint = np.transpose(joint, [axes.index(v) for v in bd + comp])
    rng = np.random.default_rng(seed)
    trace = GibbsTrace(component=i, sweeps=sweeps, nodes=comp, boundary=bd)
    comp_cards = [p.cards[v] for v in comp]
    k = len(comp)
    burn = burn_in(sweeps)
    for bvals in itertools.product(*[range(p.cards[v]) for v in bd]):
        local = joint[bvals]
        exact = local / local.sum()
        # conditionals p(A_j | rest of component, boundary), indexed by full state
        # cumulative along axis j so a uniform draw inverts the conditional cdf
        cums = [np.cumsum(local / local.sum(axis=j, keepdims=True), axis=j) for j in range(k)]
        state = [int(rng.integers(c)) for c in comp_cards]
        counts = np.zeros(comp_cards)
        sites = rng.integers(k, size=(sweeps, k))
        draws = rng.random((sweeps, k))
        for s in range(sweeps):
            for j, u in zip(sites[s], draws[s]):
                idx = list(state)
                idx[j] = slice(None)
                cdf = cums[j][tuple(idx)]
                state[j] = min(int(np.searchsorted(cdf, u * cdf[-1], side="right")), comp_cards[j] - 1)
            if s >= burn:
                counts[tuple(state)] += 1
        empirical = counts / counts.sum()
        trace.boundary_configs.append(bvals)
        trace.empirical.append(empirical)
        trace.exact.append(exact)
        trace.tv.append(float(0.5 * np.abs(empirical - exact).sum()))
    return trace
