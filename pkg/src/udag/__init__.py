"""UDAGs: graphs with directed and undirected edges where only directed cycles are forbidden."""

from .graph import (
    Decomposition,
    DirectedCycle,
    DuplicateEdge,
    InvalidNode,
    SelfLoop,
    Udag,
    UdagError,
    Ug,
    an,
    ch,
    cliques,
    de,
    decompose,
    induced_subgraph,
    is_ancestral_set,
    marginal_ug,
    moral_graph,
    ne,
    new_udag,
    pa,
)
from .separation import (
    lemma3_transform,
    markov_equivalent,
    non_separable_pairs,
    separated_moral,
    separated_reach,
)

__version__ = "0.1.0"

__all__ = [
    "Decomposition",
    "DirectedCycle",
    "DuplicateEdge",
    "InvalidNode",
    "SelfLoop",
    "Udag",
    "UdagError",
    "Ug",
    "an",
    "ch",
    "cliques",
    "de",
    "decompose",
    "induced_subgraph",
    "is_ancestral_set",
    "marginal_ug",
    "moral_graph",
    "ne",
    "new_udag",
    "pa",
    "lemma3_transform",
    "markov_equivalent",
    "non_separable_pairs",
    "separated_moral",
    "separated_reach",
]
