"""Named example graphs shared by the tests, in the edge-list text format."""

from udag.io import parse_graph

# C and D are non-adjacent yet never separated
NONSEPARABLE = """\
node A B C D E F H
A -> C
B -> D
C -> E
D -> H
E -- F
H -- F
F -> C
"""

# no LWF chain graph represents the same independences
NO_LWF_EQUIVALENT = """\
node A B C D E F I J K L M N
A -> E
B -> E
C -> F
D -> F
E -- F
I -- J
E -> I
J -> F
K -> I
L -> I
M -> J
N -> J
"""

# the LWF chain graph the argument constructs from the independences above
NO_LWF_CANDIDATE = """\
node A B C D E F I J K L M N
A -> E
B -> E
C -> F
D -> F
E -- F
I -- J
E -- I
J -- F
K -> I
L -> I
M -> J
N -> J
"""

# local Markov statements only needed on maximal ancestral sets
LOCAL_REDUCTION = """\
node A B C D E F H I J K
B -> A
B -> C
B -> H
D -> E
D -> K
C -> I
I -- J
J -- K
F -- H
"""

# factorizations only needed on maximal ancestral sets
FACTOR_REDUCTION = """\
node A B C D E F H I
A -> C
B -> E
A -> F
B -> I
C -- D
E -- D
F -- H
I -- H
"""


def load(text):
    return parse_graph(text)


def ids(G, names):
    """``"A,B"`` or an iterable of names to a list of node ids."""
    if isinstance(names, str):
        names = [s for s in names.split(",") if s]
    return [G.index(nm) for nm in names]


def named(G, xs):
    return "".join(sorted(G.names[v] for v in xs))
