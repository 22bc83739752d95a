"""Text formats: graphs, DOT export, independence oracles, distributions and CSV."""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .graph import Udag, UdagError, members

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_EDGE = re.compile(r"^(\S+)\s*(->|--|<-)\s*(\S+)$")


class FormatError(UdagError):
    pass


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _check_name(name: str, lineno: int) -> str:
    if not _NAME.match(name):
        raise FormatError(f"line {lineno}: invalid node name {name!r}")
    return name


def parse_graph(text: str) -> Udag:
    """Parse the line format: ``a -> b``, ``a -- b``, ``node a``; ``#`` starts a comment.

    Node ids follow order of first appearance.
    """
    names: list[str] = []
    index: dict[str, int] = {}
    directed, undirected = [], []

    def node(name, lineno):
        if name not in index:
            index[_check_name(name, lineno)] = len(names)
            names.append(name)
        return index[name]

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("node ") or line == "node":
            parts = line.split()[1:]
            if not parts:
                raise FormatError(f"line {lineno}: 'node' needs a name")
            for name in parts:
                node(name.rstrip(","), lineno)
            continue
        m = _EDGE.match(line)
        if not m:
            raise FormatError(f"line {lineno}: cannot parse {raw!r}")
        a, op, b = m.groups()
        ia, ib = node(a, lineno), node(b, lineno)
        if op == "->":
            directed.append((ia, ib))
        elif op == "<-":
            directed.append((ib, ia))
        else:
            undirected.append((ia, ib))
    return Udag(len(names), directed, undirected, names=names)


def read_graph(path) -> Udag:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def format_graph(G: Udag) -> str:
    lines = []
    touched = 0
    for a, b in sorted(G.undirected):
        lines.append(f"{G.names[a]} -- {G.names[b]}")
        touched |= (1 << a) | (1 << b)
    for a, b in sorted(G.directed):
        lines.append(f"{G.names[a]} -> {G.names[b]}")
        touched |= (1 << a) | (1 << b)
    # declare every node up front so ids survive a round trip
    header = "node " + " ".join(G.names[v] for v in members(G.nodes)) if G.nodes else ""
    return "\n".join([header] + lines if header else lines) + "\n"


def to_dot(G: Udag, name: str = "G") -> str:
    out = [f"digraph {name} {{"]
    for v in members(G.nodes):
        out.append(f'  "{G.names[v]}";')
    for a, b in sorted(G.directed):
        out.append(f'  "{G.names[a]}" -> "{G.names[b]}";')
    for a, b in sorted(G.undirected):
        out.append(f'  "{G.names[a]}" -> "{G.names[b]}" [dir=none];')
    out.append("}")
    return "\n".join(out) + "\n"


def ug_to_dot(H, name: str = "H") -> str:
    out = [f"graph {name} {{"]
    for v in members(H.nodes):
        out.append(f'  "{H.names[v]}";')
    for a, b in sorted(H.edges):
        out.append(f'  "{H.names[a]}" -- "{H.names[b]}";')
    out.append("}")
    return "\n".join(out) + "\n"


# -- independence oracles -----------------------------------------------------

_TRIPLET = re.compile(r"^(\S+)\s*_\|\|_\s*(\S+)\s*(?:\|\s*(.*))?$")


def parse_oracle(text: str, names=None):
    """Parse ``A _||_ B | c,d`` lines.  ``node`` lines may fix the node order.

    Returns ``(names, triplets)`` with triplets as ``(a, b, frozenset)``.
    """
    names = list(names) if names is not None else []
    index = {nm: i for i, nm in enumerate(names)}
    fixed = bool(names)
    raw_triplets = []

    def node(nm, lineno):
        if nm not in index:
            if fixed:
                raise FormatError(f"line {lineno}: unknown node {nm!r}")
            index[_check_name(nm, lineno)] = len(names)
            names.append(nm)
        return index[nm]

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("node "):
            for nm in line.split()[1:]:
                node(nm.rstrip(","), lineno)
            continue
        m = _TRIPLET.match(line)
        if not m:
            raise FormatError(f"line {lineno}: cannot parse {raw!r}")
        a, b, rest = m.groups()
        z = [s.strip() for s in (rest or "").split(",") if s.strip()]
        raw_triplets.append((node(a, lineno), node(b, lineno), frozenset(node(c, lineno) for c in z)))
    return names, raw_triplets


def format_triplet(names, a: int, b: int, z) -> str:
    return f"{names[a]} _||_ {names[b]} | " + ",".join(names[c] for c in sorted(z))


def format_set_statement(names, xs, ys, zs) -> str:
    def fmt(s):
        return ",".join(names[v] for v in sorted(s))
    return f"{fmt(xs)} _||_ {fmt(ys)} | {fmt(zs)}"


# -- distributions ------------------------------------------------------------

def distribution_to_json(p) -> str:
    """Row-major table: the last variable varies fastest."""
    doc = {
        "variables": [{"name": nm, "card": int(c)} for nm, c in zip(p.names, p.cards)],
        "table": [float(x) for x in p.table.ravel(order="C")],
    }
    return json.dumps(doc, indent=1)


def distribution_from_json(text: str):
    from .distributions import DiscreteDistribution

    doc = json.loads(text)
    try:
        names = [v["name"] for v in doc["variables"]]
        cards = [int(v["card"]) for v in doc["variables"]]
        table = np.asarray(doc["table"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed distribution file: {exc}") from None
    return DiscreteDistribution(names, cards, table)


def read_distribution(path):
    return distribution_from_json(Path(path).read_text(encoding="utf-8"))


def write_samples_csv(path, names, samples) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in samples:
            w.writerow([int(x) for x in row])


def read_csv_columns(path) -> tuple[list[str], np.ndarray]:
    """Header row of names, one observation per row; returns ``(names, data[m, d])``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    try:
        data = np.array([[float(c) for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric value ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise FormatError(f"{path}: rows do not match header width {len(header)}")
    return header, data
