"""Command-line front end: ``udag <verb> [options]``.

Exit status is 0 on success, 1 on domain errors (message on stderr) and 2 on
usage errors.  Query verbs print JSON; verbs that produce a graph print it in
the edge-list format unless ``--json`` is given.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import anm, distributions, exact_learner, graph, io, markov, separation
from .graph import UdagError, members, to_mask

log = logging.getLogger("udag")


class UsageError(Exception):
    pass


# -- helpers ---------------------------------------------------------------------

def _names_to_ids(G, text: str | None) -> list[int]:
    if text is None or not text.strip():
        return []
    out = []
    for nm in text.split(","):
        nm = nm.strip()
        if nm:
            out.append(G.index(nm))
    return out


def _set_json(G, xs) -> list[str]:
    return [G.names[v] for v in sorted(xs)]


def _graph_json(G) -> dict:
    return {
        "nodes": [G.names[v] for v in members(G.nodes)],
        "directed": [[G.names[a], G.names[b]] for a, b in sorted(G.directed)],
        "undirected": [[G.names[a], G.names[b]] for a, b in sorted(G.undirected)],
    }


def _ug_json(H) -> dict:
    return {
        "nodes": [H.names[v] for v in members(H.nodes)],
        "edges": [[H.names[a], H.names[b]] for a, b in sorted(H.edges)],
    }


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _emit_graph(G, as_json: bool) -> None:
    if as_json:
        _emit(_graph_json(G))
    else:
        sys.stdout.write(io.format_graph(G))


def _load_distribution(args, G):
    p = io.read_distribution(args.dist)
    if list(p.names) != list(G.names):
        raise distributions.VariableMismatch(
            f"distribution variables {list(p.names)} differ from graph nodes {list(G.names)}")
    return p


# -- verbs -----------------------------------------------------------------------

def cmd_separate(args) -> int:
    G = io.read_graph(args.graph)
    X, Y, Z = (_names_to_ids(G, s) for s in (args.x, args.y, args.z))
    if args.criterion == "moral":
        sep = separation.separated_moral(G, X, Y, Z)
    else:
        sep, _ = separation.separated_reach(G, X, Y, Z)
    _emit({"separated": sep})
    return 0


def cmd_reach(args) -> int:
    G = io.read_graph(args.graph)
    X, Z = _names_to_ids(G, args.x), _names_to_ids(G, args.z)
    Y = _names_to_ids(G, args.y)
    if not Y:
        # no target given: report the closure only
        x, z = to_mask(X), to_mask(Z)
        if not x or x & z:
            raise separation.InvalidQuery("X must be nonempty and disjoint from Z")
        u1, u2, u3 = separation.reach_mask(G, x, z)
        _emit({"U1": _set_json(G, members(u1)), "U2": _set_json(G, members(u2)),
               "U3": _set_json(G, members(u3))})
        return 0
    sep, state = separation.separated_reach(G, X, Y, Z)
    _emit(state.to_json(G.names, sep))
    return 0


def cmd_moralize(args) -> int:
    G = io.read_graph(args.graph)
    if args.within:
        W = _names_to_ids(G, args.within)
        H = graph.moral_graph(graph.induced_subgraph(G, W))
    else:
        H = graph.moral_graph(G)
    if args.marginal:
        H = graph.marginal_ug(H, _names_to_ids(G, args.marginal))
    if args.cliques:
        _emit({"cliques": [_set_json(G, c) for c in graph.cliques(H)]})
    elif args.json:
        _emit(_ug_json(H))
    else:
        for a, b in sorted(H.edges):
            print(f"{H.names[a]} -- {H.names[b]}")
    return 0


def cmd_decompose(args) -> int:
    G = io.read_graph(args.graph)
    if args.maximal_for:
        a = G.index(args.maximal_for)
        sets = markov.maximal_ancestral_sets_for_node(G, a)
        _emit({"node": args.maximal_for, "maximal_ancestral_sets": [_set_json(G, s) for s in sets]})
        return 0
    if args.maximal_fact:
        sets = markov.maximal_ancestral_sets_fact(G)
        _emit({"maximal_ancestral_sets": [_set_json(G, s) for s in sets]})
        return 0
    dec = graph.decompose(G)
    _emit({
        "minimal_ancestral_sets": [_set_json(G, w) for w in dec.minimal_ancestral_sets],
        "components": [_set_json(G, c) for c in dec.components],
        "boundaries": [_set_json(G, b) for b in dec.boundaries],
        "star_graphs": [_ug_json(H)["edges"] for H in dec.star_graphs],
    })
    return 0


def cmd_equivalent(args) -> int:
    G1 = io.read_graph(args.graph)
    G2 = io.read_graph(args.other)
    if list(G1.names) != list(G2.names):
        if sorted(G1.names) != sorted(G2.names):
            raise separation.NodeMismatch("graphs are over different node names")
        # align the second graph to the first graph's ids
        pos = {nm: G1.index(nm) for nm in G2.names}
        G2 = graph.Udag(G1.n, [(pos[G2.names[a]], pos[G2.names[b]]) for a, b in G2.directed],
                        [(pos[G2.names[a]], pos[G2.names[b]]) for a, b in G2.undirected], names=G1.names)
    _emit({"equivalent": separation.markov_equivalent(G1, G2)})
    return 0


def cmd_nonseparable(args) -> int:
    G = io.read_graph(args.graph)
    pairs = sorted(tuple(sorted(p)) for p in separation.non_separable_pairs(G))
    _emit({"pairs": [[G.names[a], G.names[b]] for a, b in pairs]})
    return 0


def cmd_transform(args) -> int:
    G = io.read_graph(args.graph)
    H = separation.lemma3_transform(G, _names_to_ids(G, args.w))
    _emit_graph(H, args.json)
    return 0


def cmd_check_markov(args) -> int:
    G = io.read_graph(args.graph)
    p = _load_distribution(args, G)
    props = list(markov.CHECKERS) if args.property == "all" else [args.property]
    reports = [markov.CHECKERS[k](p, G, tol=args.tol).to_json() for k in props]
    _emit(reports[0] if len(reports) == 1 else reports)
    return 0


def cmd_check_factorization(args) -> int:
    G = io.read_graph(args.graph)
    p = _load_distribution(args, G)
    if args.identity:
        recs = markov.check_causal_identity(p, G)
        _emit({"identity": [{"component": r.component, "node": G.names[r.node], "deviation": r.deviation}
                            for r in recs]})
        return 0
    if args.theorem == "4":
        rep = markov.factorizes_thm4(p, G, maximal_only=args.maximal_only)
    else:
        rep = markov.factorizes_thm5(p, G)
    out = {"theorem": int(args.theorem), "holds": rep.holds, "deviation": rep.deviation}
    if rep.witness is not None:
        out["witness"] = _set_json(G, rep.witness)
    _emit(out)
    return 0


def cmd_learn_exact(args) -> int:
    sources = [s for s in (args.oracle, args.from_graph, args.from_dist) if s]
    if len(sources) != 1:
        raise UsageError("give exactly one of --oracle, --from-graph, --from-dist")
    if args.oracle:
        with open(args.oracle, encoding="utf-8") as fh:
            names, triplets = io.parse_oracle(fh.read())
        if args.nodes:
            extra = [nm for nm in args.nodes.split(",") if nm and nm not in names]
            names = names + extra
        oracle = exact_learner.IndependenceOracle(len(names), frozenset(triplets), names=tuple(names))
    elif args.from_graph:
        oracle = exact_learner.oracle_from_graph(io.read_graph(args.from_graph))
    else:
        oracle = exact_learner.oracle_from_distribution(io.read_distribution(args.from_dist))
    cls = {"lwf": "lwf_cg"}.get(args.graph_class, args.graph_class)
    cfg = exact_learner.LearnerConfig(graph_class=cls, line_weight=args.line_weight,
                                      arrow_weight=args.arrow_weight, return_all_optima=args.all,
                                      max_nodes=args.max_nodes)
    res = exact_learner.learn(oracle, cfg)
    if args.json:
        _emit({"objective": res.objective, "graphs_searched": res.graphs_searched,
               "graphs": [_graph_json(G) for G in res.graphs]})
    else:
        for i, G in enumerate(res.graphs):
            if i:
                print()
            print(f"# objective {res.objective:g}")
            sys.stdout.write(io.format_graph(G))
    return 0


def cmd_learn_anm(args) -> int:
    names, data = io.read_csv_columns(args.csv)
    D = anm.Dataset(names, data)
    cfg = anm.AnmConfig(test=args.test, permutations=args.permutations, regressor=args.regressor)
    G, scores = anm.learn_causal(D, args.L, args.seed, cfg, return_scores=True)
    if args.json:
        out = {"graph": _graph_json(G), "p_value": scores[0].p_value if scores else None}
        if args.scores:
            out["scores"] = [{"graph": _graph_json(s.graph), "p_value": s.p_value} for s in scores]
        _emit(out)
    else:
        sys.stdout.write(io.format_graph(G))
        if args.scores:
            for s in scores:
                edges = ", ".join(io.format_graph(s.graph).splitlines()[1:]) or "(no edges)"
                print(f"# p={s.p_value:.6g}  {edges}")
    return 0


def cmd_gibbs(args) -> int:
    G = io.read_graph(args.graph)
    p = _load_distribution(args, G)
    trace = distributions.gibbs_run(p, G, args.component, args.sweeps, args.seed)
    _emit(trace.to_json(G.names))
    return 0


def cmd_export_dot(args) -> int:
    G = io.read_graph(args.graph)
    if args.moral:
        sys.stdout.write(io.ug_to_dot(graph.moral_graph(G)))
    else:
        sys.stdout.write(io.to_dot(G))
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="udag", description="Graphs with directed and undirected edges.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name, fn, help, graph=True):
        sp = sub.add_parser(name, help=help)
        if graph:
            sp.add_argument("-g", "--graph", required=True, help="graph file")
        sp.add_argument("--json", action="store_true", help="JSON output")
        sp.set_defaults(fn=fn)
        return sp

    sp = verb("separate", cmd_separate, "test X _||_ Y | Z")
    sp.add_argument("-x", required=True)
    sp.add_argument("-y", required=True)
    sp.add_argument("-z", default="")
    sp.add_argument("--criterion", choices=["moral", "reach"], default="moral")

    sp = verb("reach", cmd_reach, "reachability sets U1, U2, U3")
    sp.add_argument("-x", required=True)
    sp.add_argument("-y", default="")
    sp.add_argument("-z", default="")

    sp = verb("moralize", cmd_moralize, "moral graph (optionally of an induced subgraph)")
    sp.add_argument("--within", help="moralize the subgraph induced by these nodes")
    sp.add_argument("--marginal", help="then take the marginal subgraph over these nodes")
    sp.add_argument("--cliques", action="store_true", help="print cliques instead of edges")

    sp = verb("decompose", cmd_decompose, "minimal ancestral sets, components, boundaries")
    sp.add_argument("--maximal-for", metavar="NODE", help="maximal ancestral sets for a node instead")
    sp.add_argument("--maximal-fact", action="store_true", help="maximal ancestral sets for factorization")

    sp = verb("equivalent", cmd_equivalent, "Markov equivalence of two graphs")
    sp.add_argument("-G", "--other", required=True, help="second graph file")

    verb("nonseparable", cmd_nonseparable, "non-adjacent pairs no set separates")

    sp = verb("transform", cmd_transform, "replace a minimal ancestral set by its moral graph")
    sp.add_argument("-w", required=True)

    sp = verb("check-markov", cmd_check_markov, "Markov properties of a distribution")
    sp.add_argument("-p", "--dist", required=True, help="distribution JSON")
    sp.add_argument("--property", choices=["global", "local", "pairwise", "all"], default="global")
    sp.add_argument("--tol", type=float, default=distributions.CI_TOL)

    sp = verb("check-factorization", cmd_check_factorization, "factorization checks")
    sp.add_argument("-p", "--dist", required=True)
    sp.add_argument("--theorem", choices=["4", "5"], default="5")
    sp.add_argument("--maximal-only", action="store_true")
    sp.add_argument("--identity", action="store_true", help="measure the component conditional identity")

    sp = verb("learn-exact", cmd_learn_exact, "exhaustive sparsest independence map", graph=False)
    sp.add_argument("--oracle", help="file of 'A _||_ B | c,d' lines")
    sp.add_argument("--nodes", help="extra node names not mentioned in the oracle")
    sp.add_argument("--from-graph", help="use the separations of this graph as the oracle")
    sp.add_argument("--from-dist", help="use the exact independences of this distribution")
    sp.add_argument("--class", dest="graph_class", choices=["udag", "dag", "lwf"], default="udag")
    sp.add_argument("--line-weight", type=float, default=1.0)
    sp.add_argument("--arrow-weight", type=float, default=1.0)
    sp.add_argument("--all", action="store_true", help="return every optimal graph")
    sp.add_argument("--max-nodes", type=int, default=exact_learner.MAX_EXHAUSTIVE_NODES)

    sp = verb("learn-anm", cmd_learn_anm, "additive-noise learner on a CSV", graph=False)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--L", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--test", choices=["gamma", "perm"], default="gamma")
    sp.add_argument("--permutations", type=int, default=500)
    sp.add_argument("--regressor", choices=sorted(anm.REGRESSORS), default="kridge")
    sp.add_argument("--scores", action="store_true", help="also list every scored graph")

    sp = verb("gibbs", cmd_gibbs, "Gibbs sampler for one component")
    sp.add_argument("-p", "--dist", required=True)
    sp.add_argument("-i", "--component", type=int, required=True, help="0-based component index")
    sp.add_argument("--sweeps", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)

    sp = verb("export-dot", cmd_export_dot, "Graphviz DOT")
    sp.add_argument("--moral", action="store_true", help="export the moral graph instead")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"udag {args.verb}: {exc}", file=sys.stderr)
        return 2
    except (UdagError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"udag {args.verb}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
