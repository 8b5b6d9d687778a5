"""Random generators and independent oracles shared by the test modules."""
from __future__ import annotations

import itertools
import random

import networkx as nx
import numpy as np

from amrsg.penman import AmrBank, AmrGraph
from amrsg.semgraph import HYPOTHESIS, AmrSg

FIXTURES = __import__("pathlib").Path(__file__).resolve().parent.parent / "fixtures" / "casestudy"

CONCEPTS = ["dog", "cat", "run-01", "want-01", "name", "person", "thing", "big", "city", "and"]
ROLES = [":ARG0", ":ARG1", ":ARG2", ":mod", ":location", ":consist-of", ":op1", ":poss"]
CONSTANTS = ["Earth", "5", "-", "imperative", "New York", 'say "hi"', "3.5", "x"]


def random_amr(rng: random.Random, max_nodes: int = 8) -> AmrGraph:
    """A connected graph (undirected sense) with random directions, roles and attributes."""
    n = rng.randint(1, max_nodes)
    names = [f"v{i}" for i in range(n)]
    rng.shuffle(names)
    variables = {v: rng.choice(CONCEPTS) for v in names}
    edges = []
    for i in range(1, n):
        other = names[rng.randrange(i)]
        pair = (names[i], other) if rng.random() < 0.5 else (other, names[i])
        edges.append((pair[0], rng.choice(ROLES), pair[1]))
    for _ in range(rng.randint(0, n)):
        a, b = rng.choice(names), rng.choice(names)
        edges.append((a, rng.choice(ROLES), b))
    rng.shuffle(edges)
    attributes = [(rng.choice(names), rng.choice([":op1", ":value", ":polarity", ":quant"]),
                   rng.choice(CONSTANTS)) for _ in range(rng.randint(0, 3))]
    return AmrGraph(rng.choice(names), variables, tuple(edges), tuple(attributes))


def to_multidigraph(graph: AmrGraph) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph()
    for var, concept in graph.variables.items():
        attrs = sorted((role, value) for src, role, value in graph.attributes if src == var)
        g.add_node(var, concept=concept, attrs=tuple(attrs))
    for src, role, tgt in graph.edges:
        g.add_edge(src, tgt, role=role)
    return g


def isomorphic(a: AmrGraph, b: AmrGraph) -> bool:
    """Same concepts, attribute multisets and labeled edge multiset up to variable renaming."""
    if len(a.variables) != len(b.variables) or len(a.edges) != len(b.edges):
        return False
    if sorted(r for _, r, _ in a.edges) != sorted(r for _, r, _ in b.edges):
        return False
    node_match = lambda x, y: x["concept"] == y["concept"] and x["attrs"] == y["attrs"]
    edge_match = lambda x, y: sorted(d["role"] for d in x.values()) == sorted(d["role"] for d in y.values())
    return nx.is_isomorphic(to_multidigraph(a), to_multidigraph(b), node_match=node_match,
                            edge_match=edge_match)


def random_sg(rng: random.Random, max_nodes: int = 12, n_facts: int = 4) -> AmrSg:
    """A random semantic graph with fact-tagged edges (parallel edges allowed) and some hypothesis edges."""
    n = rng.randint(2, max_nodes)
    nodes = [f"k{i:02d}" for i in range(n)]
    shuffled = nodes[:]
    rng.shuffle(shuffled)
    n_q = rng.randint(1, max(1, n // 3))
    n_c = rng.randint(1, max(1, (n - n_q) // 2))
    question = frozenset(shuffled[:n_q])
    choice = frozenset(shuffled[n_q:n_q + n_c])
    facts = [f"f{i}" for i in range(n_facts)]
    edges = set()
    p = rng.uniform(0.1, 0.35)
    for a, b in itertools.combinations(nodes, 2):
        for f in facts:
            if rng.random() < p / 2:
                edges.add((a, b, f))
        if rng.random() < 0.1 and not ((a in question and b in choice) or (a in choice and b in question)):
            edges.add((a, b, HYPOTHESIS))
    merged = frozenset(e[2] for e in edges if e[2] != HYPOTHESIS)
    return AmrSg(frozenset(nodes), frozenset(edges), question, choice, merged)


def _fact_adjacency(sg: AmrSg) -> dict[tuple[str, str], set[str]]:
    origins: dict[tuple[str, str], set[str]] = {}
    for a, b, o in sg.edges:
        if o == HYPOTHESIS:
            continue
        origins.setdefault((a, b), set()).add(o)
        origins.setdefault((b, a), set()).add(o)
    return origins


def _expand(seq, origins):
    choices = [sorted(origins[(a, b)]) for a, b in zip(seq, seq[1:])]
    for combo in itertools.product(*choices):
        yield tuple(seq), tuple(combo)


def brute_force_paths(sg: AmrSg, max_path_nodes: int) -> set:
    """Every ordering of distinct nodes that starts in Q, ends in C and follows fact edges."""
    origins = _fact_adjacency(sg)
    out = set()
    nodes = sorted(sg.nodes)
    for length in range(2, max_path_nodes + 1):
        for seq in itertools.permutations(nodes, length):
            if seq[0] not in sg.question_nodes or seq[-1] not in sg.choice_nodes:
                continue
            if all((a, b) in origins for a, b in zip(seq, seq[1:])):
                out.update(_expand(seq, origins))
    return out


def networkx_paths(sg: AmrSg, max_path_nodes: int) -> set:
    """Same set as :func:`brute_force_paths`, enumerated by networkx for larger graphs."""
    origins = _fact_adjacency(sg)
    g = nx.Graph()
    g.add_nodes_from(sg.nodes)
    g.add_edges_from(origins)
    out = set()
    for q in sg.question_nodes:
        for c in sg.choice_nodes:
            for seq in nx.all_simple_paths(g, q, c, cutoff=max_path_nodes - 1):
                out.update(_expand(seq, origins))
    return out


def random_pool(rng: random.Random, n_facts: int = 8, vocab: int = 14):
    """A hypothesis graph, a bank of random fact graphs over a small vocabulary, and Q/C."""
    words = [f"w{i}" for i in range(vocab)]

    def graph(concepts):
        names = [f"x{i}" for i in range(len(concepts))]
        edges = [(names[i], ":r", names[rng.randrange(i)]) for i in range(1, len(names))]
        return AmrGraph(names[0], dict(zip(names, concepts)), tuple(edges))

    hyp = graph(rng.sample(words[:6], rng.randint(2, 4)))
    hyp_concepts = sorted(set(hyp.variables.values()))
    q = set(hyp_concepts[: max(1, len(hyp_concepts) // 2)])
    c = set(hyp_concepts) - q
    entries = [(f"fact{i}", graph(rng.sample(words, rng.randint(1, 4)))) for i in range(n_facts)]
    return hyp, AmrBank(entries), q, c


def dense_normalize(A: np.ndarray) -> np.ndarray:
    """Straight-line D^-1/2 A D^-1/2 via explicit diagonal matrices."""
    D = np.diag(A.sum(axis=1).astype(float))
    D_inv_sqrt = np.diag([1.0 / np.sqrt(x) for x in np.diag(D)])
    return D_inv_sqrt @ A.astype(float) @ D_inv_sqrt


def random_unit_diag_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    upper = np.triu(rng.integers(0, 2, (n, n)), 1)
    return upper + upper.T + np.eye(n, dtype=int)
