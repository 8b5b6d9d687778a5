"""Semantic graph construction over hypothesis and fact AMRs, and path analytics.

Nodes are concept keys; edges are undirected and tagged with the graph they
came from (``HYPOTHESIS`` or a fact id).  Evidence paths run from question
nodes to choice nodes over fact edges only.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyHypothesis, InputError, InvariantViolation
from .penman import AmrBank, AmrGraph

HYPOTHESIS = "HYPOTHESIS"

KeyEdge = tuple[str, str, str]  # (node_a, node_b, origin) with node_a < node_b
KeysFn = Callable[[AmrGraph], Mapping[str, str]]


@dataclass(frozen=True)
class AmrSg:
    nodes: frozenset[str]
    edges: frozenset[KeyEdge]
    question_nodes: frozenset[str]
    choice_nodes: frozenset[str]
    merged_fact_ids: frozenset[str]

    def validate(self) -> None:
        if self.question_nodes & self.choice_nodes:
            raise InvariantViolation("question and choice nodes overlap")
        for a, b, origin in self.edges:
            if not a < b:
                raise InvariantViolation(f"edge ({a}, {b}) not stored in canonical order")
            if a not in self.nodes or b not in self.nodes:
                raise InvariantViolation(f"edge ({a}, {b}) has an endpoint outside the node set")
            if origin == HYPOTHESIS:
                if (a in self.question_nodes and b in self.choice_nodes) or \
                        (b in self.question_nodes and a in self.choice_nodes):
                    raise InvariantViolation(f"uncut hypothesis edge ({a}, {b})")
            elif origin not in self.merged_fact_ids:
                raise InvariantViolation(f"edge origin {origin!r} was never merged")

    def fact_edges(self) -> list[KeyEdge]:
        return sorted(e for e in self.edges if e[2] != HYPOTHESIS)


@dataclass(frozen=True)
class EvidencePath:
    node_sequence: tuple[str, ...]
    edge_origins: tuple[str, ...]

    def chain(self, arrow: str = "→") -> str:
        return arrow.join(self.node_sequence)

    def facts(self) -> set[str]:
        return set(self.edge_origins)

    def validate(self, sg: AmrSg) -> None:
        nodes, origins = self.node_sequence, self.edge_origins
        if len(origins) != len(nodes) - 1 or len(nodes) < 2:
            raise InvariantViolation(f"malformed path {nodes}")
        if nodes[0] not in sg.question_nodes or nodes[-1] not in sg.choice_nodes:
            raise InvariantViolation(f"path {self.chain()} does not run question -> choice")
        if len(set(nodes)) != len(nodes):
            raise InvariantViolation(f"path {self.chain()} repeats a node")
        for a, b, origin in zip(nodes, nodes[1:], origins):
            if origin == HYPOTHESIS or (min(a, b), max(a, b), origin) not in sg.edges:
                raise InvariantViolation(f"path {self.chain()} uses a missing or hypothesis edge")


@dataclass(frozen=True)
class FactConnectionGraph:
    node_labels: tuple[str, ...]
    adjacency: np.ndarray

    @property
    def n_facts(self) -> int:
        return len(self.node_labels) - 1


def graph_keyset(graph: AmrGraph, keys: Mapping[str, str]) -> set[str]:
    return {keys[v] for v in graph.variables}


def graph_key_edges(graph: AmrGraph, keys: Mapping[str, str]) -> set[tuple[str, str]]:
    """Undirected, label-free key pairs; self-edges from collapsed keys dropped."""
    pairs = set()
    for src, _, tgt in graph.edges:
        a, b = keys[src], keys[tgt]
        if a != b:
            pairs.add((a, b) if a < b else (b, a))
    return pairs


def split_question_choice_nodes(hypothesis_keysets: Sequence[Iterable[str]]):
    """Question nodes are shared by every choice's hypothesis; the rest are choice nodes.

    Returns ``(Q, [C_1, ..., C_J])``.
    """
    keysets = [set(ks) for ks in hypothesis_keysets]
    if not keysets or any(not ks for ks in keysets):
        raise EmptyHypothesis("every hypothesis must contribute at least one node")
    question = set.intersection(*keysets)
    return question, [ks - question for ks in keysets]


def build_amr_sg(hypothesis: AmrGraph, pool: AmrBank, keys_fn: KeysFn,
                 question_nodes: Iterable[str], choice_nodes: Iterable[str]) -> AmrSg:
    """Grow the graph from the hypothesis by merging every pool fact reachable through shared keys.

    Hypothesis edges between a question node and a choice node are cut.  The
    result is the fixpoint, so it does not depend on pool order.
    """
    q, c = frozenset(question_nodes), frozenset(choice_nodes)
    hyp_keys = keys_fn(hypothesis)
    hyp_nodes = graph_keyset(hypothesis, hyp_keys)
    if q & c or (q | c) != hyp_nodes:
        raise InputError("question/choice nodes are not a partition of the hypothesis keys")

    nodes = set(hyp_nodes)
    edges: set[KeyEdge] = set()
    for a, b in graph_key_edges(hypothesis, hyp_keys):
        if (a in q and b in c) or (a in c and b in q):
            continue
        edges.add((a, b, HYPOTHESIS))

    facts = []
    for fact_id, graph in pool.entries:
        if fact_id == HYPOTHESIS:
            raise InputError(f"fact id {HYPOTHESIS!r} is reserved")
        keys = keys_fn(graph)
        facts.append((fact_id, graph_keyset(graph, keys), graph_key_edges(graph, keys)))

    merged: set[str] = set()
    changed = True
    while changed:
        changed = False
        for fact_id, keyset, key_edges in facts:
            if fact_id in merged or not keyset & nodes:
                continue
            merged.add(fact_id)
            nodes |= keyset
            edges.update((a, b, fact_id) for a, b in key_edges)
            changed = True
    return AmrSg(frozenset(nodes), frozenset(edges), q, c, frozenset(merged))


def find_evidence_paths(sg: AmrSg, max_path_nodes: int = 8) -> list[EvidencePath]:
    """All simple question-to-choice paths over fact edges with at most ``max_path_nodes`` nodes.

    Parallel edges from different facts give distinct paths.  Start nodes and
    neighbours are visited in lexicographic order.
    """
    if max_path_nodes < 2:
        raise InputError("max_path_nodes must be >= 2")
    adj: dict[str, list[tuple[str, str]]] = {}
    for a, b, origin in sg.edges:
        if origin == HYPOTHESIS:
            continue
        adj.setdefault(a, []).append((b, origin))
        adj.setdefault(b, []).append((a, origin))
    for nbrs in adj.values():
        nbrs.sort()

    paths: list[EvidencePath] = []
    node_stack: list[str] = []
    origin_stack: list[str] = []
    on_path: set[str] = set()

    def dfs(node: str):
        if node in sg.choice_nodes and node_stack:
            paths.append(EvidencePath(tuple(node_stack) + (node,), tuple(origin_stack)))
        if len(node_stack) + 1 >= max_path_nodes:
            return
        node_stack.append(node)
        on_path.add(node)
        for nbr, origin in adj.get(node, ()):
            if nbr in on_path:
                continue
            origin_stack.append(origin)
            dfs(nbr)
            origin_stack.pop()
        on_path.discard(node)
        node_stack.pop()

    for start in sorted(sg.question_nodes):
        if start in adj:
            dfs(start)
    return paths


def fact_path_counts(paths: Iterable[EvidencePath]) -> Counter:
    """Number of distinct paths each fact appears on."""
    counts: Counter = Counter()
    for p in paths:
        counts.update(p.facts())
    return counts


def select_active_facts(paths: Sequence[EvidencePath], retrieval_scores: Mapping[str, float],
                        cap: int = 15) -> list[str]:
    """Facts on any path, ranked by path count, then retrieval score, then id."""
    if cap < 1:
        raise InputError("active fact cap must be >= 1")
    counts = fact_path_counts(paths)
    ranked = sorted(counts, key=lambda f: (-counts[f], -retrieval_scores.get(f, 0.0), f))
    return ranked[:cap]


def build_fact_connection_graph(sg: AmrSg, hypothesis_keys: Iterable[str], active: Sequence[str],
                                fact_keysets: Mapping[str, Iterable[str]]) -> FactConnectionGraph:
    """Adjacency over [hypothesis, *active]: 1 where two members share a concept key.

    The diagonal is always 1.
    """
    missing = [f for f in active if f not in sg.merged_fact_ids]
    if missing:
        raise InvariantViolation(f"active facts not merged into the graph: {missing}")
    sets = [set(hypothesis_keys)] + [set(fact_keysets[f]) for f in active]
    n = len(sets)
    adjacency = np.eye(n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            if sets[i] & sets[j]:
                adjacency[i, j] = adjacency[j, i] = 1
    return FactConnectionGraph((HYPOTHESIS, *active), adjacency)
