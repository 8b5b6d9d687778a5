import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amrsg.errors import EmptyHypothesis, InputError, InvariantViolation
from amrsg.penman import AmrBank, make_keys_fn, parse_penman
from amrsg.semgraph import (HYPOTHESIS, AmrSg, EvidencePath, build_amr_sg, build_fact_connection_graph,
                            fact_path_counts, find_evidence_paths, graph_keyset,
                            select_active_facts, split_question_choice_nodes)
from helpers import brute_force_paths, networkx_paths, random_pool, random_sg

KEYS = make_keys_fn()


def _as_set(paths):
    return {(p.node_sequence, p.edge_origins) for p in paths}


def test_split_question_choice_nodes():
    q, cs = split_question_choice_nodes([{"a", "b", "x"}, {"a", "b", "y"}, {"a", "b", "x", "z"}])
    assert q == {"a", "b"}
    assert cs == [{"x"}, {"y"}, {"x", "z"}]
    with pytest.raises(EmptyHypothesis):
        split_question_choice_nodes([{"a"}, set()])
    with pytest.raises(EmptyHypothesis):
        split_question_choice_nodes([])


def _chain_example():
    hyp = parse_penman("(s / seismograph :ARG1-of (u / use-01 :ARG2 (e / earthquake)))")
    f1 = parse_penman("(t / tool :domain (s / seismograph))")
    f2 = parse_penman("(m / measure-01 :instrument (t / tool) :ARG1 (e / earthquake))")
    f3 = parse_penman("(c / cat :mod (b / black))")
    return hyp, AmrBank([("f1", f1), ("f2", f2), ("f3", f3)])


def test_chain_merge_and_cut():
    hyp, bank = _chain_example()
    sg = build_amr_sg(hyp, bank, KEYS, {"seismograph", "use-01"}, {"earthquake"})
    sg.validate()
    assert sg.merged_fact_ids == {"f1", "f2"}
    assert sg.nodes == {"seismograph", "use-01", "earthquake", "tool", "measure-01"}
    assert ("earthquake", "use-01", HYPOTHESIS) not in sg.edges
    assert ("seismograph", "use-01", HYPOTHESIS) in sg.edges
    paths = find_evidence_paths(sg)
    assert [p.chain() for p in paths] == ["seismograph→tool→measure-01→earthquake"]
    assert paths[0].edge_origins == ("f1", "f2", "f2")


def test_transitive_merge_through_fact_only_keys():
    hyp = parse_penman("(a / alpha :ARG0 (b / beta))")
    bank = AmrBank([("far", parse_penman("(y / yak :ARG0 (z / zebra))")),
                    ("mid", parse_penman("(x / xenon :ARG0 (y / yak))")),
                    ("near", parse_penman("(b / beta :ARG0 (x / xenon))"))])
    sg = build_amr_sg(hyp, bank, KEYS, {"alpha"}, {"beta"})
    assert sg.merged_fact_ids == {"far", "mid", "near"}


def test_partition_and_reserved_id_checks():
    hyp, bank = _chain_example()
    with pytest.raises(InputError):
        build_amr_sg(hyp, bank, KEYS, {"seismograph"}, {"earthquake"})
    with pytest.raises(InputError):
        build_amr_sg(hyp, AmrBank([(HYPOTHESIS, hyp)]), KEYS, {"seismograph", "use-01"}, {"earthquake"})


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_merge_order_independent(seed):
    rng = random.Random(seed)
    hyp, bank, q, c = random_pool(rng)
    base = build_amr_sg(hyp, bank, KEYS, q, c)
    entries = list(bank.entries)
    rng.shuffle(entries)
    assert build_amr_sg(hyp, AmrBank(entries), KEYS, q, c) == base


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_merge_monotone_in_pool(seed):
    rng = random.Random(seed)
    hyp, bank, q, c = random_pool(rng)
    ids = bank.ids()
    small = bank.subset(ids[: len(ids) // 2])
    a = build_amr_sg(hyp, small, KEYS, q, c)
    b = build_amr_sg(hyp, bank, KEYS, q, c)
    assert a.nodes <= b.nodes and a.edges <= b.edges and a.merged_fact_ids <= b.merged_fact_ids


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_paths_match_permutation_oracle(seed, max_nodes):
    sg = random_sg(random.Random(seed), max_nodes=7)
    sg.validate()
    paths = find_evidence_paths(sg, max_nodes)
    assert len(_as_set(paths)) == len(paths)
    assert _as_set(paths) == brute_force_paths(sg, max_nodes)
    for p in paths:
        p.validate(sg)
        assert len(p.node_sequence) <= max_nodes


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_networkx_oracle_agrees_with_permutation_oracle(seed):
    sg = random_sg(random.Random(seed), max_nodes=7)
    assert networkx_paths(sg, 6) == brute_force_paths(sg, 6)


def test_parallel_edges_give_distinct_paths():
    sg = AmrSg(frozenset("ab"), frozenset({("a", "b", "f1"), ("a", "b", "f2"), ("a", "b", HYPOTHESIS)}),
               frozenset("a"), frozenset("b"), frozenset({"f1", "f2"}))
    assert [p.edge_origins for p in find_evidence_paths(sg)] == [("f1",), ("f2",)]


def test_paths_never_use_hypothesis_edges():
    sg = AmrSg(frozenset("abc"), frozenset({("a", "c", HYPOTHESIS), ("b", "c", "f")}),
               frozenset("a"), frozenset("b"), frozenset({"f"}))
    assert find_evidence_paths(sg) == []
    with pytest.raises(InputError):
        find_evidence_paths(sg, 1)


def test_evidence_path_validate_rejects_bad_paths():
    sg = AmrSg(frozenset("abc"), frozenset({("a", "c", "f"), ("b", "c", "f")}),
               frozenset("a"), frozenset("b"), frozenset({"f"}))
    EvidencePath(("a", "c", "b"), ("f", "f")).validate(sg)
    for nodes, origins in [(("a", "b"), ("f",)), (("c", "b"), ("f",)), (("a", "c"), ("f",)),
                           (("a", "c", "b"), ("f",)), (("a", "c", "b"), ("f", HYPOTHESIS))]:
        with pytest.raises(InvariantViolation):
            EvidencePath(nodes, origins).validate(sg)


def test_active_fact_ranking_and_cap():
    paths = []
    # fact fNN appears on NN % 4 paths; scores break ties, ids break the rest
    for i in range(20):
        for _ in range(i % 4):
            paths.append(EvidencePath(("q", "c"), (f"f{i:02d}",)))
    scores = {f"f{i:02d}": float(i % 3) for i in range(20)}
    active = select_active_facts(paths, scores, cap=15)
    assert len(active) == 15
    counts = fact_path_counts(paths)
    keys = [(-counts[f], -scores[f], f) for f in active]
    assert keys == sorted(keys)
    assert active[:5] == ["f11", "f07", "f19", "f03", "f15"]
    assert not {f for f in scores if counts[f] == 0} & set(active)
    with pytest.raises(InputError):
        select_active_facts(paths, scores, cap=0)


def test_connection_graph():
    hyp, bank = _chain_example()
    sg = build_amr_sg(hyp, bank, KEYS, {"seismograph", "use-01"}, {"earthquake"})
    keysets = {f: graph_keyset(bank[f], KEYS(bank[f])) for f in ("f1", "f2")}
    cg = build_fact_connection_graph(sg, graph_keyset(hyp, KEYS(hyp)), ["f2", "f1"], keysets)
    assert cg.node_labels == (HYPOTHESIS, "f2", "f1")
    assert cg.adjacency.tolist() == [[1, 1, 1], [1, 1, 1], [1, 1, 1]]
    cg = build_fact_connection_graph(sg, {"zzz"}, ["f1"], keysets)
    assert cg.adjacency.tolist() == [[1, 0], [0, 1]]
    assert cg.n_facts == 1
    with pytest.raises(InvariantViolation):
        build_fact_connection_graph(sg, {"zzz"}, ["f3"], {"f3": {"cat"}})


def test_inactive_facts_stay_out_of_the_connection_graph():
    hyp, bank = _chain_example()
    bank = AmrBank(list(bank.entries) + [("f4", parse_penman("(s / seismograph :mod (o / old))"))])
    sg = build_amr_sg(hyp, bank, KEYS, {"seismograph", "use-01"}, {"earthquake"})
    assert "f4" in sg.merged_fact_ids
    paths = find_evidence_paths(sg)
    active = select_active_facts(paths, {})
    assert "f4" not in active
    keysets = {f: graph_keyset(bank[f], KEYS(bank[f])) for f in active}
    cg = build_fact_connection_graph(sg, graph_keyset(hyp, KEYS(hyp)), active, keysets)
    assert "f4" not in cg.node_labels
    assert np.array_equal(cg.adjacency, cg.adjacency.T)
