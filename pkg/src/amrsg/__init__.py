"""AMR-based semantic graphs for multi-hop multiple-choice QA.

Parse PENMAN AMRs, merge a hypothesis AMR with retrieved fact AMRs into one
concept-keyed graph, pick the facts that lie on question-to-choice paths,
and score choices with a small multi-head GCN.
"""
from .penman import AmrBank, AmrGraph, concept_keys, parse_amr_bank, parse_penman, serialize_penman
from .retrieval import assemble_pool, build_index, generate_hypothesis, retrieve
from .semgraph import (HYPOTHESIS, AmrSg, EvidencePath, build_amr_sg, build_fact_connection_graph,
                       find_evidence_paths, select_active_facts, split_question_choice_nodes)
from .reasoner import (ReasonerParams, backward_and_gradcheck, gate_and_score, gcn_forward,
                       normalize_adjacency, pool_node_features, score_choices)

__version__ = "0.1.0"
