"""End-to-end processing of multiple-choice questions.

For every question-choice pair: hypothesis -> fact pool -> semantic graph ->
evidence paths -> active facts -> connection graph -> reasoner score.  The
hypothesis AMR of choice ``j`` of question ``qid`` is looked up in the AMR
bank under ``hyp:<qid>:<j>``; fact AMRs are looked up by fact id.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .embedding import HashEmbedding
from .errors import ChoiceOutOfRange, EmptyDataset, InputError, MissingAmr, MissingLabel, UnknownQuestion
from .penman import AmrBank, load_amr_bank, make_keys_fn
from .reasoner import ChoiceScores, Instance, ReasonerParams, pool_node_features, score_choices
from .retrieval import (FactRecord, Question, assemble_pool, build_index, generate_hypothesis,
                        load_corpus, load_questions, retrieve)
from .semgraph import (AmrSg, EvidencePath, FactConnectionGraph, build_amr_sg,
                       build_fact_connection_graph, fact_path_counts, find_evidence_paths,
                       graph_keyset, select_active_facts, split_question_choice_nodes)


def hypothesis_key(question_id: str, choice_index: int) -> str:
    return f"hyp:{question_id}:{choice_index}"


@dataclass
class PairResult:
    question: Question
    choice_index: int
    hypothesis: str
    pool: list[FactRecord]
    sg: AmrSg
    paths: list[EvidencePath]
    active: list[str]
    path_counts: dict[str, int]
    connection: FactConnectionGraph
    instance: Instance
    score: float = 0.0
    probability: float = 0.0

    def to_json(self) -> dict:
        scores = {r.fact_id: r for r in self.pool}
        return {
            "question_id": self.question.id,
            "choice_index": self.choice_index,
            "choice": self.question.choices[self.choice_index],
            "hypothesis": self.hypothesis,
            "pool": [{"fact_id": r.fact_id, "score": r.score, "source": r.source} for r in self.pool],
            "question_nodes": sorted(self.sg.question_nodes),
            "choice_nodes": sorted(self.sg.choice_nodes),
            "nodes": sorted(self.sg.nodes),
            "edges": [list(e) for e in sorted(self.sg.edges)],
            "merged_fact_ids": sorted(self.sg.merged_fact_ids),
            "paths": [{"nodes": list(p.node_sequence), "origins": list(p.edge_origins), "chain": p.chain()}
                      for p in self.paths],
            "active_facts": [{"fact_id": f, "path_count": self.path_counts[f],
                              "retrieval_score": scores[f].score if f in scores else 0.0,
                              "text": scores[f].text if f in scores else ""}
                             for f in self.active],
            "connection_graph": {"labels": list(self.connection.node_labels),
                                 "adjacency": self.connection.adjacency.tolist()},
            "score": self.score,
            "probability": self.probability,
        }


@dataclass
class QuestionResult:
    question: Question
    pairs: list[PairResult]
    scores: ChoiceScores

    @property
    def predicted(self) -> int:
        return int(np.argmax(self.scores.probs))  # lowest index wins ties

    def summary_line(self) -> str:
        probs = ",".join(f"{p:.6f}" for p in self.scores.probs)
        gold = "" if self.question.answer_idx is None else str(self.question.answer_idx)
        return f"{self.question.id}\t{self.predicted}\t{gold}\t{probs}"


class Pipeline:
    def __init__(self, config: PipelineConfig, bank: AmrBank, core: list[tuple[str, str]],
                 common: list[tuple[str, str]] | None = None, params: ReasonerParams | None = None):
        self.config = config
        self.bank = bank
        self.core_index = build_index(core, config.bm25_k1, config.bm25_b)
        self.common_index = build_index(common or [], config.bm25_k1, config.bm25_b)
        self.keys_fn = make_keys_fn(config.overgeneral, config.strip_senses)
        self.provider = HashEmbedding(config.dim, config.seed)
        if params is None:
            if config.init == "zeros":
                params = ReasonerParams.zeros(config.k_layers, config.heads, config.dim)
            else:
                params = ReasonerParams.init(config.k_layers, config.heads, config.dim, config.seed)
        self.params = params

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "Pipeline":
        config.validate()
        if config.core_corpus is None or config.amr_bank is None:
            raise InputError("config needs at least core_corpus and amr_bank")
        core = load_corpus(config.core_corpus)
        common = load_corpus(config.common_corpus) if config.common_corpus else []
        params = ReasonerParams.load(config.params_file) if config.params_file else None
        return cls(config, load_amr_bank(config.amr_bank), core, common, params)

    def _amr(self, key: str):
        graph = self.bank.get(key)
        if graph is None:
            raise MissingAmr(f"no AMR for {key!r} in the bank")
        return graph

    def _pool(self, question: Question, hypothesis: str) -> list[FactRecord]:
        cfg = self.config
        query = hypothesis if cfg.query == "hypothesis" else question.question
        core = retrieve(self.core_index, query, max(cfg.n_core, 1), "core") if cfg.n_core else []
        common = retrieve(self.common_index, query, max(cfg.n_common, 1), "common") if cfg.n_common else []
        return assemble_pool(core, common, cfg.n_core, cfg.n_common)

    def process(self, question: Question) -> QuestionResult:
        cfg = self.config
        hyp_graphs = [self._amr(hypothesis_key(question.id, j)) for j in range(len(question.choices))]
        hyp_keys = [self.keys_fn(g) for g in hyp_graphs]
        q_nodes, c_nodes = split_question_choice_nodes(
            [graph_keyset(g, k) for g, k in zip(hyp_graphs, hyp_keys)])

        pairs = []
        for j, choice in enumerate(question.choices):
            hypothesis = generate_hypothesis(question.question, choice)
            pool = self._pool(question, hypothesis)
            pool_bank = AmrBank([(r.fact_id, self._amr(r.fact_id)) for r in pool])
            sg = build_amr_sg(hyp_graphs[j], pool_bank, self.keys_fn, q_nodes, c_nodes[j])
            paths = find_evidence_paths(sg, cfg.max_path_nodes)
            scores = {r.fact_id: r.score for r in pool}
            active = select_active_facts(paths, scores, cfg.active_cap)
            counts = fact_path_counts(paths)
            fact_keysets = {f: graph_keyset(pool_bank[f], self.keys_fn(pool_bank[f])) for f in active}
            connection = build_fact_connection_graph(
                sg, graph_keyset(hyp_graphs[j], hyp_keys[j]), active, fact_keysets)
            texts = {r.fact_id: r.text for r in pool}
            active_texts = [texts[f] for f in active]
            features = pool_node_features(self.provider, hypothesis, active_texts)
            x_cls = self.provider.cls([hypothesis, *active_texts])
            instance = Instance(features, connection.adjacency, x_cls)
            pairs.append(PairResult(question, j, hypothesis, pool, sg, paths, active,
                                    {f: counts[f] for f in active}, connection, instance))

        scores = score_choices([p.instance for p in pairs], self.params)
        for p, raw, prob in zip(pairs, scores.raw, scores.probs):
            p.score, p.probability = float(raw), float(prob)
        return QuestionResult(question, pairs, scores)


def report_json(pair: PairResult) -> str:
    return json.dumps(pair.to_json(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def run_pipeline(config: PipelineConfig, questions: list[Question] | None = None,
                 out_dir: str | None = None, pipeline: Pipeline | None = None) -> list[QuestionResult]:
    """Process every question; with ``out_dir``, write ``<qid>__<j>.json`` per pair
    and one line per question to ``summary.tsv``."""
    pipeline = pipeline or Pipeline.from_config(config)
    if questions is None:
        questions = load_questions(config.questions)
    results = [pipeline.process(q) for q in questions]
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for res in results:
            for pair in res.pairs:
                path = os.path.join(out_dir, f"{_safe(res.question.id)}__{pair.choice_index}.json")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(report_json(pair))
        with open(os.path.join(out_dir, "summary.tsv"), "w", encoding="utf-8") as fh:
            fh.write("question_id\tpredicted\tgold\tprobs\n")
            for res in results:
                fh.write(res.summary_line() + "\n")
    return results


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


@dataclass
class EvalResult:
    accuracy: float
    rows: list[tuple[str, int, int, int, list[int]]]  # qid, predicted, gold, correct, n_active per choice

    def tsv(self) -> str:
        lines = ["question_id\tpredicted\tgold\tcorrect\tn_active"]
        for qid, pred, gold, correct, n_active in self.rows:
            lines.append(f"{qid}\t{pred}\t{gold}\t{correct}\t{','.join(map(str, n_active))}")
        return "\n".join(lines) + "\n"


def eval_dataset(config: PipelineConfig, questions: list[Question] | None = None,
                 pipeline: Pipeline | None = None) -> EvalResult:
    if questions is None:
        questions = load_questions(config.questions)
    if not questions:
        raise EmptyDataset("no questions to evaluate")
    unlabeled = [q.id for q in questions if q.answer_idx is None]
    if unlabeled:
        raise MissingLabel(f"questions without answer_idx: {unlabeled}")
    results = run_pipeline(config, questions, pipeline=pipeline)
    rows = []
    for res in results:
        gold = res.question.answer_idx
        rows.append((res.question.id, res.predicted, gold, int(res.predicted == gold),
                     [len(p.active) for p in res.pairs]))
    return EvalResult(float(np.mean([r[3] for r in rows])), rows)


def format_pair(pair: PairResult) -> str:
    """Human-readable account of one pair's graph, paths, active facts and adjacency."""
    sg = pair.sg
    lines = [f"question {pair.question.id}, choice {pair.choice_index}: "
             f"{pair.question.choices[pair.choice_index]}",
             f"hypothesis: {pair.hypothesis}",
             f"question nodes: {', '.join(sorted(sg.question_nodes)) or '(none)'}",
             f"choice nodes: {', '.join(sorted(sg.choice_nodes)) or '(none)'}"]
    if not sg.merged_fact_ids:
        lines.append("merged facts: none (empty graph: only the hypothesis AMR)")
    else:
        lines.append(f"merged facts ({len(sg.merged_fact_ids)}): {', '.join(sorted(sg.merged_fact_ids))}")
    lines.append(f"evidence paths ({len(pair.paths)}):")
    for p in pair.paths:
        lines.append(f"  {p.chain()}")
        lines.append(f"    via {' | '.join(p.edge_origins)}")
    if not pair.paths:
        lines.append("  (none)")
    lines.append("active facts:")
    texts = {r.fact_id: r.text for r in pair.pool}
    for rank, f in enumerate(pair.active, start=1):
        lines.append(f"  {rank}. {f} (paths: {pair.path_counts[f]}) {texts.get(f, '')}")
    if not pair.active:
        lines.append("  (none)")
    lines.append("adjacency:")
    labels = pair.connection.node_labels
    width = max(len(l) for l in labels)
    for label, row in zip(labels, pair.connection.adjacency):
        lines.append(f"  {label:<{width}}  {' '.join(str(int(v)) for v in row)}")
    lines.append(f"score: {pair.score:.6f}  probability: {pair.probability:.6f}")
    return "\n".join(lines) + "\n"


def inspect_graph(config: PipelineConfig, question_id: str, choice_index: int,
                  questions: list[Question] | None = None, pipeline: Pipeline | None = None) -> str:
    if questions is None:
        questions = load_questions(config.questions)
    by_id = {q.id: q for q in questions}
    if question_id not in by_id:
        raise UnknownQuestion(f"no question with id {question_id!r}")
    question = by_id[question_id]
    if not 0 <= choice_index < len(question.choices):
        raise ChoiceOutOfRange(f"choice {choice_index} out of range for {len(question.choices)} choices")
    pipeline = pipeline or Pipeline.from_config(config)
    return format_pair(pipeline.process(question).pairs[choice_index])
