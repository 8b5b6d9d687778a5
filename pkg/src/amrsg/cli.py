"""``amrsg`` command line.

Exit codes: 0 success, 1 input error, 2 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import PipelineConfig, load_config
from .errors import InputError, InvariantViolation
from .pipeline import Pipeline, eval_dataset, inspect_graph, report_json, run_pipeline
from .reasoner import backward_and_gradcheck, gradcheck_point
from .retrieval import build_index, generate_hypothesis, load_corpus, load_questions, retrieve


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    return cfg.with_overrides(
        pool_size=args.pool_size, n_core=args.n_core, active_cap=args.active_cap,
        max_path_nodes=args.max_path_nodes, k_layers=args.k_layers, heads=args.heads, dim=args.dim,
        seed=args.seed, core_corpus=args.corpus, common_corpus=args.common_corpus,
        amr_bank=args.amr_bank, questions=args.questions, params_file=args.params,
        init=args.init, query=args.query,
    ).validate()


def _selected(args, cfg):
    questions = load_questions(cfg.questions)
    if args.question is not None:
        questions = [q for q in questions if q.id == args.question]
        if not questions:
            raise InputError(f"no question with id {args.question!r}")
    return questions


def _pairs(args):
    cfg = _config(args)
    pipeline = Pipeline.from_config(cfg)
    for res in run_pipeline(cfg, _selected(args, cfg), pipeline=pipeline):
        for pair in res.pairs:
            if args.choice is None or pair.choice_index == args.choice:
                yield pair


def _emit(obj):
    print(json.dumps(obj, ensure_ascii=False, sort_keys=True))


def cmd_index(args):
    cfg = _config(args)
    rows = []
    for path in filter(None, [cfg.core_corpus, cfg.common_corpus]):
        index = build_index(load_corpus(path), cfg.bm25_k1, cfg.bm25_b)
        rows.append({"corpus": path, "documents": len(index), "vocabulary": len(index.doc_freqs),
                     "avg_doc_len": index.avgdl, "k1": index.k1, "b": index.b})
    if not rows:
        raise InputError("no corpus given (--corpus or core_corpus in the config)")
    for row in rows:
        _emit(row)


def cmd_hypothesize(args):
    cfg = _config(args)
    for q in _selected(args, cfg):
        for j, choice in enumerate(q.choices):
            _emit({"question_id": q.id, "choice_index": j, "text": generate_hypothesis(q.question, choice)})


def cmd_retrieve(args):
    cfg = _config(args)
    if args.query_text is not None:
        if cfg.core_corpus is None:
            raise InputError("--query needs --corpus")
        index = build_index(load_corpus(cfg.core_corpus), cfg.bm25_k1, cfg.bm25_b)
        for rec in retrieve(index, args.query_text, args.top or cfg.pool_size):
            _emit({"fact_id": rec.fact_id, "score": rec.score, "text": rec.text})
        return
    pipeline = Pipeline.from_config(cfg)
    for q in _selected(args, cfg):
        for j, choice in enumerate(q.choices):
            hyp = generate_hypothesis(q.question, choice)
            pool = pipeline._pool(q, hyp)
            _emit({"question_id": q.id, "choice_index": j, "hypothesis": hyp,
                   "pool": [{"fact_id": r.fact_id, "score": r.score, "source": r.source} for r in pool]})


def cmd_build_sg(args):
    for pair in _pairs(args):
        rep = pair.to_json()
        _emit({k: rep[k] for k in ("question_id", "choice_index", "question_nodes", "choice_nodes",
                                   "nodes", "edges", "merged_fact_ids")})


def cmd_paths(args):
    if args.out:
        cfg = _config(args)
        run_pipeline(cfg, _selected(args, cfg), out_dir=args.out)
        return
    for pair in _pairs(args):
        sys.stdout.write(report_json(pair))


def cmd_select_facts(args):
    for pair in _pairs(args):
        rep = pair.to_json()
        _emit({"question_id": pair.question.id, "choice_index": pair.choice_index,
               "active_facts": rep["active_facts"]})


def cmd_score(args):
    cfg = _config(args)
    results = run_pipeline(cfg, _selected(args, cfg), out_dir=args.out)
    print("question_id\tpredicted\tgold\tprobs")
    for res in results:
        print(res.summary_line())


def cmd_eval(args):
    cfg = _config(args)
    result = eval_dataset(cfg, _selected(args, cfg))
    if args.tsv:
        with open(args.tsv, "w", encoding="utf-8") as fh:
            fh.write(result.tsv())
    else:
        sys.stdout.write(result.tsv())
    print(f"accuracy\t{result.accuracy:.6f}")


def cmd_gradcheck(args):
    worst = 0.0
    for i in range(args.instances):
        instances, label, params = gradcheck_point(args.seed + i, n=args.facts, d=args.dim, h=args.heads,
                                                   K=args.k_layers, J=args.choices, epsilon=args.epsilon)
        err = backward_and_gradcheck(instances, label, params, args.epsilon)
        worst = max(worst, err)
        print(f"instance {i}\tmax_rel_err {err:.3e}")
    print(f"worst\t{worst:.3e}\t{'PASS' if worst < args.tolerance else 'FAIL'}")
    if worst >= args.tolerance:
        raise InvariantViolation(f"gradient check error {worst:.3e} >= {args.tolerance}")


def cmd_inspect(args):
    cfg = _config(args)
    sys.stdout.write(inspect_graph(cfg, args.question, args.choice, load_questions(cfg.questions)))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--corpus", help="core corpus (.tsv with id<TAB>text, or one fact per line)")
    g.add_argument("--common-corpus")
    g.add_argument("--amr-bank")
    g.add_argument("--questions", help="JSON Lines question file")
    g.add_argument("--params", help="reasoner parameter file")
    g.add_argument("--pool-size", type=int)
    g.add_argument("--n-core", type=int)
    g.add_argument("--active-cap", type=int)
    g.add_argument("--max-path-nodes", type=int)
    g.add_argument("--k-layers", type=int)
    g.add_argument("--heads", type=int)
    g.add_argument("--dim", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--init", choices=["uniform", "zeros"])
    g.add_argument("--query-source", dest="query", choices=["hypothesis", "question"],
                   help="text used as the retrieval query")

    parser = argparse.ArgumentParser(prog="amrsg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, pair_filter=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        if pair_filter:
            p.add_argument("--question", help="restrict to one question id")
            p.add_argument("--choice", type=int, help="restrict to one choice index")
        p.set_defaults(func=func)
        return p

    add("index", cmd_index, "build BM25 indexes and print their statistics", pair_filter=False)
    add("hypothesize", cmd_hypothesize, "print one hypothesis per question-choice pair")
    p = add("retrieve", cmd_retrieve, "retrieve fact pools")
    p.add_argument("--query", dest="query_text", help="ad-hoc query against the core corpus")
    p.add_argument("--top", type=int)
    add("build-sg", cmd_build_sg, "print the semantic graph of each pair")
    p = add("paths", cmd_paths, "full JSON report per pair (paths, active facts, adjacency)")
    p.add_argument("--out", help="directory for one report file per pair")
    add("select-facts", cmd_select_facts, "print the active facts of each pair")
    p = add("score", cmd_score, "score every question and print one summary line each")
    p.add_argument("--out", help="directory for per-pair reports and summary.tsv")
    p = add("eval", cmd_eval, "accuracy over a labeled question file")
    p.add_argument("--tsv", help="write the per-question breakdown here")
    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--facts", type=int, default=2)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--k-layers", type=int, default=2)
    p.add_argument("--choices", type=int, default=4)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)
    p = sub.add_parser("inspect", parents=[common], help="human-readable report for one pair")
    p.add_argument("--question", required=True)
    p.add_argument("--choice", type=int, required=True)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
