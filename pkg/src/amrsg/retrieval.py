"""Hypothesis generation and BM25 fact retrieval over a local corpus."""
from __future__ import annotations

import json
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable

from .errors import DuplicateFactId, EmptyInput, InputError

_BLANK = re.compile(r"_{3,}")
_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class FactRecord:
    fact_id: str
    text: str
    score: float = 0.0
    source: str = "core"  # "core" | "common"


@dataclass(frozen=True)
class Hypothesis:
    question_id: str
    choice_index: int
    text: str


@dataclass(frozen=True)
class Question:
    id: str
    question: str
    choices: tuple[str, ...]
    answer_idx: int | None = None


def generate_hypothesis(question: str, choice: str) -> str:
    """Turn a question and one answer choice into a declarative statement.

    A blank marker (three or more underscores) is filled with the choice.
    Without one, a trailing ``?`` is dropped and the choice is appended.
    """
    if not question or not question.strip() or not choice or not choice.strip():
        raise EmptyInput("question and choice must be non-empty")
    question = question.strip()
    choice = choice.strip()
    if _BLANK.search(question):
        text = _BLANK.sub(lambda _: choice, question, count=1)
    else:
        if question.endswith("?"):
            question = question[:-1]
        text = question + " " + choice
    return " ".join(text.split())


@dataclass(frozen=True)
class CorpusIndex:
    doc_ids: tuple[str, ...]
    doc_tokens: tuple[tuple[str, ...], ...]
    texts: dict[str, str]
    term_freqs: tuple[Counter, ...]
    doc_freqs: dict[str, int]
    avgdl: float
    k1: float = 1.2
    b: float = 0.75
    postings: dict[str, tuple[int, ...]] = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.doc_ids)

    def idf(self, term: str) -> float:
        n = len(self.doc_ids)
        df = self.doc_freqs.get(term, 0)
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)


def build_index(corpus: Iterable[tuple[str, str]], k1: float = 1.2, b: float = 0.75) -> CorpusIndex:
    if k1 <= 0 or not 0 <= b <= 1:
        raise InputError(f"invalid BM25 parameters k1={k1}, b={b}")
    ids, toks, tfs, texts = [], [], [], {}
    df: Counter = Counter()
    postings: dict[str, list[int]] = {}
    for fact_id, text in corpus:
        if fact_id in texts:
            raise DuplicateFactId(f"duplicate fact id {fact_id!r} in corpus")
        tokens = tuple(tokenize(text))
        tf = Counter(tokens)
        for term in tf:
            df[term] += 1
            postings.setdefault(term, []).append(len(ids))
        ids.append(fact_id)
        toks.append(tokens)
        tfs.append(tf)
        texts[fact_id] = text
    total = sum(len(t) for t in toks)
    avgdl = total / len(ids) if ids else 0.0
    return CorpusIndex(tuple(ids), tuple(toks), texts, tuple(tfs), dict(df), avgdl, k1, b,
                       {t: tuple(p) for t, p in postings.items()})


def bm25_scores(index: CorpusIndex, query: str) -> dict[int, float]:
    """Okapi BM25 for every document sharing a term with ``query``.

    Each distinct query term contributes once.
    """
    scores: dict[int, float] = {}
    if not index.doc_ids or index.avgdl <= 0:
        return scores
    k1, b = index.k1, index.b
    for term in dict.fromkeys(tokenize(query)):
        docs = index.postings.get(term)
        if not docs:
            continue
        idf = index.idf(term)
        for d in docs:
            tf = index.term_freqs[d][term]
            norm = k1 * (1 - b + b * len(index.doc_tokens[d]) / index.avgdl)
            scores[d] = scores.get(d, 0.0) + idf * tf * (k1 + 1) / (tf + norm)
    return scores


def retrieve(index: CorpusIndex, query: str, m: int, source: str = "core") -> list[FactRecord]:
    if m < 1:
        raise InputError(f"pool size must be >= 1, got {m}")
    scored = [(s, index.doc_ids[d]) for d, s in bm25_scores(index, query).items() if s > 0]
    scored.sort(key=lambda x: (-x[0], x[1]))
    return [FactRecord(fid, index.texts[fid], s, source) for s, fid in scored[:m]]


def assemble_pool(core_hits: list[FactRecord], common_hits: list[FactRecord],
                  n_core: int = 10, n_common: int = 90) -> list[FactRecord]:
    """Core hits first, then common hits; one copy per fact id (the higher scored)."""
    pool = [replace(r, source="core") for r in core_hits[:n_core]]
    pool += [replace(r, source="common") for r in common_hits[:n_common]]
    best: dict[str, int] = {}
    for i, rec in enumerate(pool):
        j = best.get(rec.fact_id)
        if j is None or rec.score > pool[j].score:
            best[rec.fact_id] = i
    keep = set(best.values())
    return [rec for i, rec in enumerate(pool) if i in keep]


# -- file formats ------------------------------------------------------------

def load_corpus(path) -> list[tuple[str, str]]:
    """One fact per line.

    ``.tsv`` files carry explicit ``id<TAB>text`` rows; otherwise each fact is
    named ``<filename>:<line-number>``.  Blank lines are skipped.
    """
    name = os.path.basename(str(path))
    explicit = str(path).endswith(".tsv")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if explicit:
                if "\t" not in line:
                    raise InputError(f"{path}:{lineno}: expected id<TAB>text")
                fact_id, text = line.split("\t", 1)
                rows.append((fact_id.strip(), text.strip()))
            else:
                rows.append((f"{name}:{lineno}", line.strip()))
    return rows


def load_questions(path) -> list[Question]:
    questions = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                q = Question(str(obj["id"]), obj["question"], tuple(obj["choices"]),
                             obj.get("answer_idx"))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{path}:{lineno}: bad question record ({exc})") from None
            if q.id in seen:
                raise InputError(f"{path}:{lineno}: duplicate question id {q.id!r}")
            if q.answer_idx is not None and not 0 <= q.answer_idx < len(q.choices):
                raise InputError(f"{path}:{lineno}: answer_idx out of range")
            seen.add(q.id)
            questions.append(q)
    return questions
