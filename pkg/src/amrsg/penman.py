"""Reading and writing AMR graphs in PENMAN notation.

A graph is stored as plain triples.  Inverted roles (``:ARG0-of``) are
normalized on parse, so ``(b / boy :ARG0-of (w / want-01))`` yields the edge
``("w", ":ARG0", "b")``.  A few AMR roles end in ``-of`` without being
inversions (``:consist-of`` and friends); those are kept as written.

Bare symbols in target position are variable re-references when a variable
of that name is declared anywhere in the graph (forward references are
legal).  Otherwise they are constants, except symbols shaped like an AMR
variable (one letter plus optional digits), which are rejected as undeclared
references.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .errors import DuplicateFactId, MalformedPenman, MissingIdLine, UnreachableVariable

Edge = tuple[str, str, str]
Attribute = tuple[str, str, str]

DEFAULT_OVERGENERAL = frozenset({"name", "thing", "person", "string-entity"})

# roles whose "-of" suffix is part of the role name, not an inversion
NON_INVERTED_ROLES = frozenset({":consist-of", ":prep-out-of", ":prep-on-behalf-of"})

_VARIABLE_SHAPE = re.compile(r"^[A-Za-z][0-9]*$")
_BARE_CONSTANT = re.compile(r"^(?:[-+]|[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)$")
_SENSE_SUFFIX = re.compile(r"-\d+$")


@dataclass(frozen=True)
class AmrGraph:
    root: str
    variables: dict[str, str]
    edges: tuple[Edge, ...] = ()
    attributes: tuple[Attribute, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "attributes", tuple(tuple(a) for a in self.attributes))
        if self.root not in self.variables:
            raise ValueError(f"root {self.root!r} is not a declared variable")
        for var, concept in self.variables.items():
            if not concept:
                raise ValueError(f"variable {var!r} has an empty concept label")
        for src, _, tgt in self.edges:
            if src not in self.variables or tgt not in self.variables:
                raise ValueError(f"edge ({src}, {tgt}) refers to an undeclared variable")
        for src, _, _ in self.attributes:
            if src not in self.variables:
                raise ValueError(f"attribute source {src!r} is not a declared variable")

    def attributes_of(self, var: str) -> list[Attribute]:
        return [a for a in self.attributes if a[0] == var]


@dataclass
class AmrBank:
    entries: list[tuple[str, AmrGraph]] = field(default_factory=list)

    def __post_init__(self):
        self._index = {}
        for fact_id, graph in self.entries:
            if fact_id in self._index:
                raise DuplicateFactId(f"duplicate fact id {fact_id!r}")
            self._index[fact_id] = graph

    def __len__(self):
        return len(self.entries)

    def __contains__(self, fact_id):
        return fact_id in self._index

    def __getitem__(self, fact_id: str) -> AmrGraph:
        return self._index[fact_id]

    def get(self, fact_id, default=None):
        return self._index.get(fact_id, default)

    def ids(self) -> list[str]:
        return [fid for fid, _ in self.entries]

    def subset(self, fact_ids: Iterable[str]) -> "AmrBank":
        return AmrBank([(fid, self._index[fid]) for fid in fact_ids])


# -- tokenizer ---------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str  # "(" ")" "/" "role" "string" "symbol"
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    line, line_start = 1, 0
    while i < n:
        ch = text[i]
        col = i - line_start + 1
        if ch == "\n":
            line += 1
            line_start = i + 1
            i += 1
        elif ch.isspace():
            i += 1
        elif ch in "()/":
            tokens.append(_Token(ch, ch, line, col))
            i += 1
        elif ch == '"':
            j = i + 1
            chars = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    j += 1
                if text[j] == "\n":
                    line += 1
                    line_start = j + 1
                chars.append(text[j])
                j += 1
            if j >= n:
                raise MalformedPenman("unterminated string", line, col)
            tokens.append(_Token("string", "".join(chars), line, col))
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '()/"':
                j += 1
            word = text[i:j]
            if word.startswith(":"):
                if len(word) == 1:
                    raise MalformedPenman("role name missing after ':'", line, col)
                tokens.append(_Token("role", word, line, col))
            else:
                tokens.append(_Token("symbol", word, line, col))
            i = j
    return tokens


def _invert_role(role: str) -> tuple[str, bool]:
    """Return (normalized role, inverted?) for a role read from text."""
    if role.endswith("-of") and role not in NON_INVERTED_ROLES:
        return role[:-3], True
    return role, False


# -- parser ------------------------------------------------------------------

def parse_penman(text: str) -> AmrGraph:
    """Parse one PENMAN expression into an :class:`AmrGraph`.

    Raises :class:`MalformedPenman` with a 1-based line and column on any
    syntax error, an undeclared variable reference, or empty input.
    """
    if not isinstance(text, str):
        raise MalformedPenman("input is not text")
    tokens = _tokenize(text)
    if not tokens:
        raise MalformedPenman("empty input", 1, 1)

    variables: dict[str, str] = {}
    edges: list[Edge] = []
    attributes: list[Attribute] = []
    # textual order; bare symbols are resolved once every declaration is known
    ordered: list = []

    stack: list[str] = []
    pos = 0
    root = None

    def expect(kind: str, what: str) -> _Token:
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1]
            raise MalformedPenman(f"unexpected end of input, expected {what}", last.line, last.column)
        tok = tokens[pos]
        if tok.kind != kind:
            raise MalformedPenman(f"expected {what}, found {tok.text!r}", tok.line, tok.column)
        pos += 1
        return tok

    def open_node(parent_role: tuple[str, str, bool] | None):
        nonlocal root
        expect("(", "'('")
        var_tok = expect("symbol", "variable")
        slash = tokens[pos] if pos < len(tokens) else None
        if slash is None or slash.kind != "/":
            where = slash or var_tok
            raise MalformedPenman("expected '/' after variable", where.line, where.column)
        expect("/", "'/'")
        if pos >= len(tokens) or tokens[pos].kind != "symbol":
            where = tokens[pos] if pos < len(tokens) else tokens[-1]
            raise MalformedPenman("missing concept after '/'", where.line, where.column)
        concept_tok = expect("symbol", "concept")
        var = var_tok.text
        if var in variables:
            raise MalformedPenman(f"variable {var!r} declared twice", var_tok.line, var_tok.column)
        variables[var] = concept_tok.text
        if parent_role is None:
            root = var
        else:
            parent, role, inverted = parent_role
            ordered.append(("edge", (var, role, parent) if inverted else (parent, role, var)))
        stack.append(var)

    open_node(None)
    while stack:
        if pos >= len(tokens):
            last = tokens[-1]
            raise MalformedPenman("unbalanced parentheses: missing ')'", last.line, last.column)
        tok = tokens[pos]
        if tok.kind == ")":
            stack.pop()
            pos += 1
            continue
        if tok.kind != "role":
            raise MalformedPenman(f"expected role or ')', found {tok.text!r}", tok.line, tok.column)
        pos += 1
        role, inverted = _invert_role(tok.text)
        if pos >= len(tokens):
            raise MalformedPenman(f"role {tok.text} has no target", tok.line, tok.column)
        target = tokens[pos]
        if target.kind == "(":
            open_node((stack[-1], role, inverted))
        elif target.kind == "string":
            pos += 1
            ordered.append(("attr", (stack[-1], tok.text, target.text)))
        elif target.kind == "symbol":
            pos += 1
            ordered.append(("pending", (stack[-1], tok.text, role, inverted, target)))
        else:
            raise MalformedPenman(f"role {tok.text} has no target", target.line, target.column)

    if pos != len(tokens):
        extra = tokens[pos]
        raise MalformedPenman(f"unexpected {extra.text!r} after the top node", extra.line, extra.column)

    for kind, item in ordered:
        if kind == "edge":
            edges.append(item)
        elif kind == "attr":
            attributes.append(item)
        else:
            source, written_role, role, inverted, sym = item
            if sym.text in variables:
                edges.append((sym.text, role, source) if inverted else (source, role, sym.text))
            elif _VARIABLE_SHAPE.match(sym.text) and not _BARE_CONSTANT.match(sym.text):
                raise MalformedPenman(f"undeclared variable {sym.text!r}", sym.line, sym.column)
            else:
                attributes.append((source, written_role, sym.text))
    return AmrGraph(root=root, variables=variables, edges=tuple(edges), attributes=tuple(attributes))


# -- serializer --------------------------------------------------------------

def _format_constant(value: str, variables) -> str:
    if _BARE_CONSTANT.match(value) and value not in variables:
        return value
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_penman(graph: AmrGraph, indent: int = 4) -> str:
    """Render ``graph`` as PENMAN text rooted at ``graph.root``.

    Edges are emitted in insertion order.  An edge is written inverted only
    when its source has not been declared yet by the time its target is
    being written; otherwise a re-reference is used.
    """
    declared: set[str] = set()
    used = [False] * len(graph.edges)
    incident: dict[str, list[int]] = {v: [] for v in graph.variables}
    for idx, (src, _, tgt) in enumerate(graph.edges):
        incident[src].append(idx)
        if tgt != src:
            incident[tgt].append(idx)
    attrs: dict[str, list[Attribute]] = {v: [] for v in graph.variables}
    for a in graph.attributes:
        attrs[a[0]].append(a)

    out: list[str] = []

    # explicit stack of (variable, depth, position in its incident list)
    def begin(var: str, depth: int, role: str | None):
        declared.add(var)
        prefix = "" if role is None else "\n" + " " * (indent * depth) + role + " "
        out.append(f"{prefix}({var} / {graph.variables[var]}")

    stack: list[list] = []
    begin(graph.root, 0, None)
    stack.append([graph.root, 0, 0])
    while stack:
        frame = stack[-1]
        var, depth, i = frame
        lst = incident[var]
        advanced = False
        while i < len(lst):
            idx = lst[i]
            i += 1
            if used[idx]:
                continue
            src, role, tgt = graph.edges[idx]
            pad = "\n" + " " * (indent * (depth + 1))
            if src == var:
                used[idx] = True
                if tgt in declared:
                    out.append(f"{pad}{role} {tgt}")
                else:
                    frame[2] = i
                    begin(tgt, depth + 1, role)
                    stack.append([tgt, depth + 1, 0])
                    advanced = True
                    break
            elif src not in declared:
                used[idx] = True
                frame[2] = i
                begin(src, depth + 1, role + "-of")
                stack.append([src, depth + 1, 0])
                advanced = True
                break
        if advanced:
            continue
        frame[2] = i
        for _, role, value in attrs[var]:
            out.append("\n" + " " * (indent * (depth + 1)) + f"{role} {_format_constant(value, graph.variables)}")
        out.append(")")
        stack.pop()

    missing = set(graph.variables) - declared
    if missing:
        raise UnreachableVariable(f"variables not reachable from root {graph.root!r}: {sorted(missing)}")
    return "".join(out)


# -- concept keys ------------------------------------------------------------

_ASCII_LOWER = str.maketrans({c: c.lower() for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZ"})


def normalize_key(text: str) -> str:
    """NFC-normalize and ASCII-lowercase a concept key."""
    return unicodedata.normalize("NFC", text).translate(_ASCII_LOWER)


def concept_keys(graph: AmrGraph, overgeneral: Iterable[str] = DEFAULT_OVERGENERAL,
                 strip_senses: bool = False) -> dict[str, str]:
    """Map each variable to the identity used when merging graphs.

    Over-general concepts that carry a constant attribute are replaced by the
    first such attribute's value.  ``strip_senses`` drops ``-NN`` sense
    suffixes (off by default, so ``measure-01`` and ``measure-02`` stay apart).
    """
    overgeneral = set(overgeneral)
    first_attr: dict[str, str] = {}
    for src, _, value in graph.attributes:
        first_attr.setdefault(src, value)
    keys = {}
    for var, concept in graph.variables.items():
        key = concept
        if concept in overgeneral and var in first_attr:
            key = first_attr[var]
        elif strip_senses:
            key = _SENSE_SUFFIX.sub("", concept) or concept
        keys[var] = normalize_key(key) or concept
    return keys


def make_keys_fn(overgeneral: Iterable[str] = DEFAULT_OVERGENERAL,
                 strip_senses: bool = False) -> Callable[[AmrGraph], dict[str, str]]:
    overgeneral = frozenset(overgeneral)
    return lambda graph: concept_keys(graph, overgeneral, strip_senses)


# -- AMR bank files ----------------------------------------------------------

def _split_blocks(text: str) -> list[tuple[int, list[str]]]:
    blocks, current, start = [], [], 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            if not current:
                start = lineno
            current.append(line)
        elif current:
            blocks.append((start, current))
            current = []
    if current:
        blocks.append((start, current))
    return blocks


def parse_amr_bank(text: str) -> AmrBank:
    """Read blank-line separated ``# ::id <fact-id>`` + PENMAN blocks."""
    entries = []
    seen = set()
    for block_index, (start, lines) in enumerate(_split_blocks(text)):
        fact_id = None
        body_offset = None
        for offset, line in enumerate(lines):
            stripped = line.strip()
            if stripped.startswith("#"):
                m = re.search(r"::id\s+(\S+)", stripped)
                if m and fact_id is None:
                    fact_id = m.group(1)
            else:
                body_offset = offset
                break
        if fact_id is None:
            raise MissingIdLine(f"block {block_index} (line {start}) has no '# ::id' line")
        if body_offset is None:
            raise MalformedPenman("block has no PENMAN expression", start, 1, block=block_index)
        body = "\n".join(lines[body_offset:])
        try:
            graph = parse_penman(body)
        except MalformedPenman as exc:
            line = None if exc.line is None else exc.line + start + body_offset - 1
            raise MalformedPenman(f"{exc.reason} in {fact_id!r}", line, exc.column, block=block_index) from None
        if fact_id in seen:
            raise DuplicateFactId(f"duplicate fact id {fact_id!r} in block {block_index}")
        seen.add(fact_id)
        entries.append((fact_id, graph))
    return AmrBank(entries)


def load_amr_bank(path) -> AmrBank:
    with open(path, encoding="utf-8") as fh:
        return parse_amr_bank(fh.read())
