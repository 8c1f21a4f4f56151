"""Lambda-terms in De Bruijn notation.

Terms are immutable trees of :class:`Var`, :class:`Abs` and :class:`App`.
Traversals are iterative so that terms produced by the sampler (thousands of
nodes, long unary chains) never hit the interpreter recursion limit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

LAMBDA_CHARS = ("λ", "L", "\\")


@dataclass(frozen=True, slots=True, eq=False)
class Var:
    index: int

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f"De Bruijn index must be >= 1, got {self.index}")


@dataclass(frozen=True, slots=True, eq=False)
class Abs:
    body: "Term"


@dataclass(frozen=True, slots=True, eq=False)
class App:
    left: "Term"
    right: "Term"


Term = Union[Var, Abs, App]


def _term_eq(a, b) -> bool:
    # structural equality without recursion (sampled terms can be very deep)
    if not isinstance(b, (Var, Abs, App)):
        return NotImplemented
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if type(x) is not type(y):
            return False
        if type(x) is Var:
            if x.index != y.index:
                return False
        elif type(x) is Abs:
            stack.append((x.body, y.body))
        else:
            stack.append((x.right, y.right))
            stack.append((x.left, y.left))
    return True


def _term_hash(t) -> int:
    h = 0
    stack = [t]
    while stack:
        node = stack.pop()
        if type(node) is Var:
            h = hash((h, 1, node.index))
        elif type(node) is Abs:
            h = hash((h, 2))
            stack.append(node.body)
        else:
            h = hash((h, 3))
            stack.append(node.right)
            stack.append(node.left)
    return h


for _cls in (Var, Abs, App):
    _cls.__eq__ = _term_eq
    _cls.__hash__ = _term_hash


class ParseError(ValueError):
    """Syntax error; ``offset`` is a byte offset into the UTF-8 encoded input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class NotClosed(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing / rendering


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        # byte offset of every character position, for error reporting
        self._byte = [0]
        for ch in text:
            self._byte.append(self._byte[-1] + len(ch.encode("utf-8")))

    def error(self, message: str) -> ParseError:
        return ParseError(message, self._byte[self.pos])

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def term(self) -> Term:
        # abs := λ term ; lambdas are counted iteratively
        binders = 0
        while self.peek() in LAMBDA_CHARS and self.peek():
            self.pos += 1
            binders += 1
        t = self.app()
        for _ in range(binders):
            t = Abs(t)
        return t

    def app(self) -> Term:
        t = self.atom()
        while True:
            ch = self.peek()
            if not (ch.isdigit() or ch == "("):
                return t
            t = App(t, self.atom())

    def atom(self) -> Term:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            t = self.term()
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.pos += 1
            return t
        if ch.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            value = int(self.text[start:self.pos])
            if value == 0:
                self.pos = start
                raise self.error("index 0 is not a valid De Bruijn index")
            return Var(value)
        if not ch:
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected character {ch!r}")


def parse_debruijn(text: str) -> Term:
    """Parse ``text`` such as ``"λ(λ2 1)1"`` into a term."""
    if not text.strip():
        raise ParseError("empty input", 0)
    p = _Parser(text)
    t = p.term()
    if p.peek():
        raise p.error("trailing input")
    return t


def render_debruijn(term: Term) -> str:
    """Canonical text form; ``parse_debruijn(render_debruijn(t)) == t``."""
    out: list[str] = []
    # stack holds terms to render or literal strings
    stack: list[Union[Term, str]] = [term]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
        elif isinstance(item, Var):
            out.append(str(item.index))
        elif isinstance(item, Abs):
            out.append("λ")
            if isinstance(item.body, App):
                stack.extend((")", item.body, "("))
            else:
                stack.append(item.body)
        else:
            right = item.right
            if isinstance(right, Var):
                stack.append(right)
            else:
                stack.extend((")", right, "("))
            stack.append(" ")
            if isinstance(item.left, Abs):
                stack.extend((")", item.left, "("))
            else:
                stack.append(item.left)
    return "".join(out)


def to_json(term: Term):
    """JSON-ready AST: ``{"var": n} | {"abs": t} | {"app": [t, t]}``."""
    # post-order build to stay iterative
    results: dict[int, object] = {}
    stack: list[tuple[Term, bool]] = [(term, False)]
    while stack:
        node, done = stack.pop()
        if isinstance(node, Var):
            results[id(node)] = {"var": node.index}
        elif not done:
            stack.append((node, True))
            if isinstance(node, Abs):
                stack.append((node.body, False))
            else:
                stack.extend(((node.right, False), (node.left, False)))
        elif isinstance(node, Abs):
            results[id(node)] = {"abs": results[id(node.body)]}
        else:
            results[id(node)] = {"app": [results[id(node.left)], results[id(node.right)]]}
    return results[id(term)]


def from_json(obj) -> Term:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"malformed term object: {obj!r}")
    (key, value), = obj.items()
    if key == "var":
        return Var(int(value))
    if key == "abs":
        return Abs(from_json(value))
    if key == "app":
        left, right = value
        return App(from_json(left), from_json(right))
    raise ValueError(f"unknown node kind {key!r}")


# ---------------------------------------------------------------------------
# statistics


def _walk(term: Term):
    """Yield ``(node, unary_depth)`` in preorder; depth counts proper unary ancestors."""
    stack = [(term, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        if isinstance(node, Abs):
            stack.append((node.body, depth + 1))
        elif isinstance(node, App):
            stack.append((node.right, depth))
            stack.append((node.left, depth))


@dataclass(frozen=True)
class TermStats:
    size: int
    leaf_count: int
    unary_count: int
    binary_count: int
    max_index: int
    level_count: int
    closed: bool


def term_stats(term: Term) -> TermStats:
    leaves = unary = binary = 0
    max_index = 0
    levels = 0
    closed = True
    for node, depth in _walk(term):
        levels = max(levels, depth)
        if isinstance(node, Var):
            leaves += 1
            max_index = max(max_index, node.index)
            if node.index > depth:
                closed = False
        elif isinstance(node, Abs):
            unary += 1
        else:
            binary += 1
    return TermStats(leaves + unary + binary, leaves, unary, binary, max_index, levels, closed)


@dataclass(frozen=True)
class LevelHistogram:
    """``rows[d] = (leaves, unary, binary)`` for nodes with ``d`` unary ancestors."""

    rows: tuple[tuple[int, int, int], ...]

    def leaves(self, level: int) -> int:
        return self.rows[level][0] if level < len(self.rows) else 0

    def unary(self, level: int) -> int:
        return self.rows[level][1] if level < len(self.rows) else 0

    def binary(self, level: int) -> int:
        return self.rows[level][2] if level < len(self.rows) else 0

    def totals(self) -> tuple[int, int, int]:
        return tuple(sum(col) for col in zip(*self.rows))  # type: ignore[return-value]


def level_histogram(term: Term) -> LevelHistogram:
    counts: list[list[int]] = []
    for node, depth in _walk(term):
        while len(counts) <= depth:
            counts.append([0, 0, 0])
        slot = 0 if isinstance(node, Var) else 1 if isinstance(node, Abs) else 2
        counts[depth][slot] += 1
    return LevelHistogram(tuple(tuple(row) for row in counts))


def is_closed(term: Term) -> bool:
    return all(node.index <= depth for node, depth in _walk(term) if isinstance(node, Var))


# ---------------------------------------------------------------------------
# lambda-DAG


@dataclass(frozen=True)
class LambdaDag:
    nodes: tuple[tuple[int, str], ...]  # (id, kind) with kind in {"unary", "binary", "leaf"}
    tree_edges: tuple[tuple[int, int], ...]
    binder_edges: tuple[tuple[int, int], ...]  # (unary node id, leaf id)
    leaf_index: dict = field(default_factory=dict, compare=False)


def to_lambda_dag(term: Term) -> LambdaDag:
    """Skeleton of ``term`` plus an edge from every abstraction to the leaves it binds.

    Node ids follow preorder, left child before right child.
    """
    nodes: list[tuple[int, str]] = []
    tree_edges: list[tuple[int, int]] = []
    binder_edges: list[tuple[int, int]] = []
    leaf_index: dict[int, int] = {}
    # (node, parent id, ids of enclosing abstractions, outermost first)
    stack: list[tuple[Term, int, tuple[int, ...]]] = [(term, -1, ())]
    while stack:
        node, parent, binders = stack.pop()
        nid = len(nodes)
        if parent >= 0:
            tree_edges.append((parent, nid))
        if isinstance(node, Var):
            nodes.append((nid, "leaf"))
            leaf_index[nid] = node.index
            if node.index > len(binders):
                raise NotClosed(f"index {node.index} at unary depth {len(binders)} is unbound")
            binder_edges.append((binders[-node.index], nid))
        elif isinstance(node, Abs):
            nodes.append((nid, "unary"))
            stack.append((node.body, nid, binders + (nid,)))
        else:
            nodes.append((nid, "binary"))
            stack.append((node.right, nid, binders))
            stack.append((node.left, nid, binders))
    binder_edges.sort()
    return LambdaDag(tuple(nodes), tuple(tree_edges), tuple(binder_edges), leaf_index)
