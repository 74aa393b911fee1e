"""AST node types for the mini-Erlang subset.

Every node carries a unique id and an optional byte span into the source it
was parsed from.  Nodes built by transformations have no span.  Structural
equality deliberately ignores ids and spans.

The pattern-language extensions (metavariables) and the verifier's symbolic
leaves (math variables) live here too, so the printer and equality helpers
cover every term the toolchain manipulates.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field, fields

_ids = itertools.count(1)


def new_id() -> int:
    return next(_ids)


@dataclass(eq=False)
class Node:
    nid: int = field(default_factory=new_id, kw_only=True, repr=False)
    span: tuple[int, int] | None = field(default=None, kw_only=True, repr=False)


class Expr(Node):
    pass


@dataclass(eq=False)
class Atom(Expr):
    name: str


@dataclass(eq=False)
class Integer(Expr):
    value: int


@dataclass(eq=False)
class Var(Expr):
    name: str


@dataclass(eq=False)
class Nil(Expr):
    pass


@dataclass(eq=False)
class Cons(Expr):
    head: Expr
    tail: Expr


@dataclass(eq=False)
class Tuple(Expr):
    elems: list[Expr]


@dataclass(eq=False)
class Match(Expr):
    pattern: Expr
    expr: Expr


@dataclass(eq=False)
class Clause(Node):
    """A function or case/fun clause.  `name` is set for function clauses."""

    name: str | None
    patterns: list[Expr]
    body: list[Expr]


@dataclass(eq=False)
class Case(Expr):
    scrutinee: Expr
    clauses: list[Clause]


@dataclass(eq=False)
class Fun(Expr):
    clauses: list[Clause]


@dataclass(eq=False)
class Call(Expr):
    """Application with an arbitrary callee: `foo(1)`, `X()`, `(fun ...)()`."""

    callee: Expr
    args: list[Expr]


@dataclass(eq=False)
class RemoteCall(Expr):
    module: Expr
    name: Expr
    args: list[Expr]


@dataclass(eq=False)
class Block(Expr):
    exprs: list[Expr]


@dataclass(eq=False)
class Generator(Node):
    pattern: Expr
    source: Expr


@dataclass(eq=False)
class Filter(Node):
    expr: Expr


@dataclass(eq=False)
class ListComp(Expr):
    head: Expr
    qualifiers: list[Node]


@dataclass(eq=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


# --- module structure -------------------------------------------------------


@dataclass(eq=False)
class ExportEntry(Node):
    name: str
    arity: int


@dataclass(eq=False)
class FunctionForm(Node):
    clauses: list[Clause]

    @property
    def name(self) -> str:
        return self.clauses[0].name or ""

    @property
    def arity(self) -> int:
        return len(self.clauses[0].patterns)


@dataclass(eq=False)
class SourceModule(Node):
    name: str
    exports: list[ExportEntry]
    forms: list[FunctionForm]
    text: bytes = b""


# --- pattern-language extensions -------------------------------------------


@dataclass(eq=False)
class Metavar(Expr):
    name: str


@dataclass(eq=False)
class ListMetavar(Expr):
    """Matches zero or more consecutive siblings; written `Name..`."""

    name: str


@dataclass(eq=False)
class ClausePat(Node):
    """Clause-shaped DSL pattern: `Name(Args..) -> Body..`."""

    name: Expr
    patterns: list[Expr]
    body: list[Expr]


# --- symbolic leaves used by the verifier -----------------------------------


@dataclass(eq=False)
class MathVar(Expr):
    """A mathematical variable standing for an arbitrary expression or value."""

    name: str


@dataclass(eq=False)
class SymVar(Expr):
    """The program variable whose name is the value of a math variable."""

    name: str


@dataclass(eq=False)
class SeqVar(Expr):
    """A math variable standing for a sequence of sibling expressions."""

    name: str


# --- generic traversal ------------------------------------------------------

_SCALARS = (str, int, bytes, bool, type(None), tuple)


def children(node: Node) -> list[Node]:
    out: list[Node] = []
    for f in fields(node):
        if f.name in ("nid", "span", "text"):
            continue
        v = getattr(node, f.name)
        if isinstance(v, Node):
            out.append(v)
        elif isinstance(v, list):
            out.extend(x for x in v if isinstance(x, Node))
    return out


def walk(node: Node):
    """Pre-order traversal of node and all descendants."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def struct_key(node: Node):
    """A hashable key capturing the tree's structure, ignoring ids and spans."""
    parts: list = [type(node).__name__]
    for f in fields(node):
        if f.name in ("nid", "span", "text"):
            continue
        v = getattr(node, f.name)
        if isinstance(v, Node):
            parts.append(struct_key(v))
        elif isinstance(v, list):
            parts.append(tuple(struct_key(x) if isinstance(x, Node) else x for x in v))
        else:
            parts.append(v)
    return tuple(parts)


def struct_eq(a: Node, b: Node) -> bool:
    return struct_key(a) == struct_key(b)


def copy_fresh(node: Node) -> Node:
    """Deep copy with fresh node ids and no spans (a detached new subtree)."""
    dup = copy.deepcopy(node)
    for n in walk(dup):
        n.nid = new_id()
        n.span = None
    return dup


def mklist(elems: list[Expr], tail: Expr | None = None) -> Expr:
    out: Expr = tail if tail is not None else Nil()
    for e in reversed(elems):
        out = Cons(e, out)
    return out


def unlist(node: Expr) -> tuple[list[Expr], Expr | None]:
    """Flatten a cons chain into (elements, improper-tail-or-None)."""
    elems: list[Expr] = []
    while isinstance(node, Cons):
        elems.append(node.head)
        node = node.tail
    if isinstance(node, Nil):
        return elems, None
    return elems, node


PATTERN_TYPES = (Var, Atom, Integer, Nil, Cons, Tuple, Metavar, ListMetavar)


def is_pattern(node: Node) -> bool:
    if not isinstance(node, PATTERN_TYPES):
        return False
    return all(is_pattern(c) for c in children(node))
