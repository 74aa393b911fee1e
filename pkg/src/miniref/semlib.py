"""Built-in semantic functions/predicates and the rule-condition evaluator.

Conditions are evaluated left-to-right, call-by-value; the only side effect
is binding metavariables (`M = expr`, and `fresh(M)` when M is unbound).
The catalog is closed: user-defined functions are rejected.
"""

from __future__ import annotations

import re

from . import tree as t
from .dsl import CAnd, CAtom, CBind, CCall, CInt, CInvoke, CNot, COr, CThis, CVar, CondExpr
from .graph import FunctionSem, ModuleSem, SemanticGraph, VarSem
from .matcher import Bindings, val_eq


class SemError(Exception):
    pass


# --- coercions --------------------------------------------------------------


def to_name(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (t.Atom, t.Var)):
        return v.name
    if isinstance(v, (FunctionSem, ModuleSem, VarSem)):
        return v.name
    raise SemError(f"cannot coerce {type(v).__name__} to a name")


def to_int(v) -> int:
    if isinstance(v, bool):
        raise SemError("cannot coerce a boolean to an integer")
    if isinstance(v, int):
        return v
    if isinstance(v, t.Integer):
        return v.value
    raise SemError(f"cannot coerce {type(v).__name__} to an integer")


def to_node(v, graph: SemanticGraph) -> t.Node:
    if isinstance(v, t.Node):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return graph.node(v)
    raise SemError(f"cannot coerce {type(v).__name__} to a node")


def to_list(v) -> list:
    if isinstance(v, list):
        return v
    if isinstance(v, (t.Cons, t.Nil)):
        elems, tail = t.unlist(v)
        if tail is not None:
            raise SemError("improper list has no length")
        return elems
    raise SemError(f"cannot coerce {type(v).__name__} to a list")


def _enclosing_module(graph: SemanticGraph, v) -> ModuleSem:
    if isinstance(v, ModuleSem):
        return v
    if isinstance(v, str):
        return graph.module_sems[v]
    node = to_node(v, graph)
    name = graph.node_module.get(node.nid)
    if name is None:
        raise SemError("node is not part of any module")
    return graph.module_sems[name]


def _enclosing_function(graph: SemanticGraph, v) -> FunctionSem:
    if isinstance(v, FunctionSem):
        return v
    node = to_node(v, graph)
    fn = graph.enclosing_function(node.nid)
    if fn is None:
        raise SemError("node is not inside a function")
    return fn


def _pattern_bound(node: t.Node) -> list[str]:
    """Names bound by patterns and generators within a subtree, in order."""
    out: list[str] = []

    def add_pattern(p: t.Node) -> None:
        for n in t.walk(p):
            if isinstance(n, t.Var) and n.name != "_" and n.name not in out:
                out.append(n.name)

    for n in t.walk(node):
        if isinstance(n, t.Generator):
            add_pattern(n.pattern)
        elif isinstance(n, t.Match):
            add_pattern(n.pattern)
        elif isinstance(n, t.Clause):
            for p in n.patterns:
                add_pattern(p)
    return out


# --- catalog ----------------------------------------------------------------


def call_semantic(name: str, args: list, graph: SemanticGraph):
    if name == "atom":
        _arity(name, args, 1)
        v = args[0]
        return isinstance(v, t.Atom) or (isinstance(v, str) and v[:1].islower())
    if name == "pure":
        _arity(name, args, 1)
        return graph.is_pure(to_node(args[0], graph).nid)
    if name == "length":
        _arity(name, args, 1)
        return len(to_list(args[0]))
    if name == "module":
        _arity(name, args, 1)
        return _enclosing_module(graph, args[0])
    if name == "name":
        _arity(name, args, 1)
        return to_name(args[0])
    if name == "function":
        _arity(name, args, 1)
        return _enclosing_function(graph, args[0])
    if name == "function_exists":
        _arity(name, args, 3)
        mod = _enclosing_module(graph, args[0])
        return (mod.name, to_name(args[1]), to_int(args[2])) in graph.functions
    if name == "function_clauses":
        _arity(name, args, 1)
        fn = _enclosing_function(graph, args[0])
        return [graph.node(c) for c in fn.clauses]
    if name == "function_references":
        _arity(name, args, 1)
        fn = _enclosing_function(graph, args[0])
        # call sites only; export entries are bookkeeping, not code
        return [graph.node(ref) for kind, ref in fn.refs if kind != "export"]
    if name == "definition":
        _arity(name, args, 1)
        fn = _enclosing_function(graph, args[0])
        return graph.node(fn.form)
    if name == "vars":
        _arity(name, args, 1)
        node = to_node(args[0], graph)
        out: list[str] = []
        for n in t.walk(node):
            if isinstance(n, t.Var) and n.name != "_" and n.name not in out:
                out.append(n.name)
        return out
    if name == "bound_vars":
        _arity(name, args, 1)
        nodes = args[0] if isinstance(args[0], list) else [args[0]]
        out: list[str] = []
        for v in nodes:
            for bname in _pattern_bound(to_node(v, graph)):
                if bname not in out:
                    out.append(bname)
        return out
    if name == "intersect":
        _arity(name, args, 2)
        a, b = to_list(args[0]), to_list(args[1])
        return [x for x in a if any(val_eq(x, y) for y in b)]
    if name == "copy":
        _arity(name, args, 1)
        dup = t.copy_fresh(to_node(args[0], graph))
        graph.register_detached(dup)
        return dup
    if name == "exported_functions":
        _arity(name, args, 1)
        mod = _enclosing_module(graph, args[0])
        module = graph.module(mod.name)
        return [
            graph.functions[(mod.name, e.name, e.arity)]
            for e in module.exports
            if (mod.name, e.name, e.arity) in graph.functions
        ]
    raise SemError(f"unknown semantic function {name}")


def _arity(name: str, args: list, n: int) -> None:
    if len(args) != n:
        raise SemError(f"{name} expects {n} argument(s), got {len(args)}")


def sem_val_eq(a, b) -> bool:
    """val_eq extended with the semantic-node-to-name coercion."""
    if isinstance(a, (FunctionSem, ModuleSem, VarSem)) != isinstance(
        b, (FunctionSem, ModuleSem, VarSem)
    ):
        a = a.name if isinstance(a, (FunctionSem, ModuleSem, VarSem)) else a
        b = b.name if isinstance(b, (FunctionSem, ModuleSem, VarSem)) else b
    return val_eq(a, b)


# --- condition evaluation ---------------------------------------------------

_FRESH_BASE = "V"


def fresh_name(taken: set[str]) -> str:
    if _FRESH_BASE not in taken:
        return _FRESH_BASE
    i = 1
    while f"{_FRESH_BASE}{i}" in taken:
        i += 1
    return f"{_FRESH_BASE}{i}"


def eval_expr(c: CondExpr, b: Bindings, graph: SemanticGraph, this: t.Node):
    if isinstance(c, CVar):
        if c.name not in b:
            raise SemError(f"unbound metavariable {c.name}")
        return b[c.name]
    if isinstance(c, CThis):
        return this
    if isinstance(c, CAtom):
        return c.name
    if isinstance(c, CInt):
        return c.value
    if isinstance(c, CCall):
        args = [eval_expr(a, b, graph, this) for a in c.args]
        return call_semantic(c.name, args, graph)
    if isinstance(c, CInvoke):
        raise SemError("refactoring invocation is not allowed in a rule condition")
    raise SemError(f"cannot evaluate {type(c).__name__} as a value")


def eval_condition(
    c: CondExpr, b: Bindings, graph: SemanticGraph, this: t.Node
) -> tuple[bool, Bindings]:
    if isinstance(c, CAnd):
        ok, b = eval_condition(c.left, b, graph, this)
        if not ok:
            return False, b
        return eval_condition(c.right, b, graph, this)
    if isinstance(c, COr):
        ok, nb = eval_condition(c.left, b, graph, this)
        if ok:
            return True, nb
        return eval_condition(c.right, b, graph, this)
    if isinstance(c, CNot):
        ok, _ = eval_condition(c.arg, b, graph, this)
        return not ok, b
    if isinstance(c, CBind):
        value = eval_expr(c.expr, b, graph, this)
        if c.name in b:
            return sem_val_eq(b[c.name], value), b
        nb = b.bind(c.name, value)
        return nb is not None, nb if nb is not None else b
    if isinstance(c, CCall) and c.name == "fresh":
        return _eval_fresh(c, b, graph, this)
    value = eval_expr(c, b, graph, this)
    return bool(value), b


def _eval_fresh(c: CCall, b: Bindings, graph: SemanticGraph, this: t.Node):
    if len(c.args) != 1 or not isinstance(c.args[0], CVar):
        raise SemError("fresh expects a single metavariable argument")
    mv = c.args[0].name
    taken = graph.function_bound_names(this.nid) | graph.scope_names(this.nid)
    # names handed out by earlier fresh(..) conjuncts are taken too
    taken |= {v for k, v in b.map.items() if k != mv and isinstance(v, str)}
    taken |= {v.name for k, v in b.map.items() if k != mv and isinstance(v, t.Var)}
    if mv in b:
        return to_name(b[mv]) not in taken, b
    name = fresh_name(taken)
    nb = b.bind(mv, name)
    return True, nb


def is_metavar_name(s: str) -> bool:
    return bool(re.match(r"[A-Z_][A-Za-z0-9_]*\Z", s))
