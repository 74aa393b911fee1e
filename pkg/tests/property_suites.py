"""Randomized/exhaustive property suites shared by the acceptance tests.

Each ``run_*`` function executes one suite at full volume and returns the
number of cases checked; assertion failures identify the violated property.
"""

from __future__ import annotations

import random

from pathlib import Path

from miniref import tree as t
from miniref.dsl import RuleDef, SchemeDef, parse_refl
from miniref.graph import GraphError, SemanticGraph
from miniref.matcher import instantiate, match
from miniref.parser import parse_expr, parse_module
from miniref.verifier import (
    Config,
    GoalError,
    Stuck,
    SymDefs,
    SymEnv,
    Value,
    goal_from_rule,
    goals_from_application,
    goals_from_dataflow,
    interpret,
    is_value,
    replay,
    satisfies,
    scc_prove,
    step_config,
    term_eq,
)
from miniref.verifier.config import subst_math
from miniref.verifier.rules import _CATALOG

# --- shared ground-term generator ---------------------------------------------

ATOMS = ["a", "b", "ok", "apple", "pear"]


def ground_term(rng: random.Random, depth: int = 3) -> t.Expr:
    if depth == 0 or rng.random() < 0.4:
        if rng.random() < 0.5:
            return t.Atom(rng.choice(ATOMS))
        return t.Integer(rng.randint(0, 9))
    kind = rng.randrange(3)
    n = rng.randint(0, 3)
    elems = [ground_term(rng, depth - 1) for _ in range(n)]
    if kind == 0:
        return t.mklist(elems)
    if kind == 1:
        return t.Tuple(elems)
    return t.Integer(rng.randint(0, 9))


def term_text(term: t.Expr) -> str:
    if isinstance(term, t.Atom):
        return term.name
    if isinstance(term, t.Integer):
        return str(term.value)
    if isinstance(term, (t.Cons, t.Nil)):
        elems, _ = t.unlist(term)
        return "[" + ", ".join(term_text(e) for e in elems) + "]"
    if isinstance(term, t.Tuple):
        return "{" + ", ".join(term_text(e) for e in term.elems) + "}"
    raise AssertionError(f"not a printable ground term: {term!r}")


# --- suite 1: transaction rollback restores byte-identical source --------------


def _random_module_source(rng: random.Random) -> str:
    e1 = term_text(ground_term(rng))
    e2 = term_text(ground_term(rng))
    e3 = term_text(ground_term(rng))
    return (
        "-module(p).\n"
        "-export([f/1, g/0]).\n\n"
        f"f(X) ->\n    Y = {e1},\n    {{X, Y, {e2}}}.\n\n"
        f"g() ->\n    [{e3} | f({rng.randint(0, 9)})].\n"
    )


def run_rollback_suite(cases: int = 1000, seed: int = 11) -> int:
    rng = random.Random(seed)
    for _ in range(cases):
        src = _random_module_source(rng)
        graph = SemanticGraph([parse_module(src)])
        original = graph.render("p")
        assert original == src.encode()
        candidates = [
            n
            for n in t.walk(graph.module("p"))
            if isinstance(n, t.Expr)
            and n.span is not None
            and graph.parent(n.nid) is not None
        ]
        graph.txn_begin()
        for _ in range(rng.randint(1, 3)):
            target = rng.choice(candidates)
            try:
                graph.txn_replace(target.nid, ground_term(rng))
            except GraphError:
                continue  # replaced node no longer in the tree; irrelevant here
            candidates = [
                n
                for n in t.walk(graph.module("p"))
                if isinstance(n, t.Expr) and graph.parent(n.nid) is not None
            ]
        graph.txn_rollback()
        assert graph.render("p") == original, "rollback must restore the source bytes"
    return cases


# --- suite 2: match/instantiate roundtrip ---------------------------------------


def _generalize(term: t.Expr, rng: random.Random, counter: list[int]) -> t.Expr:
    if rng.random() < 0.25:
        counter[0] += 1
        return t.Metavar(f"M{counter[0]}")
    if isinstance(term, t.Atom):
        return t.Atom(term.name)
    if isinstance(term, t.Integer):
        return t.Integer(term.value)
    if isinstance(term, t.Nil):
        return t.Nil()
    if isinstance(term, t.Cons):
        return t.Cons(_generalize(term.head, rng, counter), _generalize(term.tail, rng, counter))
    if isinstance(term, t.Tuple):
        elems = [_generalize(e, rng, counter) for e in term.elems]
        if elems and rng.random() < 0.2:
            i = rng.randrange(len(elems))
            j = rng.randint(i, len(elems))
            counter[0] += 1
            elems[i:j] = [t.ListMetavar(f"M{counter[0]}")]
        return t.Tuple(elems)
    raise AssertionError(f"unexpected term {term!r}")


def run_roundtrip_suite(cases: int = 1000, seed: int = 12) -> int:
    rng = random.Random(seed)
    for _ in range(cases):
        term = ground_term(rng)
        pattern = _generalize(term, rng, [0])
        bindings = match(pattern, term)
        assert bindings, "a pattern generalized from a term must match it"
        for b in bindings:
            rebuilt = instantiate(pattern, b)
            node = rebuilt[0] if isinstance(rebuilt, list) else rebuilt
            assert t.struct_eq(node, term), "instantiate must invert match"
    return cases


# --- suite 3: a two-way sequence split has n+1 solutions ------------------------


def run_list_split_suite() -> int:
    cases = 0
    makers = [
        lambda i: t.Integer(i),
        lambda i: t.Atom(ATOMS[i % len(ATOMS)]),
        lambda i: t.Tuple([t.Integer(i)]),
        lambda i: t.mklist([t.Integer(i)]),
        lambda i: t.Tuple([t.Atom("k"), t.Integer(i)]),
    ]
    for make in makers:
        for n in range(200):
            pattern = t.Tuple([t.ListMetavar("A"), t.ListMetavar("B")])
            node = t.Tuple([make(i) for i in range(n)])
            bindings = match(pattern, node)
            assert len(bindings) == n + 1, f"splitting {n} elements must give {n + 1} ways"
            cases += 1
    return cases


# --- suite 4: the step rules agree with an independent evaluator ----------------

DEFS_SOURCE = """
-module(o).
-export([inc/1, id/1, pair/2]).

inc(X) ->
    X + 1.

id(X) ->
    X.

pair(X, Y) ->
    {X, Y}.
"""


class OracleStuck(Exception):
    pass


def _oracle_match(pattern, value, binds: dict) -> bool:
    if isinstance(pattern, t.Var):
        if pattern.name == "_":
            return True
        binds[pattern.name] = value
        return True
    if isinstance(pattern, t.Atom):
        return isinstance(value, t.Atom) and value.name == pattern.name
    if isinstance(pattern, t.Integer):
        return isinstance(value, t.Integer) and value.value == pattern.value
    if isinstance(pattern, t.Nil):
        return isinstance(value, t.Nil)
    if isinstance(pattern, t.Cons):
        return (
            isinstance(value, t.Cons)
            and _oracle_match(pattern.head, value.head, binds)
            and _oracle_match(pattern.tail, value.tail, binds)
        )
    if isinstance(pattern, t.Tuple):
        if not isinstance(value, t.Tuple) or len(value.elems) != len(pattern.elems):
            return False
        return all(_oracle_match(p, v, binds) for p, v in zip(pattern.elems, value.elems))
    raise OracleStuck(f"unsupported pattern {pattern!r}")


def _oracle_clauses(clauses, args, env, defs):
    for clause in clauses:
        if len(clause.patterns) != len(args):
            continue
        binds = dict(env)
        if all(_oracle_match(p, a, binds) for p, a in zip(clause.patterns, args)):
            return _oracle_body(clause.body, binds, defs)
    raise OracleStuck("no clause matches")


def _oracle_body(body, env, defs):
    env = dict(env)
    result = None
    for e in body:
        result, env = _oracle_step(e, env, defs)
    return result


def _oracle_step(code, env, defs):
    if isinstance(code, t.Match):
        value = _oracle(code.expr, env, defs)
        binds = dict(env)
        if not _oracle_match(code.pattern, value, binds):
            raise OracleStuck("match failure")
        return value, binds
    return _oracle(code, env, defs), env


def _oracle(code, env: dict, defs: dict):
    if isinstance(code, (t.Atom, t.Integer, t.Nil)):
        return code
    if isinstance(code, t.Var):
        if code.name not in env:
            raise OracleStuck(f"unbound {code.name}")
        return env[code.name]
    if isinstance(code, t.Cons):
        return t.Cons(_oracle(code.head, env, defs), _oracle(code.tail, env, defs))
    if isinstance(code, t.Tuple):
        return t.Tuple([_oracle(e, env, defs) for e in code.elems])
    if isinstance(code, t.Match):
        return _oracle_step(code, env, defs)[0]
    if isinstance(code, t.Block):
        return _oracle_body(code.exprs, env, defs)
    if isinstance(code, t.Case):
        value = _oracle(code.scrutinee, env, defs)
        return _oracle_clauses(code.clauses, [value], env, defs)
    if isinstance(code, t.Fun):
        return code
    if isinstance(code, t.BinOp):
        left, right = _oracle(code.left, env, defs), _oracle(code.right, env, defs)
        if code.op == "+":
            if not isinstance(left, t.Integer) or not isinstance(right, t.Integer):
                raise OracleStuck("+ on non-integers")
            return t.Integer(left.value + right.value)
        if code.op == "++":
            le, lt = t.unlist(left)
            if lt is not None or not isinstance(left, (t.Cons, t.Nil)):
                raise OracleStuck("++ on an improper left list")
            return t.mklist(le, right)
        raise OracleStuck(f"operator {code.op}")
    if isinstance(code, t.RemoteCall):
        mod = _oracle(code.module, env, defs) if not isinstance(code.module, t.Atom) else code.module
        name = code.name
        args = [_oracle(a, env, defs) for a in code.args]
        if isinstance(mod, t.Atom) and mod.name == "lists" and isinstance(name, t.Atom) and name.name == "map":
            f, lst = args
            elems, tail = t.unlist(lst)
            if tail is not None:
                raise OracleStuck("map over an improper list")
            return t.mklist([_oracle_clauses(f.clauses, [e], env, defs) for e in elems])
        if isinstance(name, t.Atom):
            return _oracle(t.Call(t.Atom(name.name), args), env, defs)
        raise OracleStuck("dynamic remote call")
    if isinstance(code, t.Call):
        if isinstance(code.callee, t.Atom) and code.callee.name == "apply" and len(code.args) == 2:
            f = _oracle(code.args[0], env, defs)
            arglist = _oracle(code.args[1], env, defs)
            elems, tail = t.unlist(arglist)
            if tail is not None or not isinstance(f, t.Fun):
                raise OracleStuck("bad apply")
            return _oracle_clauses(f.clauses, elems, env, defs)
        args = [_oracle(a, env, defs) for a in code.args]
        if isinstance(code.callee, t.Atom):
            name = code.callee.name
            if name == "length" and len(args) == 1:
                elems, tail = t.unlist(args[0])
                if tail is not None or not isinstance(args[0], (t.Cons, t.Nil)):
                    raise OracleStuck("length of a non-list")
                return t.Integer(len(elems))
            if name == "atom_to_list" and len(args) == 1:
                if not isinstance(args[0], t.Atom):
                    raise OracleStuck("atom_to_list of a non-atom")
                return t.mklist([t.Integer(ord(c)) for c in args[0].name])
            if (name, len(args)) in defs:
                return _oracle_clauses(defs[(name, len(args))], args, env, defs)
            raise OracleStuck(f"unknown function {name}/{len(args)}")
        callee = _oracle(code.callee, env, defs)
        if isinstance(callee, t.Fun):
            return _oracle_clauses(callee.clauses, args, env, defs)
        raise OracleStuck("callee is not a function")
    if isinstance(code, t.ListComp):
        return t.mklist(_oracle_comp(code.head, code.qualifiers, env, defs))
    raise OracleStuck(f"unsupported expression {type(code).__name__}")


def _oracle_comp(head, quals, env, defs):
    if not quals:
        return [_oracle(head, env, defs)]
    q, rest = quals[0], quals[1:]
    if isinstance(q, t.Filter):
        keep = _oracle(q.expr, env, defs)
        if not isinstance(keep, t.Atom) or keep.name not in ("true", "false"):
            raise OracleStuck("non-boolean filter")
        return _oracle_comp(head, rest, env, defs) if keep.name == "true" else []
    assert isinstance(q, t.Generator)
    source = _oracle(q.source, env, defs)
    elems, tail = t.unlist(source)
    if tail is not None or not isinstance(source, (t.Cons, t.Nil)):
        raise OracleStuck("generator over a non-list")
    out = []
    for e in elems:
        binds = dict(env)
        if _oracle_match(q.pattern, e, binds):
            out.extend(_oracle_comp(head, rest, binds, defs))
    return out


def _gen_program(rng: random.Random, kind: int):
    """A (source-or-node, env) pair per construct family."""
    g = lambda: term_text(ground_term(rng, 2))  # noqa: E731
    i = lambda: rng.randint(0, 9)  # noqa: E731
    lst = lambda: "[" + ", ".join(str(i()) for _ in range(rng.randint(0, 3))) + "]"  # noqa: E731
    if kind == 0:
        return f"{i()} + {i()}", {}
    if kind == 1:
        return f"{lst()} ++ {lst()}", {}
    if kind == 2:
        return f"length({lst()})", {}
    if kind == 3:
        return f"atom_to_list({rng.choice(ATOMS)})", {}
    if kind == 4:
        return f"begin X = {g()}, {{X, {g()}}} end", {}
    if kind == 5:
        return f"begin ok, {g()} end", {}
    if kind == 6:
        return f"begin {g()} end", {}
    if kind == 7:
        scrutinee = rng.choice([f"{{{i()}}}", str(i()), "[]"])
        return (
            f"case {scrutinee} of {{N}} -> {{got, N}}; [] -> empty; _Other -> other end",
            {},
        )
    if kind == 8:
        return rng.choice([f"inc({i()})", f"id({g()})", f"pair({g()}, {g()})"]), {}
    if kind == 9:
        fun = t.Fun([t.Clause(None, [t.Var("P")], [t.BinOp("+", t.Var("P"), t.Integer(1))])])
        return t.Call(fun, [t.Integer(i())]), {}
    if kind == 10:
        fun = t.Fun([t.Clause(None, [t.Var("P"), t.Var("Q")], [t.Tuple([t.Var("Q"), t.Var("P")])])])
        return t.Call(t.Atom("apply"), [fun, t.mklist([t.Integer(i()), t.Atom("a")])]), {}
    if kind == 11:
        return f"o:inc({i()})", {}
    if kind == 12:
        fun = t.Fun([t.Clause(None, [t.Var("P")], [t.Tuple([t.Atom("w"), t.Var("P")])])])
        source = t.mklist([ground_term(rng, 1) for _ in range(rng.randint(0, 3))])
        return t.RemoteCall(t.Atom("lists"), t.Atom("map"), [fun, source]), {}
    if kind == 13:
        return f"[{{tag, X}} || X <- {lst()}]", {}
    if kind == 14:
        elems = ", ".join(rng.choice([f"{{{i()}}}", str(i())]) for _ in range(rng.randint(0, 4)))
        return f"[X || {{X}} <- [{elems}]]", {}
    if kind == 15:
        return f"[X || X <- {lst()}, {rng.choice(['true', 'false'])}]", {}
    if kind == 16:
        return t.Var("X"), {"X": ground_term(rng, 2)}
    if kind == 17:
        return f"X = {g()}", {}
    if kind == 18:
        return f"{{A, B}} = {{{i()}, {g()}}}", {}
    # deliberate stuck program: no clause can match
    return f"case {rng.choice(ATOMS)} of {{N}} -> N end", {}


KINDS = 20
CONCRETE_TAGS = {tag for tag, _ in _CATALOG}
CONCRETE_TAGS.discard("case-split")  # only fires on undecidable symbolic scrutinees


def _run_collecting_tags(code, env: dict, defs_module):
    tags = set()
    cfg = Config(code, SymEnv(tuple(env.items()), None), SymDefs.of_module(defs_module))
    for _ in range(5000):
        if is_value(cfg.code):
            return Value(cfg.code), tags
        step = step_config(cfg, ())
        if step is None or len(step.branches) != 1:
            return Stuck(cfg), tags
        tags.add(step.tag)
        code2, env2, _ = step.branches[0]
        cfg = Config(code2, env2, cfg.defs)
    raise AssertionError("interpreter fuel exhausted on a generated program")


def run_semantics_consistency_suite(cases_per_kind: int = 55, seed: int = 13) -> int:
    rng = random.Random(seed)
    defs_module = parse_module(DEFS_SOURCE)
    defs = {(f.name, f.arity): f.clauses for f in defs_module.forms}
    covered: set = set()
    cases = 0
    for kind in range(KINDS):
        for _ in range(cases_per_kind):
            prog, env = _gen_program(rng, kind)
            code = parse_expr(prog) if isinstance(prog, str) else prog
            result, tags = _run_collecting_tags(code, env, defs_module)
            covered |= tags
            try:
                expected = _oracle(code, dict(env), defs)
            except OracleStuck:
                assert isinstance(result, Stuck), (
                    f"rules terminated a program the reference evaluator rejects: {prog}"
                )
            else:
                assert isinstance(result, Value), f"rules got stuck on {prog}: {result}"
                assert term_eq(result.term, expected), (
                    f"rules and reference evaluator disagree on {prog}"
                )
            cases += 1
    missing = CONCRETE_TAGS - covered
    assert not missing, f"semantics rules never exercised: {sorted(missing)}"
    return cases


# --- suite 5: the satisfaction relation, positive and negative ------------------


def _symbolic_pattern(rng: random.Random):
    """A pattern configuration plus a valuation for its placeholders."""
    rho = {
        "m1": ground_term(rng, 2),
        "m2": ground_term(rng, 2),
    }
    shapes = [
        t.Tuple([t.MathVar("m1"), t.Atom("k"), t.MathVar("m2")]),
        t.Cons(t.MathVar("m1"), t.mklist([t.MathVar("m2")])),
        t.MathVar("m1"),
        t.Tuple([t.MathVar("m1"), t.MathVar("m1")]),
    ]
    code = shapes[rng.randrange(len(shapes))]
    entries = (("X", t.MathVar("m2")), ("Y", t.Integer(rng.randint(-5, 5))))
    return Config(code, SymEnv(entries, None), SymDefs((), None)), rho


def run_satisfaction_suite(cases: int = 1000, seed: int = 14) -> int:
    rng = random.Random(seed)
    for n in range(cases):
        pattern, rho = _symbolic_pattern(rng)
        gamma = Config(
            subst_math(pattern.code, rho),
            SymEnv(tuple((k, subst_math(v, rho)) for k, v in pattern.env.entries), None),
            pattern.defs,
        )
        if n % 2 == 0:
            assert satisfies(gamma, rho, pattern), "a substituted instance must satisfy"
        else:
            which = rng.randrange(3)
            if which == 0:
                bad = Config(t.Tuple([gamma.code, t.Atom("zz")]), gamma.env, gamma.defs)
            elif which == 1:
                entries = (("X", t.Atom("zz")),) + gamma.env.entries[1:]
                bad = Config(gamma.code, SymEnv(entries, None), gamma.defs)
            else:
                entries = gamma.env.entries[:1]  # drop a binding; frames are closed
                bad = Config(gamma.code, SymEnv(entries, None), gamma.defs)
            assert not satisfies(bad, rho, pattern), "a perturbed instance must not satisfy"
    return cases


# --- suite 6: every proved goal replays mechanically -----------------------------

PKG_DIR = Path(__file__).resolve().parent.parent / "src" / "miniref"


def all_proof_goals():
    """Every equivalence goal the shipped definitions and samples give rise to."""
    goals = []
    for path in sorted((PKG_DIR / "definitions").glob("*.refl")):
        for d in parse_refl(path.read_text()):
            if isinstance(d, RuleDef):
                try:
                    goals.append(goal_from_rule(d))
                except GoalError:
                    continue  # combinators and modified rules have no rule goal
            elif isinstance(d, SchemeDef) and d.definition is not None and d.references:
                goals.extend(goals_from_dataflow(d))
    before = parse_module((PKG_DIR / "samples" / "apple.erl").read_text())
    after = parse_module((PKG_DIR / "samples" / "apple_after.erl").read_text())
    goals.extend(goals_from_application(before, after))
    return goals


def run_replay_suite() -> int:
    proved = 0
    for goal in all_proof_goals():
        result = scc_prove(goal)
        if result.proved:
            assert replay(goal, result), f"proved goal {goal.name} must replay"
            proved += 1
    assert proved >= 5, "the shipped corpus must yield several proved goals"
    return proved
