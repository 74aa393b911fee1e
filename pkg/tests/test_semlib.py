import pytest

from miniref import tree as t
from miniref.dsl import parse_condition
from miniref.graph import FunctionSem, ModuleSem, build_graph
from miniref.matcher import Bindings
from miniref.parser import parse_expr, parse_module
from miniref.printer import print_expr
from miniref.semlib import SemError, call_semantic, eval_condition, fresh_name

SRC = b"""-module(m).
-export([f/1]).

f(A) ->
    A + 1.

g(X, Y) ->
    f(X) + f(Y).

h() ->
    io:format().
"""


@pytest.fixture
def g():
    return build_graph([parse_module(SRC)])


def ev(text, g, this, bindings=None):
    return eval_condition(parse_condition(text), bindings or Bindings(), g, this)


def target(g, line, col):
    return g.node(g.lookup_at("m", line, col))


def test_atom_and_module_binding(g):
    this = target(g, 8, 5)  # f(X) call inside g/2
    ok, b = ev("atom(Fun) AND Mod = module(THIS)", g, this, Bindings({"Fun": t.Atom("f")}))
    assert ok
    assert isinstance(b["Mod"], ModuleSem) and b["Mod"].name == "m"


def test_function_exists(g):
    this = target(g, 5, 5)
    ok, _ = ev("function_exists(module(THIS), NewName, 1)", g, this, Bindings({"NewName": "f"}))
    assert ok
    ok, _ = ev("NOT function_exists(module(THIS), NewName, 1)", g, this, Bindings({"NewName": "q"}))
    assert ok


def test_vars_bound_vars_intersect(g):
    e = parse_expr("X + Y")
    g.register_detached(e)
    assert call_semantic("vars", [e], g) == ["X", "Y"]
    gen = parse_expr("[X || X <- L]").qualifiers[0]
    g.register_detached(gen)
    assert call_semantic("bound_vars", [[gen]], g) == ["X"]
    assert call_semantic("intersect", [["X", "Y"], ["Y", "Z", "X"]], g) == ["X", "Y"]


def test_intersect_result_subset_in_first_order(g):
    a, b = ["C", "A", "B"], ["B", "C"]
    out = call_semantic("intersect", [a, b], g)
    assert out == ["C", "B"]  # A's order, members of both


def test_length_accepts_values_and_cons_nodes(g):
    assert call_semantic("length", [[1, 2, 3]], g) == 3
    assert call_semantic("length", [parse_expr("[a, b]")], g) == 2
    with pytest.raises(SemError):
        call_semantic("length", [parse_expr("[a | B]")], g)


def test_function_clauses_and_references(g):
    fn = g.functions[("m", "f", 1)]
    clauses = call_semantic("function_clauses", [fn], g)
    assert len(clauses) == 1 and isinstance(clauses[0], t.Clause)
    refs = call_semantic("function_references", [fn], g)
    # two call sites; the export entry is not a reference here
    assert len(refs) == 2
    assert all(isinstance(r, t.Call) for r in refs)


def test_definition_and_function(g):
    call = target(g, 8, 5)
    fn = call_semantic("function", [call], g)
    assert isinstance(fn, FunctionSem) and fn.name == "g"
    form = call_semantic("definition", [fn], g)
    assert isinstance(form, t.FunctionForm) and form.name == "g"


def test_exported_functions(g):
    mod = g.module_sems["m"]
    out = call_semantic("exported_functions", [mod], g)
    assert [(f.name, f.arity) for f in out] == [("f", 1)]


def test_pure_predicate(g):
    ok, _ = ev("pure(E)", g, target(g, 5, 5), Bindings({"E": target(g, 8, 5)}))
    assert ok
    impure_body = g.node(g.functions[("m", "h", 0)].clauses[0]).body[0]
    ok, _ = ev("pure(E)", g, target(g, 5, 5), Bindings({"E": impure_body}))
    assert not ok


def test_copy_is_detached(g):
    call = target(g, 8, 5)
    dup = call_semantic("copy", [call], g)
    assert dup is not call and t.struct_eq(dup, call)
    assert g.node(dup.nid) is dup  # registered, so refs to it resolve


def test_fresh_binds_unbound_metavar(g):
    this = target(g, 5, 5)  # inside f/1, names: {A}
    ok, b = ev("fresh(Var)", g, this)
    assert ok and b["Var"] == "V"


def test_fresh_series_skips_taken_names():
    mod = parse_module(b"-module(m).\nf(V, V1) -> V + V1.\n")
    gg = build_graph([mod])
    this = mod.forms[0].clauses[0].body[0]
    ok, b = eval_condition(parse_condition("fresh(Var)"), Bindings(), gg, this)
    assert ok and b["Var"] == "V2"


def test_fresh_on_bound_metavar_is_a_check(g):
    this = target(g, 5, 5)
    ok, _ = ev("fresh(Var)", g, this, Bindings({"Var": "A"}))
    assert not ok  # A is in scope in f/1
    ok, _ = ev("fresh(Var)", g, this, Bindings({"Var": "Q"}))
    assert ok


def test_fresh_name_generator():
    assert fresh_name(set()) == "V"
    assert fresh_name({"V"}) == "V1"
    assert fresh_name({"V", "V1", "V2"}) == "V3"


def test_bind_compare_when_already_bound(g):
    this = target(g, 5, 5)
    ok, _ = ev("Mod = module(THIS)", g, this, Bindings({"Mod": "m"}))
    assert ok
    ok, _ = ev("Mod = module(THIS)", g, this, Bindings({"Mod": "other"}))
    assert not ok


def test_short_circuit_or(g):
    this = target(g, 5, 5)
    ok, b = ev("atom(A) OR Mod = module(THIS)", g, this, Bindings({"A": t.Atom("x")}))
    assert ok and "Mod" not in b  # left succeeded; right never ran


def test_wrong_arity_and_unknown_function(g):
    with pytest.raises(SemError):
        call_semantic("length", [[1], [2]], g)
    with pytest.raises(SemError):
        call_semantic("no_such_fn", [], g)


def test_determinism(g):
    this = target(g, 5, 5)
    r1 = ev("fresh(Var) AND atom(A)", g, this, Bindings({"A": t.Atom("x")}))
    r2 = ev("fresh(Var) AND atom(A)", g, this, Bindings({"A": t.Atom("x")}))
    assert r1[0] == r2[0] and r1[1] == r2[1]
