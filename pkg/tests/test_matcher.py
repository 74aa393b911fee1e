from hypothesis import given, settings, strategies as st

from miniref import tree as t
from miniref.matcher import Bindings, instantiate, match, val_eq
from miniref.parser import parse_clause_pattern, parse_expr
from miniref.printer import print_expr


def pat(text: str):
    return parse_expr(text, meta=True)


def code(text: str):
    return parse_expr(text)


def test_head_tail_binding():
    results = match(pat("[HeadExpr | TailExpr]"), code("[f(X) | T]"))
    assert len(results) == 1
    b = results[0]
    assert print_expr(b["HeadExpr"]) == "f(X)"
    assert print_expr(b["TailExpr"]) == "T"


def test_callee_and_list_metavar():
    (b,) = match(pat("Fun(Args..)"), code("foo(1, 2)"))
    assert isinstance(b["Fun"], t.Atom) and b["Fun"].name == "foo"
    assert [print_expr(a) for a in b["Args"]] == ["1", "2"]


def test_two_list_metavars_enumerate_all_splits():
    results = match(pat("{A.., B..}"), code("{1, 2, 3}"))
    assert len(results) == 4
    lengths = [(len(b["A"]), len(b["B"])) for b in results]
    assert lengths == [(0, 3), (1, 2), (2, 1), (3, 0)]  # shortest-A first


def test_single_list_metavar_single_candidate():
    results = match(pat("{A..}"), code("{1, 2, 3}"))
    assert len(results) == 1


def test_nonlinear_pattern_needs_equal_subtrees():
    assert len(match(pat("{X, X}"), code("{f(1), f(1)}"))) == 1
    assert match(pat("{X, X}"), code("{f(1), f(2)}")) == []


def test_seed_constrains_match():
    seed = Bindings({"X": code("apple")})
    assert len(match(pat("f(X)"), code("f(apple)"), seed)) == 1
    assert match(pat("f(X)"), code("f(pear)"), seed) == []


def test_list_metavar_rebinding_is_equality():
    results = match(pat("{A.., A..}"), code("{1, 2, 1, 2}"))
    assert len(results) == 1
    assert len(results[0]["A"]) == 2


def test_improper_tail():
    (b,) = match(pat("[X | Xs]"), code("[1, 2 | Rest]"))
    assert print_expr(b["Xs"]) == "[2 | Rest]"
    # the bound tail is the real subtree, not a reconstruction
    assert b["Xs"].span is not None


def test_match_inside_fun_and_case():
    (b,) = match(pat("fun() -> E end"), code("fun() -> apple end"))
    assert print_expr(b["E"]) == "apple"
    (b,) = match(pat("case S of P -> B end"), code("case X of 1 -> two end"))
    assert print_expr(b["S"]) == "X" and print_expr(b["P"]) == "1"


def test_clause_pattern_against_function_clause():
    cp = parse_clause_pattern("Name(Args..) -> Body..")
    clause = t.Clause("f", [t.Var("X"), t.Var("Y")], [t.Atom("one"), t.Atom("two")])
    (b,) = match(cp, clause)
    assert b["Name"] == "f"
    assert len(b["Args"]) == 2 and len(b["Body"]) == 2


def test_atom_scalar_mismatch():
    assert match(pat("f(1)"), code("f(2)")) == []
    assert match(pat("f(X)"), code("g(Y)")) == []


# -- instantiation -----------------------------------------------------------


def test_instantiate_sequence_replacement():
    b = Bindings({"Var": "V", "HeadExpr": code("g(1)"), "TailExpr": code("T")})
    out = instantiate([pat("Var = HeadExpr"), pat("[Var | TailExpr]")], b)
    assert [print_expr(e) for e in out] == ["V = g(1)", "[V | T]"]


def test_instantiate_remote_call():
    b = Bindings({"Mod": "m", "Fun": t.Atom("foo"), "Args": [code("1"), code("2")]})
    out = instantiate(pat("Mod:Fun(Args..)"), b)
    assert print_expr(out) == "m:foo(1, 2)"


def test_instantiate_tuple_scheme_shape():
    b = Bindings({"Name": "f", "Args": [code("A"), code("B")]})
    out = instantiate(pat("Name({Args..})"), b)
    assert print_expr(out) == "f({A, B})"


def test_instantiate_deep_copies():
    sub = code("g(1)")
    out = instantiate(pat("f(X)"), Bindings({"X": sub}))
    assert out.args[0] is not sub
    assert t.struct_eq(out.args[0], sub)


def test_instantiate_name_string_positions():
    out = instantiate(pat("X"), Bindings({"X": "V1"}))
    assert isinstance(out, t.Var) and out.name == "V1"
    out = instantiate(pat("X"), Bindings({"X": "ok"}))
    assert isinstance(out, t.Atom)
    out = instantiate(pat("X"), Bindings({"X": 42}))
    assert isinstance(out, t.Integer)


def test_instantiate_clause_pattern():
    cp = parse_clause_pattern("NewName(Args..) -> Body..")
    b = Bindings({"NewName": "g", "Args": [code("X")], "Body": [code("X")]})
    out = instantiate(cp, b)
    assert isinstance(out, t.Clause) and out.name == "g"


# -- properties --------------------------------------------------------------

_meta_pats = st.sampled_from(
    ["X", "[H | T]", "{A.., B}", "f(Args..)", "Fun(X, Y)", "case S of P -> B end", "[E || Q..]"]
)
_subjects = st.sampled_from(
    [
        "f(1, 2)",
        "[1, 2, 3]",
        "{a, b, c}",
        "case V of 1 -> ok end",
        "[W + 1 || W <- Ws]",
        "g(h(i))",
    ]
)


@settings(max_examples=300, deadline=None)
@given(_meta_pats, _subjects)
def test_match_instantiate_roundtrip(ptext, ntext):
    p, n = pat(ptext), code(ntext)
    for b in match(p, n):
        again = instantiate(p, b)
        assert t.struct_eq(again, n)


@settings(max_examples=200, deadline=None)
@given(st.permutations(["A", "B", "C"]), st.data())
def test_merge_order_independent(order, data):
    vals = {"A": code("1"), "B": code("{x}"), "C": "name"}
    singletons = {k: Bindings({k: v}) for k, v in vals.items()}
    merged = Bindings()
    for k in order:
        merged = merged.merge(singletons[k])
    assert merged.keys() == {"A", "B", "C"}
    assert all(val_eq(merged[k], vals[k]) for k in vals)


def test_merge_conflict_is_order_independent():
    b1 = Bindings({"X": code("1")})
    b2 = Bindings({"X": code("2"), "Y": code("3")})
    assert b1.merge(b2) is None and b2.merge(b1) is None


def test_val_eq_coercions():
    assert val_eq(t.Atom("ok"), "ok")
    assert val_eq(t.Integer(3), 3)
    assert val_eq(t.Var("X"), "X")
    assert not val_eq(t.Atom("ok"), "nope")
    assert not val_eq(t.Tuple([]), "ok")
