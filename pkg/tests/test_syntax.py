import pytest
from hypothesis import given, settings, strategies as st

from miniref import tree as t
from miniref.lexer import MiniErlangSyntaxError
from miniref.parser import parse_clause_pattern, parse_expr, parse_module
from miniref.printer import SpliceError, print_expr, print_module, splice

SAMPLE = b"""-module(fruit).
-export([pick/1]).

% choose a fruit
pick(N) ->
    Basket = [apple, pear | []],
    case N of
        1 -> hd(Basket);
        _ -> pear
    end.
"""


def test_parse_print_roundtrip_module():
    mod = parse_module(SAMPLE)
    printed = print_module(mod)
    again = parse_module(printed.encode())
    assert t.struct_eq(mod, again)


def test_splice_no_edits_is_identity():
    mod = parse_module(SAMPLE)
    assert splice(mod.text, []) == SAMPLE
    assert mod.text == SAMPLE


def test_single_edit_leaves_rest_of_bytes_alone():
    src = b"-module(m).\nf() -> apple.\n"
    mod = parse_module(src)
    apple = next(n for n in t.walk(mod) if isinstance(n, t.Atom) and n.name == "apple")
    out = splice(src, [(apple.span, t.Atom("pear"))])
    assert out == b"-module(m).\nf() -> pear.\n"


def test_splice_reindents_to_span_column():
    src = b"-module(m).\nf() ->\n    old.\n"
    mod = parse_module(src)
    old = next(n for n in t.walk(mod) if isinstance(n, t.Atom) and n.name == "old")
    block = t.Block([t.Atom("a"), t.Atom("b")])
    out = splice(src, [(old.span, block)])
    assert out == b"-module(m).\nf() ->\n    begin\n        a,\n        b\n    end.\n"


def test_splice_rejects_overlap():
    with pytest.raises(SpliceError):
        splice(b"0123456789", [((0, 5), "x"), ((3, 7), "y")])


def test_spans_nest():
    mod = parse_module(SAMPLE)
    for node in t.walk(mod):
        if node.span is None:
            continue
        kids = [c for c in t.children(node) if c.span is not None]
        for c in kids:
            assert node.span[0] <= c.span[0] and c.span[1] <= node.span[1]
        for a, b in zip(kids, kids[1:]):
            assert a.span[1] <= b.span[0]


def test_every_parsed_node_has_a_span():
    mod = parse_module(SAMPLE)
    assert all(n.span is not None for n in t.walk(mod))


@pytest.mark.parametrize(
    "src",
    [
        "f() -> case",
        "f(",
        "f() -> .",
        "f() -> end.",
        "-module(m). f() -> 1. f() -> 2.",  # caught later, in the graph
    ][:4],
)
def test_syntax_errors_carry_position(src):
    with pytest.raises(MiniErlangSyntaxError) as exc:
        parse_module(src.encode())
    assert exc.value.line >= 1
    assert exc.value.col >= 1


def test_repeated_var_in_one_pattern_rejected():
    with pytest.raises(MiniErlangSyntaxError):
        parse_module(b"-module(m).\nf({X, X}) -> X.\n")
    with pytest.raises(MiniErlangSyntaxError):
        parse_module(b"-module(m).\nf(X, X) -> X.\n")
    # underscore is exempt
    parse_module(b"-module(m).\nf(_, _) -> ok.\n")


def test_nonlinear_patterns_allowed_in_rule_language():
    pat = parse_expr("{X, X}", meta=True)
    assert isinstance(pat, t.Tuple)
    assert all(isinstance(e, t.Metavar) for e in pat.elems)


def test_apply_is_a_plain_call():
    e = parse_expr("apply(G, [])")
    assert isinstance(e, t.Call)
    assert isinstance(e.callee, t.Atom) and e.callee.name == "apply"
    assert isinstance(e.args[1], t.Nil)


def test_var_callee_and_immediate_fun_call():
    e = parse_expr("X()")
    assert isinstance(e, t.Call) and isinstance(e.callee, t.Var)
    e = parse_expr("(fun() -> a end)()")
    assert isinstance(e, t.Call) and isinstance(e.callee, t.Fun)
    assert print_expr(e) == "(fun() -> a end)()"


def test_expression_sequence_becomes_block():
    e = parse_expr("X = 1, X")
    assert isinstance(e, t.Block)
    assert len(e.exprs) == 2


def test_clause_pattern_parse():
    cp = parse_clause_pattern("Name(Args..) -> Body..")
    assert isinstance(cp, t.ClausePat)
    assert isinstance(cp.name, t.Metavar)
    assert isinstance(cp.patterns[0], t.ListMetavar)
    assert isinstance(cp.body[0], t.ListMetavar)


def test_quoted_atoms():
    e = parse_expr("'Weird atom'")
    assert isinstance(e, t.Atom) and e.name == "Weird atom"
    assert print_expr(e) == "'Weird atom'"
    assert print_expr(t.Atom("case")) == "'case'"


def test_list_comprehension_roundtrip():
    src = "[X + 1 || X <- Xs, f(X)]"
    e = parse_expr(src)
    assert isinstance(e, t.ListComp)
    assert print_expr(e) == src


def test_case_prints_simple_bodies_inline():
    e = parse_expr("case H of 1 -> 2; 3 -> 4 end")
    assert print_expr(e) == "case H of\n    1 -> 2;\n    3 -> 4\nend"


# -- generative roundtrip ----------------------------------------------------

_atoms = st.sampled_from(["a", "b", "ok", "apple"])
_vars = st.sampled_from(["X", "Y", "Zs"])


def _exprs(leaf):
    return st.one_of(
        st.builds(t.Cons, leaf, st.builds(t.Nil)),
        st.builds(t.Tuple, st.lists(leaf, min_size=0, max_size=3)),
        st.builds(t.Call, st.builds(t.Atom, _atoms), st.lists(leaf, max_size=2)),
        st.builds(
            t.RemoteCall, st.builds(t.Atom, _atoms), st.builds(t.Atom, _atoms), st.lists(leaf, max_size=2)
        ),
        st.builds(lambda l, r: t.BinOp("+", l, r), leaf, leaf),
        st.builds(lambda s, b: t.Case(s, [t.Clause(None, [t.Var("W")], [b])]), leaf, leaf),
        st.builds(lambda b: t.Fun([t.Clause(None, [], [b])]), leaf),
        st.builds(lambda es: t.Block(es), st.lists(leaf, min_size=1, max_size=3)),
        st.builds(lambda h, src: t.ListComp(h, [t.Generator(t.Var("Q"), src)]), leaf, leaf),
    )


expr_strategy = st.recursive(
    st.one_of(
        st.builds(t.Atom, _atoms),
        st.builds(t.Integer, st.integers(0, 99)),
        st.builds(t.Var, _vars),
        st.builds(t.Nil),
    ),
    _exprs,
    max_leaves=25,
)


@settings(max_examples=300, deadline=None)
@given(expr_strategy)
def test_print_parse_is_structural_identity(e):
    printed = print_expr(e)
    back = parse_expr(printed)
    assert t.struct_eq(e, back), printed


@settings(max_examples=200, deadline=None)
@given(expr_strategy)
def test_copy_fresh_preserves_structure_and_renames_ids(e):
    dup = t.copy_fresh(e)
    assert t.struct_eq(e, dup)
    assert {n.nid for n in t.walk(e)}.isdisjoint({n.nid for n in t.walk(dup)})
    assert all(n.span is None for n in t.walk(dup))
