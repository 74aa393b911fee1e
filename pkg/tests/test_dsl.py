from pathlib import Path

import pytest

from miniref import tree as t
from miniref.dsl import (
    CAnd,
    CBind,
    CCall,
    CInvoke,
    CNot,
    CThis,
    CVar,
    CompositeDef,
    ReflSyntaxError,
    RuleDef,
    SchemeDef,
    SelectorDef,
    parse_condition,
    parse_refl,
    print_refl,
    validate,
)

DEFS_DIR = Path(__file__).resolve().parent.parent / "src" / "miniref" / "definitions"


def load(name: str):
    return parse_refl((DEFS_DIR / name).read_text())


def test_extract_listhead_parses():
    defs = load("local.refl")
    d = defs[0]
    assert isinstance(d, RuleDef)
    assert d.name == "extract_listhead" and d.params == []
    (_, step), = d.steps
    assert isinstance(step.matching, t.Cons)
    assert len(step.replacement) == 2
    assert isinstance(step.replacement[0], t.Match)
    cond = step.condition
    assert isinstance(cond, CCall) and cond.name == "fresh"
    assert cond.args == [CVar("Var")]


def test_add_module_qualifier_condition_shape():
    d = load("local.refl")[1]
    (_, step), = d.steps
    cond = step.condition
    assert isinstance(cond, CAnd)
    assert isinstance(cond.left, CCall) and cond.left.name == "atom"
    assert isinstance(cond.right, CBind) and cond.right.name == "Mod"
    assert isinstance(cond.right.expr, CCall) and cond.right.expr.args == [CThis()]


def test_listcomprehension_to_map_binds_a_list_metavar():
    d = load("local.refl")[2]
    (_, step), = d.steps
    assert isinstance(step.matching, t.ListComp)
    binds = step.condition
    while isinstance(binds, CAnd):
        binds = binds.left
    assert isinstance(binds, CBind) and binds.name == "Vars" and binds.is_list


def test_extensive_rename_has_then_chain_and_modifiers():
    d = load("extensive.refl")[0]
    assert isinstance(d, RuleDef) and d.params == ["NewName"]
    assert [op for op, _ in d.steps] == [None, "THEN"]
    first, second = (s for _, s in d.steps)
    assert first.modifier[0] == "ON"
    assert first.modifier[1] == CCall("function_clauses", [CThis()])
    assert isinstance(first.matching, t.ClausePat)
    assert isinstance(first.condition, CNot)
    assert second.modifier[1] == CCall("function_references", [CThis()])
    assert isinstance(second.matching, t.Call)


def test_signature_schemes():
    rename, tuple_args = load("schemes.refl")[:2]
    assert isinstance(rename, SchemeDef) and rename.kind == "signature"
    assert rename.params == ["NewName"]
    assert isinstance(rename.rule.matching, t.Call)
    assert isinstance(tuple_args.rule.replacement[0].args[0], t.Tuple)


def test_forward_dataflow_scheme():
    d = load("schemes.refl")[2]
    assert d.kind == "forward_dataflow" and d.name == "fun2value"
    assert isinstance(d.definition.matching, t.Fun)
    # inline `----- WHEN pure(E)` form
    assert d.definition.condition == CCall("pure", [CVar("E")])
    assert [rv for rv, _ in d.references] == ["F", "G"]
    g_step = d.references[1][1]
    assert isinstance(g_step.matching, t.Call)
    assert g_step.matching.callee.name == "apply"


def test_backward_dataflow_scheme():
    d = load("schemes.refl")[3]
    assert d.kind == "backward_dataflow"
    assert isinstance(d.definition.matching, t.Cons)
    (refvar, step), = d.references
    assert refvar == "Y"
    assert isinstance(step.replacement[0], t.Cons)


def test_composite_and_selectors():
    comp, wrap, fun_part, last_arg = load("composite.refl")
    assert isinstance(comp, CompositeDef)
    assert [s.var for s in comp.body[:2]] == ["OrigName", "Orig"]
    assert isinstance(comp.body[2].call, CInvoke)
    assert comp.body[2].call.recv == CThis()
    assert comp.body[2].call.name == "wrap_into_fun"
    # receiver may itself be a call: definition(Copy).last_arg()
    sel = next(s.call for s in comp.body if s.var == "LastArg")
    assert isinstance(sel, CInvoke) and isinstance(sel.recv, CCall)
    assert isinstance(wrap, RuleDef)
    assert isinstance(fun_part, SelectorDef) and fun_part.returns == "F"
    assert isinstance(last_arg, SelectorDef)
    assert isinstance(last_arg.matching, t.ClausePat)


@pytest.mark.parametrize(
    "name", ["local.refl", "extensive.refl", "schemes.refl", "composite.refl"]
)
def test_shipped_definitions_validate_cleanly(name):
    assert validate(load(name)) == []


@pytest.mark.parametrize(
    "name", ["local.refl", "extensive.refl", "schemes.refl", "composite.refl"]
)
def test_print_parse_roundtrip(name):
    defs = load(name)
    text = print_refl(defs)
    again = parse_refl(text)
    assert len(again) == len(defs)
    assert print_refl(again) == text


def test_condition_precedence():
    c = parse_condition("a(X) OR b(X) AND NOT c(X)")
    from miniref.dsl import COr

    assert isinstance(c, COr)
    assert isinstance(c.right, CAnd)
    assert isinstance(c.right.right, CNot)


def test_dot_call_is_on_shorthand():
    c = parse_condition("A.refac(1)")
    assert c == CInvoke(CVar("A"), "refac", [__import__("miniref.dsl", fromlist=["CInt"]).CInt(1)])


def test_unbindable_replacement_metavar():
    defs = parse_refl("REFACTORING r()\n    X\n    -----\n    Q\n")
    diags = validate(defs)
    assert any("Q unbindable" in d for d in diags)


def test_duplicate_definition_diagnostic():
    text = "REFACTORING r()\n    X\n    -----\n    X\n"
    diags = validate(parse_refl(text + "\n" + text))
    assert any("duplicate" in d for d in diags)


def test_recursive_composite_diagnostic():
    text = "REFACTORING a()\nDO\n    THIS.a()\n"
    diags = validate(parse_refl(text))
    assert any("recursive" in d for d in diags)


def test_mutually_recursive_composites():
    text = (
        "REFACTORING a()\nDO\n    THIS.b()\n\n"
        "REFACTORING b()\nDO\n    THIS.a()\n"
    )
    diags = validate(parse_refl(text))
    assert any("recursive" in d for d in diags)


def test_list_metavar_in_illegal_position():
    defs = parse_refl("REFACTORING r()\n    X = Args..\n    -----\n    X\n")
    diags = validate(defs)
    assert any("non-sequence" in d for d in diags)


def test_selector_with_replacement_rejected():
    with pytest.raises(ReflSyntaxError):
        parse_refl("SELECTOR s()\n    X\n    -----\n    X\nRETURN X\n")


def test_missing_separator_rejected():
    with pytest.raises(ReflSyntaxError):
        parse_refl("REFACTORING r()\n    X\nWHEN\n    atom(X)\n")


def test_rebinding_metavar_rejected():
    text = (
        "REFACTORING r(M)\n    X\n    -----\n    X\n"
        "WHEN\n    M = module(THIS)\n"
    )
    diags = validate(parse_refl(text))
    assert any("more than once" in d for d in diags)


def test_reference_var_must_occur_on_both_sides():
    text = (
        "FORWARD DATAFLOW REFACTORING d()\n"
        "DEFINITION\n    X\n    -----\n    X\n"
        "REFERENCE F\n    F\n    -----\n    ok\n"
    )
    diags = validate(parse_refl(text))
    assert any("both" in d for d in diags)
