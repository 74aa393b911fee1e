"""Execution of refactoring definitions against the semantic graph.

Everything runs inside transactions: a failing rule, combinator chain, scheme
or composite rolls the graph back to a state that prints byte-identically to
the pre-state.  Rule application demands exactly one surviving match
candidate; ambiguity is failure, never an arbitrary pick.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import dsl
from . import tree as t
from .dsl import (
    CCall,
    CInvoke,
    CThis,
    CVar,
    CompositeDef,
    CondExpr,
    RuleDef,
    RuleStep,
    SchemeDef,
    SelectorDef,
)
from .graph import FunctionSem, SemanticGraph
from .matcher import Bindings, instantiate, match
from .semlib import SemError, call_semantic, eval_condition, eval_expr, fresh_name


class RefacFail(Exception):
    """Internal control flow: aborts the enclosing transaction."""


@dataclass
class RefOutcome:
    ok: bool
    result: object = None
    reason: str = ""

    @classmethod
    def success(cls, result) -> "RefOutcome":
        return cls(True, result=result)

    @classmethod
    def failure(cls, reason: str) -> "RefOutcome":
        return cls(False, reason=reason)


@dataclass
class ExecContext:
    graph: SemanticGraph
    this: object  # syntactic node or FunctionSem
    bindings: Bindings = field(default_factory=Bindings)
    locals: dict = field(default_factory=dict)


BUILTIN_REFACS = {
    ("copy_function", 1),
    ("add_parameter", 0),
    ("fold_entire_function", 2),
    ("replace_val_by_var", 1),
}


class Engine:
    def __init__(self, graph: SemanticGraph, definitions: list | None = None):
        self.graph = graph
        self.defs: dict[tuple[str, int], object] = {}
        for d in definitions or []:
            self.register(d)

    def register(self, d) -> None:
        key = (d.name, len(d.params))
        if key in self.defs:
            raise ValueError(f"duplicate refactoring definition {d.name}/{len(d.params)}")
        self.defs[key] = d

    def lookup(self, name: str, nargs: int):
        return self.defs.get((name, nargs))

    # -- entry point ----------------------------------------------------------

    def run(self, name: str, target, args: list | None = None) -> RefOutcome:
        args = list(args or [])
        d = self.lookup(name, len(args))
        if d is None and (name, len(args)) not in BUILTIN_REFACS:
            return RefOutcome.failure(f"unknown refactoring {name}/{len(args)}")
        ctx = ExecContext(self.graph, target)
        if d is not None and not isinstance(d, SelectorDef):
            for p, v in zip(d.params, args):
                ctx.bindings = ctx.bindings.bind(p, v)
                if ctx.bindings is None:
                    return RefOutcome.failure("conflicting actual parameters")
        self.graph.txn_begin()
        try:
            result = self._dispatch(d, name, ctx, args)
        except RefacFail as e:
            self.graph.txn_rollback()
            return RefOutcome.failure(str(e))
        self.graph.txn_commit()
        return RefOutcome.success(result)

    def _dispatch(self, d, name: str, ctx: ExecContext, args: list):
        if d is None:
            return self.run_builtin(name, ctx, args)
        if isinstance(d, RuleDef):
            return self.run_combined(d, ctx)
        if isinstance(d, SchemeDef):
            if d.kind == "signature":
                return self.run_signature_scheme(d, ctx)
            if d.kind == "forward_dataflow":
                return self.run_forward_dataflow(d, ctx)
            return self.run_backward_dataflow(d, ctx)
        if isinstance(d, CompositeDef):
            return self.run_composite(d, ctx)
        if isinstance(d, SelectorDef):
            return self.run_selector(d, self._as_node(ctx.this))
        raise RefacFail(f"cannot execute {type(d).__name__}")

    # -- targets ---------------------------------------------------------------

    def _as_node(self, v) -> t.Node:
        if isinstance(v, FunctionSem):
            return self.graph.node(v.form)
        if isinstance(v, t.Node):
            return v
        raise RefacFail(f"target is not a node: {v!r}")

    def resolve_targets(self, modifier, ctx: ExecContext) -> list[t.Node]:
        if modifier is None:
            return [self._as_node(ctx.this)]
        kind, expr = modifier
        try:
            value = eval_expr(expr, ctx.bindings, self.graph, self._as_node(ctx.this))
        except SemError as e:
            raise RefacFail(str(e)) from None
        values = value if isinstance(value, list) else [value]
        nodes = [self._as_node(v) for v in values]
        if kind == "IN":
            return [n for root in nodes for n in t.walk(root)]
        return nodes

    # -- single rule application ------------------------------------------------

    def _survivors(self, step: RuleStep, target: t.Node, ctx: ExecContext):
        candidates = match(step.matching, target, ctx.bindings)
        out = []
        for cand in candidates:
            if step.condition is None:
                out.append(cand)
                continue
            try:
                ok, nb = eval_condition(step.condition, cand, self.graph, target)
            except SemError as e:
                raise RefacFail(str(e)) from None
            if ok:
                out.append(nb)
        return out

    def apply_rule_at(self, step: RuleStep, target: t.Node, ctx: ExecContext) -> t.Node:
        survivors = self._survivors(step, target, ctx)
        if not survivors:
            raise RefacFail(f"rule does not apply at {type(target).__name__}")
        if len(survivors) > 1:
            raise RefacFail("ambiguous match: more than one solution survives the conditions")
        b = survivors[0]
        replacement = instantiate(step.replacement, b)
        if isinstance(step.matching, t.ClausePat):
            if len(replacement) != 1 or not isinstance(replacement[0], t.Clause):
                raise RefacFail("clause rule must produce a clause")
            new = replacement[0]
        elif len(replacement) == 1:
            new = replacement[0]
        else:
            parent = self.graph.parent(target.nid)
            in_seq = isinstance(parent, (t.Clause, t.Block)) and any(
                x is target for x in getattr(parent, "body", getattr(parent, "exprs", []))
            )
            new = replacement if in_seq else t.Block(replacement)
        new_ref = self.graph.txn_replace(target.nid, new)
        # commit condition-established bindings to the definition-wide scope
        for name in dsl._cond_bound(step.condition):
            if name in b:
                nb = ctx.bindings.bind(name, b[name])
                if nb is None:
                    raise RefacFail(f"metavariable {name} bound inconsistently across targets")
                ctx.bindings = nb
        result = self.graph.node(new_ref)
        if isinstance(ctx.this, t.Node) and ctx.this is target:
            ctx.this = result
        return result

    def _attempt_step(
        self, step: RuleStep, ctx: ExecContext, targets: list[t.Node] | None = None
    ) -> t.Node:
        if targets is None:
            targets = self.resolve_targets(step.modifier, ctx)
        if step.modifier and step.modifier[0] == "IN":
            applied = None
            for node in targets:
                if node.nid not in self.graph.objects:
                    continue  # consumed by an earlier rewrite
                if len(self._survivors(step, node, ctx)) == 1:
                    applied = self.apply_rule_at(step, node, ctx)
            if applied is None:
                raise RefacFail("rule applies nowhere in the subtree")
            return applied
        if not targets:
            raise RefacFail("modifier selected no targets")
        result = None
        for node in targets:
            result = self.apply_rule_at(step, node, ctx)
        return result

    def run_combined(self, d: RuleDef, ctx: ExecContext) -> t.Node:
        # modifier expressions see the pre-state of the whole chain, so a
        # later step can still reach sites invalidated by an earlier rewrite
        # (e.g. call sites of a function whose clauses were just renamed)
        pre_targets: list[list[t.Node] | RefacFail] = []
        for _, step in d.steps:
            try:
                pre_targets.append(self.resolve_targets(step.modifier, ctx))
            except RefacFail as e:
                pre_targets.append(e)
        result = None
        failed: str | None = None
        for (op, step), targets in zip(d.steps, pre_targets):
            if op == "OR":
                if failed is None:
                    continue
            elif failed is not None:  # a THEN (or first) step after a failure
                raise RefacFail(failed)
            self.graph.txn_begin()
            try:
                if isinstance(targets, RefacFail):
                    raise targets
                result = self._attempt_step(step, ctx, targets)
            except RefacFail as e:
                self.graph.txn_rollback()
                failed = str(e)
                continue
            self.graph.txn_commit()
            failed = None
        if failed is not None:
            raise RefacFail(failed)
        return result

    # -- signature scheme --------------------------------------------------------

    def check_signature_contract(self, step: RuleStep) -> tuple[bool, str]:
        m, r = step.matching, step.replacement
        if not (isinstance(m, t.Call) and isinstance(m.callee, t.Metavar)):
            return False, "matching pattern must be Name(arguments)"
        names = []
        for a in m.args:
            if not isinstance(a, (t.Metavar, t.ListMetavar)):
                return False, "argument pattern must consist of metavariables"
            names.append(a.name)
        if len(set(names)) != len(names):
            return False, "argument pattern must be linear"
        if len(r) != 1 or not isinstance(r[0], t.Call):
            return False, "replacement must be a single application"
        repl = r[0]
        if not isinstance(repl.callee, (t.Metavar, t.Atom)):
            return False, "replacement callee must be a metavariable or an atom"
        used = set()
        try:
            goal = tuple(_shape(a, set(names), used) for a in repl.args)
        except ValueError as e:
            return False, str(e)
        if used != set(names):
            missing = sorted(set(names) - used)
            return False, f"argument(s) dropped by the replacement: {', '.join(missing)}"
        start = tuple(names)
        if not _derivable(start, goal, depth=6):
            return False, "replacement arguments not reachable by swap/duplicate/group"
        return True, ""

    def run_signature_scheme(self, d: SchemeDef, ctx: ExecContext) -> FunctionSem:
        ok, why = self.check_signature_contract(d.rule)
        if not ok:
            raise RefacFail(f"signature contract violation: {why}")
        fn = self._target_function(ctx.this)
        module = fn.module
        if self.graph.opaque_uses(module):
            raise RefacFail("opaque use of a function value in the module")
        step = d.rule
        refs = [(kind, self.graph.node(ref)) for kind, ref in fn.refs]
        clauses = [self.graph.node(c) for c in fn.clauses]
        old_key = (module, fn.name, fn.arity)

        # determine the new signature from a probe instantiation
        probe = t.Call(t.Atom(fn.name), [t.Var(f"A{i}") for i in range(fn.arity)])
        new_call = self._rewrite_call(step, probe, ctx)
        new_name, new_arity = _callee_name(new_call), len(new_call.args)
        if (module, new_name, new_arity) in self.graph.functions and (
            module,
            new_name,
            new_arity,
        ) != old_key:
            raise RefacFail(f"function {new_name}/{new_arity} already exists in {module}")

        for clause in clauses:
            synth = t.Call(t.Atom(clause.name), clause.patterns)
            rewritten = self._rewrite_call(step, synth, ctx)
            new_clause = t.Clause(_callee_name(rewritten), rewritten.args, clause.body)
            self.graph.txn_replace(clause.nid, new_clause)
        for kind, site in refs:
            if kind == "export":
                self.graph.txn_replace(site.nid, t.ExportEntry(new_name, new_arity))
            elif kind == "local":
                self.graph.txn_replace(site.nid, self._rewrite_call(step, site, ctx))
            elif kind == "remote":
                synth = t.Call(t.Atom(site.name.name), site.args)
                out = self._rewrite_call(step, synth, ctx)
                self.graph.txn_replace(
                    site.nid,
                    t.RemoteCall(t.copy_fresh(site.module), t.Atom(_callee_name(out)), out.args),
                )
            elif kind == "apply":
                fun_atom, arglist = site.args
                elems = self.graph.literal_list(arglist)
                synth = t.Call(t.Atom(fun_atom.name), elems)
                out = self._rewrite_call(step, synth, ctx)
                new_site = t.Call(
                    t.Atom("apply"), [t.Atom(_callee_name(out)), t.mklist(out.args)]
                )
                self.graph.txn_replace(site.nid, new_site)
        new_fn = self.graph.functions.get((module, new_name, new_arity))
        if new_fn is None:
            raise RefacFail("signature rewrite left no such function")
        if isinstance(ctx.this, FunctionSem):
            ctx.this = new_fn
        return new_fn

    def _target_function(self, target) -> FunctionSem:
        if isinstance(target, FunctionSem):
            # refresh: semantic nodes are rebuilt after every mutation, so a
            # held reference may be stale — the defining form is the identity
            for fn in self.graph.functions.values():
                if fn.form == target.form:
                    return fn
            raise RefacFail(f"function {target.name}/{target.arity} no longer exists")
        node = self._as_node(target)
        fn = self.graph.enclosing_function(node.nid)
        if fn is None:
            raise RefacFail("target is not inside a function")
        return fn

    def _rewrite_call(self, step: RuleStep, call: t.Call, ctx: ExecContext) -> t.Call:
        survivors = self._survivors(step, call, ctx)
        if len(survivors) != 1:
            raise RefacFail("signature rule must match each site exactly once")
        out = instantiate(step.replacement, survivors[0])
        new = out[0] if isinstance(out, list) else out
        if not isinstance(new, t.Call):
            raise RefacFail("signature rule must produce an application")
        return new

    # -- dataflow schemes ----------------------------------------------------------

    def run_forward_dataflow(self, d: SchemeDef, ctx: ExecContext) -> t.Node:
        target = self._as_node(ctx.this)
        survivors = self._survivors(d.definition, target, ctx)
        if len(survivors) != 1:
            raise RefacFail("definition rule must match the target exactly once")
        def_b = survivors[0]
        flow = self.graph.flow_forward(target.nid)
        path = set(flow) | {target.nid}
        for nid in flow:
            extra = [s for s in self.graph.flow_sources(nid) if s not in path]
            if extra:
                raise RefacFail("a dataflow node has a data source besides the target")
        rewrites: list[tuple[t.Node, RuleStep, Bindings]] = []
        for nid in flow:
            node = self.graph.node(nid)
            if self._is_passthrough(node):
                continue
            found = self._find_reference_rewrite(d.references, node, def_b)
            if found is None:
                raise RefacFail("a reference site is not covered by any reference rule")
            rewrites.append(found)
        for site, step, b in rewrites:
            out = instantiate(step.replacement, b)
            self.graph.txn_replace(site.nid, out[0] if len(out) == 1 else t.Block(out))
        repl = instantiate(d.definition.replacement, def_b)
        new_ref = self.graph.txn_replace(target.nid, repl[0] if len(repl) == 1 else repl)
        ctx.this = self.graph.node(new_ref)
        return ctx.this

    def _is_passthrough(self, node: t.Node) -> bool:
        # binders and control/sequence expressions only forward the value
        if isinstance(node, t.Var):
            sem_id = self.graph.var_of.get(node.nid)
            if sem_id is not None and node.nid in self.graph.node(sem_id).binders:
                return True
            return False
        if isinstance(node, (t.Case, t.Block)):
            return True
        return t.is_pattern(node)

    def _find_reference_rewrite(self, references, node: t.Node, seed: Bindings):
        anc: t.Node | None = node
        while anc is not None and not isinstance(anc, (t.Clause, t.FunctionForm)):
            for refvar, step in references:
                seeded = seed.bind(refvar, anc if anc is node else node)
                if seeded is None:
                    continue
                results = match(step.matching, anc, seeded)
                survivors = []
                for cand in results:
                    if step.condition is None:
                        survivors.append(cand)
                    else:
                        ok, nb = eval_condition(step.condition, cand, self.graph, anc)
                        if ok:
                            survivors.append(nb)
                if len(survivors) == 1:
                    return (anc, step, survivors[0])
            parent = self.graph.parent(anc.nid)
            anc = parent if isinstance(parent, t.Node) else None
        return None

    def run_backward_dataflow(self, d: SchemeDef, ctx: ExecContext) -> t.Node:
        target = self._as_node(ctx.this)
        ref_match = None
        for refvar, step in d.references:
            seeded = ctx.bindings.bind(refvar, target)
            if seeded is None:
                continue
            survivors = self._survivors_with_seed(step, target, seeded)
            if len(survivors) == 1:
                ref_match = (refvar, step, survivors[0])
                break
        if ref_match is None:
            raise RefacFail("no reference rule matches the target exactly once")
        refvar, ref_step, ref_b = ref_match
        sources = self.graph.flow_sources(target.nid)
        if not sources:
            raise RefacFail("target has no data sources")
        for src in sources:
            consumers = self.graph.flow_out.get(src, [])
            if any(c != target.nid for c in consumers):
                raise RefacFail("a data source flows somewhere besides the target")
        # metavariables bound by the definition matching but unused in its
        # replacement are global: they must unify across all sources
        global_names = _pattern_names(d.definition.matching) - _pattern_names(
            d.definition.replacement
        )
        shared = ref_b
        per_source: list[tuple[t.Node, Bindings]] = []
        for src in sources:
            node = self.graph.node(src)
            survivors = self._survivors_with_seed(d.definition, node, shared)
            if len(survivors) != 1:
                raise RefacFail("definition rule must match each data source exactly once")
            b = survivors[0]
            for name in global_names:
                if name in b:
                    shared = shared.bind(name, b[name])
                    if shared is None:
                        raise RefacFail(f"sources disagree on metavariable {name}")
            per_source.append((node, b))
        # capture check: moved subtrees may only use names visible at the target
        visible = self.graph.scope_names(target.nid)
        for name in global_names:
            if name in shared and isinstance(shared[name], t.Node):
                free = {
                    n.name
                    for n in t.walk(shared[name])
                    if isinstance(n, t.Var) and n.name != "_"
                }
                if not free <= visible:
                    raise RefacFail(
                        "moved expression references names bound inside the target"
                    )
        for node, b in per_source:
            out = instantiate(d.definition.replacement, b.merge(shared) or b)
            self.graph.txn_replace(node.nid, out[0] if len(out) == 1 else t.Block(out))
        final_b = shared.bind(refvar, self.graph.node(target.nid))
        out = instantiate(ref_step.replacement, final_b)
        new_ref = self.graph.txn_replace(target.nid, out[0] if len(out) == 1 else t.Block(out))
        ctx.this = self.graph.node(new_ref)
        return ctx.this

    def _survivors_with_seed(self, step: RuleStep, node: t.Node, seed: Bindings):
        out = []
        for cand in match(step.matching, node, seed):
            if step.condition is None:
                out.append(cand)
            else:
                ok, nb = eval_condition(step.condition, cand, self.graph, node)
                if ok:
                    out.append(nb)
        return out

    # -- composites and selectors ---------------------------------------------------

    def run_selector(self, d: SelectorDef, node: t.Node):
        targets: list[t.Node]
        if isinstance(d.matching, t.ClausePat) and isinstance(node, t.FunctionForm):
            targets = list(node.clauses)
        else:
            targets = [node]
        survivors = []
        for n in targets:
            survivors.extend(match(d.matching, n, Bindings()))
        if len(survivors) != 1:
            raise RefacFail(f"selector {d.name} needs exactly one match, got {len(survivors)}")
        b = survivors[0]
        if d.returns not in b:
            raise RefacFail(f"selector {d.name} never bound {d.returns}")
        return b[d.returns]

    def run_composite(self, d: CompositeDef, ctx: ExecContext):
        result = None
        for stmt in d.body:
            value = self._exec_statement(stmt.call, ctx)
            if stmt.var is not None:
                ctx.locals[stmt.var] = value
            result = value
        return result if result is not None else ctx.this

    def _exec_statement(self, call: CondExpr, ctx: ExecContext):
        if isinstance(call, CInvoke):
            recv = self._eval_composite_expr(call.recv, ctx)
            return self._invoke(call.name, call.args, recv, ctx)
        if isinstance(call, CCall):
            if self.lookup(call.name, len(call.args)) or (
                call.name,
                len(call.args),
            ) in BUILTIN_REFACS:
                return self._invoke(call.name, call.args, ctx.this, ctx)
            args = [self._eval_composite_expr(a, ctx) for a in call.args]
            try:
                return call_semantic(call.name, args, self.graph)
            except SemError as e:
                raise RefacFail(str(e)) from None
        raise RefacFail("composite statement must be an application")

    def _invoke(self, name: str, arg_exprs: list[CondExpr], target, ctx: ExecContext):
        args = [self._eval_composite_expr(a, ctx) for a in arg_exprs]
        d = self.lookup(name, len(args))
        if isinstance(d, SelectorDef):
            return self.run_selector(d, self._as_node(target))
        if d is None and (name, len(args)) not in BUILTIN_REFACS:
            raise RefacFail(f"unknown refactoring or selector {name}/{len(args)}")
        targets = target if isinstance(target, list) else [target]
        result = None
        was_this = target is ctx.this
        for tgt in targets:
            sub = ExecContext(self.graph, tgt)
            for p, v in zip(d.params if d else [], args):
                sub.bindings = sub.bindings.bind(p, v)
                if sub.bindings is None:
                    raise RefacFail("conflicting actual parameters")
            result = self._dispatch(d, name, sub, args)
        if was_this and not isinstance(target, list):
            ctx.this = result
        return result

    def _eval_composite_expr(self, c: CondExpr, ctx: ExecContext):
        if isinstance(c, CVar) and c.name in ctx.locals:
            return ctx.locals[c.name]
        if isinstance(c, CThis):
            return ctx.this
        if isinstance(c, CInvoke):
            recv = self._eval_composite_expr(c.recv, ctx)
            d = self.lookup(c.name, len(c.args))
            if isinstance(d, SelectorDef):
                return self.run_selector(d, self._as_node(recv))
            return self._invoke(c.name, c.args, recv, ctx)
        if isinstance(c, CCall):
            args = [self._eval_composite_expr(a, ctx) for a in c.args]
            try:
                return call_semantic(c.name, args, self.graph)
            except SemError as e:
                raise RefacFail(str(e)) from None
        try:
            this_node = self._as_node(ctx.this) if isinstance(ctx.this, t.Node) else ctx.this
            return eval_expr(c, ctx.bindings, self.graph, this_node)
        except SemError as e:
            raise RefacFail(str(e)) from None

    # -- built-in helper refactorings ---------------------------------------------------

    def run_builtin(self, name: str, ctx: ExecContext, args: list):
        if name == "copy_function":
            return self._copy_function(ctx, args[0])
        if name == "add_parameter":
            return self._add_parameter(ctx)
        if name == "fold_entire_function":
            return self._fold_entire_function(ctx, args[0], args[1])
        if name == "replace_val_by_var":
            return self._replace_val_by_var(ctx, args[0])
        raise RefacFail(f"unknown builtin {name}")

    def _copy_function(self, ctx: ExecContext, new_name) -> FunctionSem:
        fn = self._target_function(ctx.this)
        name = new_name if isinstance(new_name, str) else _callee_name(new_name)
        if (fn.module, name, fn.arity) in self.graph.functions:
            raise RefacFail(f"function {name}/{fn.arity} already exists")
        form = self.graph.node(fn.form)
        dup = t.copy_fresh(form)
        for clause in dup.clauses:
            clause.name = name
        self.graph.txn_insert_form(fn.module, dup, form.nid)
        return self.graph.functions[(fn.module, name, fn.arity)]

    def _add_parameter(self, ctx: ExecContext) -> FunctionSem:
        fn = self._target_function(ctx.this)
        form = self.graph.node(fn.form)
        taken = set()
        for clause in form.clauses:
            for n in t.walk(clause):
                if isinstance(n, t.Var):
                    taken.add(n.name)
        pname = fresh_name(taken)
        old_clauses = list(form.clauses)
        for clause in old_clauses:
            new_clause = t.Clause(
                clause.name, clause.patterns + [t.Var(pname)], clause.body
            )
            self.graph.txn_replace(clause.nid, new_clause)
        return self.graph.functions[(fn.module, fn.name, fn.arity + 1)]

    def _fold_entire_function(self, ctx: ExecContext, orig, actual) -> FunctionSem:
        copy_fn = self._target_function(ctx.this)
        orig_fn = self._target_function(orig)
        copy_form = self.graph.node(copy_fn.form)
        orig_form = self.graph.node(orig_fn.form)
        actual_node = self._as_node(actual)
        if len(copy_form.clauses) != len(orig_form.clauses):
            raise RefacFail("fold: clause counts differ")
        for cc, oc in zip(copy_form.clauses, orig_form.clauses):
            if not all(t.struct_eq(a, b) for a, b in zip(cc.body, oc.body)) or len(
                cc.body
            ) != len(oc.body):
                raise RefacFail("fold: function bodies are not identical")
        for oc in list(orig_form.clauses):
            call_args = [t.copy_fresh(p) for p in oc.patterns] + [t.copy_fresh(actual_node)]
            call = t.Call(t.Atom(copy_fn.name), call_args)
            new_clause = t.Clause(oc.name, oc.patterns, [call])
            self.graph.txn_replace(oc.nid, new_clause)
        return self.graph.functions[(orig_fn.module, orig_fn.name, orig_fn.arity)]

    def _replace_val_by_var(self, ctx: ExecContext, var) -> t.Node:
        value = self._as_node(ctx.this)
        var_node = self._as_node(var)
        if not isinstance(var_node, t.Var):
            raise RefacFail("replace_val_by_var expects a variable")
        # the variable's scope identifies the function to rewrite in
        sites = []
        for fn in self.graph.functions.values():
            form = self.graph.node(fn.form)
            if not any(
                isinstance(n, t.Var) and n.name == var_node.name
                for c in form.clauses
                for p in c.patterns
                for n in t.walk(p)
            ):
                continue
            for clause in form.clauses:
                for body_expr in clause.body:
                    for n in t.walk(body_expr):
                        if t.struct_eq(n, value):
                            sites.append(n)
        if len(sites) != 1:
            raise RefacFail(
                f"replace_val_by_var needs exactly one occurrence, found {len(sites)}"
            )
        new_ref = self.graph.txn_replace(sites[0].nid, t.Var(var_node.name))
        return self.graph.node(new_ref)


# --- signature contract helpers ----------------------------------------------


def _callee_name(call: t.Call) -> str:
    if isinstance(call.callee, t.Atom):
        return call.callee.name
    if isinstance(call.callee, t.Var):
        return call.callee.name
    raise RefacFail("application callee is not a name")


def _pattern_names(p) -> set[str]:
    nodes = p if isinstance(p, list) else [p]
    out = set()
    for root in nodes:
        for n in t.walk(root):
            if isinstance(n, (t.Metavar, t.ListMetavar)):
                out.add(n.name)
    return out


def _shape(node: t.Node, names: set[str], used: set[str]):
    """Replacement argument as a nested structure over matching metavariables."""
    if isinstance(node, (t.Metavar, t.ListMetavar)):
        if node.name not in names:
            raise ValueError(f"replacement argument uses foreign metavariable {node.name}")
        used.add(node.name)
        return node.name
    if isinstance(node, t.Tuple):
        return ("tuple", tuple(_shape(e, names, used) for e in node.elems))
    if isinstance(node, (t.Cons, t.Nil)):
        elems, tail = t.unlist(node)
        if tail is not None:
            raise ValueError("replacement argument list must be proper")
        return ("list", tuple(_shape(e, names, used) for e in elems))
    raise ValueError("replacement arguments must be metavariables, tuples or lists")


def _leaf_names(shape, acc: set) -> None:
    if isinstance(shape, str):
        acc.add(shape)
    else:
        for e in shape[1]:
            _leaf_names(e, acc)


def _derivable(start: tuple, goal: tuple, depth: int) -> bool:
    """BFS over swap / duplicate / group operations on the argument vector."""
    if start == goal:
        return True
    # none of the operations can remove a name, so a goal missing one (or
    # using a foreign one) is unreachable at any depth
    goal_names: set = set()
    _leaf_names(("tuple", goal), goal_names)
    if goal_names != set(start):
        return False
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        state, d = frontier.popleft()
        if d >= depth:
            continue
        for nxt in _successors(state):
            if nxt == goal:
                return True
            if nxt not in seen and len(nxt) <= len(goal) + depth:
                seen.add(nxt)
                frontier.append((nxt, d + 1))
    return False


def _successors(state: tuple):
    n = len(state)
    for i in range(n):
        for j in range(i + 1, n):  # swap two elements
            s = list(state)
            s[i], s[j] = s[j], s[i]
            yield tuple(s)
    for i in range(n):  # duplicate an element
        yield state[: i + 1] + (state[i],) + state[i + 1 :]
    for i in range(n):  # group a consecutive run into a tuple or list
        for j in range(i + 1, n + 1):
            for kind in ("tuple", "list"):
                yield state[:i] + ((kind, state[i:j]),) + state[j:]
