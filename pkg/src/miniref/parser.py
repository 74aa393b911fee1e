"""Recursive-descent parser for mini-Erlang modules and expressions.

`meta=True` switches variables to metavariables and enables `Name..` list
metavariables; the refactoring DSL parses its pattern bodies this way.
"""

from __future__ import annotations

from . import tree as t
from .lexer import MiniErlangSyntaxError, Token, tokenize

KEYWORDS = {"begin", "case", "of", "end", "fun"}


class _Parser:
    def __init__(self, text: str, meta: bool = False):
        self.text = text
        self.toks = tokenize(text)
        self.pos = 0
        self.meta = meta

    # -- token plumbing ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def at_kw(self, word: str) -> bool:
        return self.at("ATOM", word)

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        if self.at(kind, value):
            return self.next()
        return None

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, value):
            raise self.error(f"unexpected {tok.value or tok.kind!r}", [value or kind])
        return self.next()

    def error(self, message: str, expected: list[str] | None = None) -> MiniErlangSyntaxError:
        tok = self.peek()
        return MiniErlangSyntaxError(message, tok.line, tok.col, expected)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> t.Expr:
        start = self.peek()
        lhs = self.parse_sum()
        if self.at("EQ"):
            self.next()
            self.check_pattern(lhs)
            rhs = self.parse_expr()
            return self.spanned(t.Match(lhs, rhs), start)
        return lhs

    def parse_sum(self) -> t.Expr:
        start = self.peek()
        e = self.parse_app()
        while self.at("PLUS") or self.at("PLUSPLUS"):
            op = self.next().value
            rhs = self.parse_app()
            e = self.spanned(t.BinOp(op, e, rhs), start)
        return e

    def parse_app(self) -> t.Expr:
        start = self.peek()
        e = self.parse_primary()
        while True:
            if self.at("COLON"):
                self.next()
                name = self.parse_primary()
                self.expect("LPAREN")
                args = self.parse_arg_list()
                self.expect("RPAREN")
                e = self.spanned(t.RemoteCall(e, name, args), start)
            elif self.at("LPAREN"):
                self.next()
                args = self.parse_arg_list()
                self.expect("RPAREN")
                e = self.spanned(t.Call(e, args), start)
            else:
                return e

    def parse_arg_list(self) -> list[t.Expr]:
        if self.at("RPAREN"):
            return []
        args = [self.parse_expr()]
        while self.accept("COMMA"):
            args.append(self.parse_expr())
        return args

    def parse_primary(self) -> t.Expr:
        start = self.peek()
        if self.at("INT"):
            tok = self.next()
            return self.spanned(t.Integer(int(tok.value)), start)
        if self.at("VAR"):
            tok = self.next()
            if self.meta:
                if self.accept("DOTDOT"):
                    return self.spanned(t.ListMetavar(tok.value), start)
                return self.spanned(t.Metavar(tok.value), start)
            return self.spanned(t.Var(tok.value), start)
        if self.at_kw("begin"):
            self.next()
            exprs = self.parse_expr_seq()
            self.expect("ATOM", "end")
            return self.spanned(t.Block(exprs), start)
        if self.at_kw("case"):
            return self.parse_case(start)
        if self.at_kw("fun"):
            return self.parse_fun(start)
        if self.at("ATOM") and self.peek().value not in KEYWORDS:
            tok = self.next()
            return self.spanned(t.Atom(tok.value), start)
        if self.at("LBRACK"):
            return self.parse_list(start)
        if self.at("LBRACE"):
            self.next()
            elems: list[t.Expr] = []
            if not self.at("RBRACE"):
                elems.append(self.parse_expr())
                while self.accept("COMMA"):
                    elems.append(self.parse_expr())
            self.expect("RBRACE")
            return self.spanned(t.Tuple(elems), start)
        if self.at("LPAREN"):
            self.next()
            e = self.parse_expr()
            self.expect("RPAREN")
            return e
        raise self.error(
            f"unexpected {self.peek().value or self.peek().kind!r}",
            ["expression"],
        )

    def parse_expr_seq(self) -> list[t.Expr]:
        exprs = [self.parse_expr()]
        while self.accept("COMMA"):
            exprs.append(self.parse_expr())
        return exprs

    def parse_case(self, start: Token) -> t.Expr:
        self.expect("ATOM", "case")
        scrut = self.parse_expr()
        self.expect("ATOM", "of")
        clauses = [self.parse_case_clause()]
        while self.accept("SEMI"):
            clauses.append(self.parse_case_clause())
        self.expect("ATOM", "end")
        return self.spanned(t.Case(scrut, clauses), start)

    def parse_case_clause(self) -> t.Clause:
        start = self.peek()
        pat = self.parse_expr()
        self.check_pattern(pat)
        self.expect("ARROW")
        body = self.parse_expr_seq()
        return self.spanned(t.Clause(None, [pat], body), start)

    def parse_fun(self, start: Token) -> t.Expr:
        self.expect("ATOM", "fun")
        clauses = [self.parse_fun_clause()]
        while self.accept("SEMI"):
            clauses.append(self.parse_fun_clause())
        self.expect("ATOM", "end")
        arities = {len(c.patterns) for c in clauses}
        if len(arities) != 1:
            raise self.error("fun clauses must share one arity")
        return self.spanned(t.Fun(clauses), start)

    def parse_fun_clause(self) -> t.Clause:
        start = self.peek()
        self.expect("LPAREN")
        pats = self.parse_pattern_list("RPAREN")
        self.expect("RPAREN")
        self.expect("ARROW")
        body = self.parse_expr_seq()
        return self.spanned(t.Clause(None, pats, body), start)

    def parse_pattern_list(self, closer: str) -> list[t.Expr]:
        if self.at(closer):
            return []
        pats = [self.parse_expr()]
        while self.accept("COMMA"):
            pats.append(self.parse_expr())
        for p in pats:
            self.check_pattern(p, joint=pats)
        return pats

    def parse_list(self, start: Token) -> t.Expr:
        self.expect("LBRACK")
        if self.at("RBRACK"):
            close = self.next()
            return self.spanned_tok(t.Nil(), start, close)
        first = self.parse_expr()
        if self.at("BARBAR"):
            self.next()
            quals: list[t.Node] = [self.parse_qualifier()]
            while self.accept("COMMA"):
                quals.append(self.parse_qualifier())
            close = self.expect("RBRACK")
            return self.spanned_tok(t.ListComp(first, quals), start, close)
        elems = [first]
        starts = [start]
        while self.accept("COMMA"):
            starts.append(self.peek())
            elems.append(self.parse_expr())
        tail: t.Expr | None = None
        if self.accept("BAR"):
            tail = self.parse_expr()
        close = self.expect("RBRACK")
        if tail is None:
            tail = t.Nil(span=(close.start, close.end))
        out = tail
        for elem, st in zip(reversed(elems), reversed(starts)):
            st_off = start.start if st is start else elem.span[0] if elem.span else st.start
            out = t.Cons(elem, out, span=(st_off, close.end))
        return out

    def parse_qualifier(self) -> t.Node:
        start = self.peek()
        e = self.parse_sum()
        if self.accept("GEN"):
            self.check_pattern(e)
            src = self.parse_expr()
            return self.spanned(t.Generator(e, src), start)
        if isinstance(e, (t.Metavar, t.ListMetavar)):
            return e  # a bare metavariable stands for whole qualifiers
        return self.spanned(t.Filter(e), start)

    # -- module forms --------------------------------------------------------

    def parse_module(self) -> t.SourceModule:
        start = self.peek()
        mod_name: str | None = None
        exports: list[t.ExportEntry] = []
        while self.at("DASH"):
            self.next()
            attr = self.expect("ATOM")
            if attr.value == "module":
                self.expect("LPAREN")
                name = self.expect("ATOM")
                self.expect("RPAREN")
                self.expect("DOT")
                if mod_name is not None:
                    raise self.error("duplicate module attribute")
                mod_name = name.value
            elif attr.value == "export":
                self.expect("LPAREN")
                self.expect("LBRACK")
                if not self.at("RBRACK"):
                    exports.append(self.parse_export_entry())
                    while self.accept("COMMA"):
                        exports.append(self.parse_export_entry())
                self.expect("RBRACK")
                self.expect("RPAREN")
                self.expect("DOT")
            else:
                raise self.error(f"unknown attribute -{attr.value}", ["module", "export"])
        if mod_name is None:
            raise self.error("missing module attribute")
        forms: list[t.FunctionForm] = []
        while not self.at("EOF"):
            forms.append(self.parse_form())
        mod = t.SourceModule(mod_name, exports, forms, self.text.encode("utf-8"))
        mod.span = (start.start, len(self.text))
        return mod

    def parse_export_entry(self) -> t.ExportEntry:
        name = self.expect("ATOM")
        self.expect("SLASH")
        arity = self.expect("INT")
        entry = t.ExportEntry(name.value, int(arity.value))
        entry.span = (name.start, arity.end)
        return entry

    def parse_form(self) -> t.FunctionForm:
        start = self.peek()
        clauses = [self.parse_form_clause()]
        while self.accept("SEMI"):
            clauses.append(self.parse_form_clause())
        dot = self.expect("DOT")
        names = {c.name for c in clauses}
        arities = {len(c.patterns) for c in clauses}
        if len(names) != 1 or len(arities) != 1:
            raise self.error("clauses of one form must share name and arity")
        form = t.FunctionForm(clauses)
        form.span = (start.start, dot.end)
        return form

    def parse_form_clause(self) -> t.Clause:
        start = self.peek()
        name = self.expect("ATOM")
        if name.value in KEYWORDS:
            raise self.error(f"{name.value!r} cannot name a function")
        self.expect("LPAREN")
        pats = self.parse_pattern_list("RPAREN")
        self.expect("RPAREN")
        self.expect("ARROW")
        body = self.parse_expr_seq()
        return self.spanned(t.Clause(name.value, pats, body), start)

    # -- helpers -------------------------------------------------------------

    def spanned(self, node: t.Node, start: Token) -> t.Node:
        end = self.toks[self.pos - 1].end if self.pos > 0 else start.end
        node.span = (start.start, end)
        return node

    def spanned_tok(self, node: t.Node, start: Token, end: Token) -> t.Node:
        node.span = (start.start, end.end)
        return node

    def check_pattern(self, node: t.Expr, joint: list[t.Expr] | None = None) -> None:
        if not t.is_pattern(node):
            raise self.error("not a valid pattern")
        if self.meta:
            return
        seen: set[str] = set()
        for n in t.walk(node) if joint is None else (x for p in joint for x in t.walk(p)):
            if isinstance(n, t.Var) and n.name != "_":
                if n.name in seen:
                    raise self.error(f"repeated variable {n.name} in pattern")
                seen.add(n.name)


def _decode(text: bytes | str) -> str:
    if isinstance(text, bytes):
        return text.decode("utf-8")
    return text


def parse_module(text: bytes | str) -> t.SourceModule:
    p = _Parser(_decode(text))
    return p.parse_module()


def parse_expr_seq(text: bytes | str, meta: bool = False) -> list[t.Expr]:
    p = _Parser(_decode(text), meta=meta)
    exprs = p.parse_expr_seq()
    p.expect("EOF")
    return exprs


def parse_expr(text: bytes | str, meta: bool = False) -> t.Expr:
    exprs = parse_expr_seq(text, meta=meta)
    if len(exprs) == 1:
        return exprs[0]
    block = t.Block(exprs)
    block.span = (exprs[0].span[0], exprs[-1].span[1]) if exprs[0].span else None
    return block


def parse_clause_pattern(text: str) -> t.ClausePat:
    """Parse a DSL clause-shaped pattern like `Name(Args..) -> Body..`."""
    p = _Parser(_decode(text), meta=True)
    start = p.peek()
    head = p.parse_app()
    if not isinstance(head, t.Call):
        raise p.error("clause pattern must start with a call shape")
    p.expect("ARROW")
    body = p.parse_expr_seq()
    p.expect("EOF")
    clause = t.ClausePat(head.callee, head.args, body)
    clause.span = (start.start, p.toks[-1].end)
    return clause
