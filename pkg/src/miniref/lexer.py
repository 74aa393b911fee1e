"""Tokenizer shared by the mini-Erlang parser and the refactoring DSL.

Byte offsets are tracked so the parser can attach lossless spans.
"""

from __future__ import annotations

from dataclasses import dataclass


class MiniErlangSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: list[str] | None = None):
        self.line = line
        self.col = col
        self.expected = expected or []
        loc = f"{line}:{col}"
        if self.expected:
            message = f"{message} (expected one of: {', '.join(self.expected)})"
        super().__init__(f"{loc}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    start: int
    end: int
    line: int
    col: int


PUNCT = [
    ("->", "ARROW"),
    ("<-", "GEN"),
    ("||", "BARBAR"),
    ("..", "DOTDOT"),
    ("++", "PLUSPLUS"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
    ("[", "LBRACK"),
    ("]", "RBRACK"),
    ("{", "LBRACE"),
    ("}", "RBRACE"),
    (",", "COMMA"),
    (";", "SEMI"),
    (":", "COLON"),
    ("|", "BAR"),
    ("=", "EQ"),
    ("+", "PLUS"),
    ("-", "DASH"),
    ("/", "SLASH"),
    (".", "DOT"),
]


def _is_atom_start(c: str) -> bool:
    return c.isalpha() and c.islower()


def _is_var_start(c: str) -> bool:
    return c == "_" or (c.isalpha() and c.isupper())


def _is_name_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, linestart = 0, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            linestart = i
            continue
        if c.isspace():
            i += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        col = i - linestart + 1
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("INT", text[i:j], i, j, line, col))
            i = j
            continue
        if _is_atom_start(c):
            j = i
            while j < n and _is_name_char(text[j]):
                j += 1
            toks.append(Token("ATOM", text[i:j], i, j, line, col))
            i = j
            continue
        if _is_var_start(c):
            j = i
            while j < n and _is_name_char(text[j]):
                j += 1
            toks.append(Token("VAR", text[i:j], i, j, line, col))
            i = j
            continue
        if c == "'":
            j = i + 1
            while j < n and text[j] != "'":
                if text[j] == "\n":
                    raise MiniErlangSyntaxError("unterminated quoted atom", line, col)
                j += 1
            if j >= n:
                raise MiniErlangSyntaxError("unterminated quoted atom", line, col)
            toks.append(Token("ATOM", text[i + 1 : j], i, j + 1, line, col))
            i = j + 1
            continue
        for lit, kind in PUNCT:
            if text.startswith(lit, i):
                toks.append(Token(kind, lit, i, i + len(lit), line, col))
                i += len(lit)
                break
        else:
            raise MiniErlangSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(Token("EOF", "", n, n, line, n - linestart + 1))
    return toks
