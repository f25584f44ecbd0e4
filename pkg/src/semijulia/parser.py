"""Recursive-descent parser for polynomial expressions.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' INTEGER)?
    atom   := NUMBER ['i'] | 'i' | VAR | '(' expr ')'
    VAR    := 'z1' .. 'z9'

The parser builds a ``MultiPoly`` directly; there is no intermediate AST.
"""
from __future__ import annotations

import re

from .errors import ParseError
from .polyalg import MultiPoly

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>z[1-9])
  | (?P<imag>i)
  | (?P<op>[-+*^()])
""", re.VERBOSE)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise _error(text, pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _error(text: str, pos: int, message: str) -> ParseError:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return ParseError(message, line, col, text)


class _Parser:
    def __init__(self, text: str, nvars: int):
        self.text = text
        self.nvars = nvars
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        return _error(self.text, tok[2], message)

    def parse(self) -> MultiPoly:
        if self.peek()[0] == "end":
            raise self.fail("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            raise self.fail(f"unexpected {self.peek()[1]!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek()[:2] == ("op", "*"):
            self.take()
            p = p * self.unary()
        return p

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            p = self.unary()
            return -p if tok[1] == "-" else p
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            tok = self.peek()
            if tok[0] != "num" or not tok[1].isdigit():
                raise self.fail("expected a nonnegative integer exponent")
            self.take()
            return base ** int(tok[1])
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            x = float(val)
            if self.peek()[0] == "imag":
                self.take()
                return MultiPoly.constant(self.nvars, complex(0, x))
            return MultiPoly.constant(self.nvars, x)
        if kind == "imag":
            return MultiPoly.constant(self.nvars, 1j)
        if kind == "var":
            idx = int(val[1]) - 1
            if idx >= self.nvars:
                raise self.fail(f"variable {val} exceeds dimension {self.nvars}", tok)
            return MultiPoly.variable(self.nvars, idx)
        if kind == "op" and val == "(":
            p = self.expr()
            if self.peek()[:2] != ("op", ")"):
                raise self.fail("expected ')'")
            self.take()
            return p
        if kind == "end":
            raise self.fail("unexpected end of expression", tok)
        raise self.fail(f"unexpected {val!r}", tok)


def parse_poly(text: str, nvars: int) -> MultiPoly:
    """Parse ``text`` as a polynomial in ``z1 .. z{nvars}``.

    Raises ``ParseError`` carrying the 1-based line and column of the fault.
    """
    return _Parser(text, nvars).parse()
