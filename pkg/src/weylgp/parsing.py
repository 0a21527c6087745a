"""Tokenizer and recursive-descent parser shared by the operator and expression grammars.

The parser only builds a small syntax tree; turning that tree into an
:class:`~weylgp.ore.OrePoly` or a :class:`~weylgp.expr.Expr` is done by the
respective modules, which know how to resolve names.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

__all__ = ["ParseError", "Node", "parse"]


class ParseError(ValueError):
    """Syntax or name-resolution error carrying a 1-based line/column."""

    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.text = text
        self.pos = pos
        self.line = text.count("\n", 0, pos) + 1
        self.column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.message = message
        super().__init__(f"{message} (line {self.line}, column {self.column})")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)? | \.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9']*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    pos: int


@dataclass(frozen=True)
class Node:
    """Syntax tree node.

    ``kind`` is one of ``num``, ``name``, ``call``, ``add``, ``sub``, ``mul``,
    ``div``, ``pow``, ``neg``. ``value`` holds the literal (Fraction or str) for
    leaves and the callee name for ``call``.
    """

    kind: str
    pos: int
    value: object = None
    children: tuple["Node", ...] = ()


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if value == "**":
                value = "^"
            tokens.append(Token(kind, value, pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, self.text, tok.pos)

    def accept(self, value: str) -> Token | None:
        if self.tok.kind == "op" and self.tok.value == value:
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, value: str) -> Token:
        tok = self.accept(value)
        if tok is None:
            found = self.tok.value or "end of input"
            self.error(f"expected {value!r}, found {found!r}")
        return tok

    def parse(self) -> Node:
        if self.tok.kind == "end":
            self.error("empty expression")
        node = self.sum()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.value!r}")
        return node

    def sum(self) -> Node:
        node = self.product()
        while True:
            tok = self.accept("+") or self.accept("-")
            if tok is None:
                return node
            rhs = self.product()
            node = Node("add" if tok.value == "+" else "sub", tok.pos, None, (node, rhs))

    def product(self) -> Node:
        node = self.unary()
        while True:
            tok = self.accept("*") or self.accept("/")
            if tok is None:
                return node
            rhs = self.unary()
            node = Node("mul" if tok.value == "*" else "div", tok.pos, None, (node, rhs))

    def unary(self) -> Node:
        tok = self.accept("-")
        if tok is not None:
            return Node("neg", tok.pos, None, (self.unary(),))
        if self.accept("+") is not None:
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.accept("^")
        if tok is None:
            return base
        # right associative; a leading minus is allowed in the exponent
        exponent = self.unary()
        return Node("pow", tok.pos, None, (base, exponent))

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Node("num", tok.pos, Fraction(tok.value))
        if tok.kind == "name":
            self.i += 1
            if self.accept("(") is not None:
                arg = self.sum()
                self.expect(")")
                return Node("call", tok.pos, tok.value, (arg,))
            return Node("name", tok.pos, tok.value)
        if self.accept("(") is not None:
            node = self.sum()
            self.expect(")")
            return node
        self.error(f"unexpected {tok.value or 'end of input'!r}")


def parse(text: str) -> Node:
    """Parse ``text`` into a :class:`Node` tree, raising :class:`ParseError`."""
    return _Parser(text).parse()


def integer_exponent(node: Node, text: str, allow_negative: bool = False) -> int:
    """Evaluate an exponent subtree that must be an integer literal."""
    sign = 1
    while node.kind == "neg":
        sign = -sign
        node = node.children[0]
    if node.kind != "num" or node.value.denominator != 1:
        raise ParseError("exponent must be an integer literal", text, node.pos)
    value = sign * int(node.value)
    if value < 0 and not allow_negative:
        raise ParseError("negative exponent not allowed here", text, node.pos)
    return value
