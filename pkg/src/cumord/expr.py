"""Recursive-descent parser for test-function expressions in x.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'x' | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

FUNC is one of exp, abs, sqrt (one argument) or min, max (two or more).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import InputError

FUNCS = {
    "exp": (1, np.exp),
    "abs": (1, np.abs),
    "sqrt": (1, np.sqrt),
    "min": (2, None),
    "max": (2, None),
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


class ParseError(InputError):
    def __init__(self, text: str, pos: int, expected: list[str]):
        self.text, self.pos, self.expected = text, pos, sorted(set(expected))
        got = text[pos:pos + 10] or "end of input"
        super().__init__(
            f"parse error at position {pos}: expected one of {', '.join(self.expected)}; found {got!r}"
        )


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, end
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            skip = len(text) - len(text[pos:].lstrip())
            raise ParseError(text, skip, ["number", "x", "function", "operator", "("])
        kind = m.lastgroup
        start = m.start(kind)
        out.append(Token(kind, m.group(kind), start))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, expected):
        raise ParseError(self.text, self.tok.pos, expected)

    def accept(self, *ops) -> str | None:
        t = self.tok
        if t.kind == "op" and t.text in ops:
            self.i += 1
            return t.text
        return None

    def expect(self, op: str):
        if not self.accept(op):
            self.fail([repr(op)])

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self.fail(["operator", "end of input"])
        return node

    def expr(self):
        node = self.term()
        while (op := self.accept("+", "-")) is not None:
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while (op := self.accept("*", "/")) is not None:
            node = (op, node, self.unary())
        return node

    def unary(self):
        if (op := self.accept("+", "-")) is not None:
            inner = self.unary()
            return ("neg", inner) if op == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return ("^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return ("num", float(t.text))
        if t.kind == "name":
            if t.text == "x":
                self.i += 1
                return ("x",)
            if t.text in FUNCS:
                self.i += 1
                self.expect("(")
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCS[t.text][0]
                if (arity == 1 and len(args) != 1) or (arity == 2 and len(args) < 2):
                    raise InputError(f"{t.text} at position {t.pos} takes {'one argument' if arity == 1 else 'two or more arguments'}")
                return ("call", t.text, args)
            self.fail(["number", "x", "exp", "abs", "sqrt", "min", "max", "("])
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.fail(["number", "x", "exp", "abs", "sqrt", "min", "max", "(", "-"])


def evaluate(node, x: np.ndarray) -> np.ndarray:
    kind = node[0]
    if kind == "num":
        return np.full(x.shape, node[1])
    if kind == "x":
        return x
    if kind == "neg":
        return -evaluate(node[1], x)
    if kind == "call":
        args = [evaluate(a, x) for a in node[2]]
        if node[1] == "min":
            return np.minimum.reduce(args)
        if node[1] == "max":
            return np.maximum.reduce(args)
        return FUNCS[node[1]][1](args[0])
    a, b = evaluate(node[1], x), evaluate(node[2], x)
    if kind == "+":
        return a + b
    if kind == "-":
        return a - b
    if kind == "*":
        return a * b
    if kind == "/":
        return a / b
    return np.power(a, b)


def compile_expression(text: str):
    """Parse text once and return a vectorized function of x."""
    tree = Parser(text).parse()

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return evaluate(tree, x) * np.ones(x.shape)

    return f
