"""Propositional formulas over finite vocabularies.

Grammar: identifiers ``[A-Za-z_][A-Za-z0-9_-]*``, operators ``!`` ``&``
``|`` ``=>`` ``<=>``, parentheses, literals ``true``/``false``.
Precedence ``!`` > ``&`` > ``|`` > ``=>`` > ``<=>``; the arrows associate
to the right.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator

from .errors import ParseError


class Formula:
    __slots__ = ()

    def evaluate(self, truth: Callable[[str], bool]) -> bool:
        raise NotImplementedError

    def symbols(self) -> frozenset[str]:
        raise NotImplementedError


@dataclass(frozen=True)
class Var(Formula):
    name: str

    def evaluate(self, truth):
        return truth(self.name)

    def symbols(self):
        return frozenset((self.name,))

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const(Formula):
    value: bool

    def evaluate(self, truth):
        return self.value

    def symbols(self):
        return frozenset()

    def __str__(self):
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def evaluate(self, truth):
        return not self.child.evaluate(truth)

    def symbols(self):
        return self.child.symbols()

    def __str__(self):
        return f"!{_wrap(self.child)}"


@dataclass(frozen=True)
class And(Formula):
    items: tuple[Formula, ...]

    def evaluate(self, truth):
        return all(f.evaluate(truth) for f in self.items)

    def symbols(self):
        return frozenset().union(*(f.symbols() for f in self.items))

    def __str__(self):
        return " & ".join(_wrap(f) for f in self.items)


@dataclass(frozen=True)
class Or(Formula):
    items: tuple[Formula, ...]

    def evaluate(self, truth):
        return any(f.evaluate(truth) for f in self.items)

    def symbols(self):
        return frozenset().union(*(f.symbols() for f in self.items))

    def __str__(self):
        return " | ".join(_wrap(f) for f in self.items)


@dataclass(frozen=True)
class Implies(Formula):
    antecedent: Formula
    consequent: Formula

    def evaluate(self, truth):
        return (not self.antecedent.evaluate(truth)) or self.consequent.evaluate(truth)

    def symbols(self):
        return self.antecedent.symbols() | self.consequent.symbols()

    def __str__(self):
        return f"{_wrap(self.antecedent)} => {_wrap(self.consequent)}"


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula

    def evaluate(self, truth):
        return self.left.evaluate(truth) == self.right.evaluate(truth)

    def symbols(self):
        return self.left.symbols() | self.right.symbols()

    def __str__(self):
        return f"{_wrap(self.left)} <=> {_wrap(self.right)}"


def _wrap(f: Formula) -> str:
    if isinstance(f, (Var, Const, Not)):
        return str(f)
    return f"({f})"


_TOKEN = re.compile(r"\s*(?:(<=>)|(=>)|([!&|()])|([A-Za-z_][A-Za-z0-9_-]*))")


def _tokenize(text: str) -> Iterator[tuple[str, int]]:
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                return
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        tok = m.group(1) or m.group(2) or m.group(3) or m.group(4)
        yield tok, m.start(1) if m.group(1) else m.start() + len(m.group()) - len(tok)
        pos = m.end()


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = list(_tokenize(text))
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def next(self) -> tuple[str, int]:
        if self.i >= len(self.tokens):
            raise ParseError("unexpected end of formula", len(self.text))
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.iff()
        if self.i < len(self.tokens):
            tok, pos = self.tokens[self.i]
            raise ParseError(f"unexpected token {tok!r}", pos)
        return f

    def iff(self) -> Formula:
        left = self.implies()
        if self.peek() == "<=>":
            self.next()
            return Iff(left, self.iff())
        return left

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "=>":
            self.next()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        items = [self.conjunction()]
        while self.peek() == "|":
            self.next()
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self) -> Formula:
        items = [self.unary()]
        while self.peek() == "&":
            self.next()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> Formula:
        tok, pos = self.next()
        if tok == "!":
            return Not(self.unary())
        if tok == "(":
            f = self.iff()
            closing, cpos = self.next()
            if closing != ")":
                raise ParseError("expected ')'", cpos)
            return f
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok in {"&", "|", ")", "=>", "<=>"}:
            raise ParseError(f"unexpected token {tok!r}", pos)
        return Var(tok)


def parse_formula(text: str) -> Formula:
    """Parse ``text`` into a formula tree."""
    return _Parser(text).parse()


def as_formula(f: Formula | str) -> Formula:
    return parse_formula(f) if isinstance(f, str) else f
