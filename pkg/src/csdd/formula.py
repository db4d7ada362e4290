"""Propositional formulas over integer-indexed Boolean variables.

Formulas are the input language of the circuit compiler.  Variables are
positive integers; assignments are mappings ``var -> bool``.  A tiny
s-expression reader is provided for formula files, e.g.::

    (and (or x1 x2 x3 x4) (or (and (not x1) (not x2)) (and (not x3) (not x4))))
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


class FormulaError(ValueError):
    """Malformed formula text or an out-of-range variable."""


class Formula:
    """Base class for formula nodes.  Supports ``&``, ``|`` and ``~``."""

    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return And((self, other))

    def __or__(self, other: "Formula") -> "Formula":
        return Or((self, other))

    def __invert__(self) -> "Formula":
        return Not(self)

    def variables(self) -> frozenset[int]:
        raise NotImplementedError

    def evaluate(self, assignment: Mapping[int, bool]) -> bool:
        raise NotImplementedError


@dataclass(frozen=True, slots=True)
class Const(Formula):
    value: bool

    def variables(self) -> frozenset[int]:
        return frozenset()

    def evaluate(self, assignment: Mapping[int, bool]) -> bool:
        return self.value


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, slots=True)
class Var(Formula):
    var: int

    def __post_init__(self) -> None:
        if self.var < 1:
            raise FormulaError(f"variable ids are positive, got {self.var}")

    def variables(self) -> frozenset[int]:
        return frozenset((self.var,))

    def evaluate(self, assignment: Mapping[int, bool]) -> bool:
        return bool(assignment[self.var])


@dataclass(frozen=True, slots=True)
class Not(Formula):
    child: Formula

    def variables(self) -> frozenset[int]:
        return self.child.variables()

    def evaluate(self, assignment: Mapping[int, bool]) -> bool:
        return not self.child.evaluate(assignment)


@dataclass(frozen=True, slots=True)
class And(Formula):
    children: tuple[Formula, ...]

    def variables(self) -> frozenset[int]:
        return frozenset().union(*(c.variables() for c in self.children))

    def evaluate(self, assignment: Mapping[int, bool]) -> bool:
        return all(c.evaluate(assignment) for c in self.children)


@dataclass(frozen=True, slots=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def variables(self) -> frozenset[int]:
        return frozenset().union(*(c.variables() for c in self.children))

    def evaluate(self, assignment: Mapping[int, bool]) -> bool:
        return any(c.evaluate(assignment) for c in self.children)


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


def _tokenize(text: str) -> Iterator[str]:
    for line in text.splitlines():
        body = line.split(";", 1)[0]
        for tok in body.replace("(", " ( ").replace(")", " ) ").split():
            yield tok


def parse_formula(text: str) -> Formula:
    """Parse an s-expression formula.

    Grammar: ``true`` | ``false`` | ``x<N>`` | ``(not F)`` | ``(and F...)``
    | ``(or F...)``.  Lines may carry ``;`` comments.
    """
    tokens = list(_tokenize(text))
    pos = 0

    def parse() -> Formula:
        nonlocal pos
        if pos >= len(tokens):
            raise FormulaError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens):
                raise FormulaError("unexpected end of input after '('")
            op = tokens[pos]
            pos += 1
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse())
            if pos >= len(tokens):
                raise FormulaError("missing ')'")
            pos += 1
            if op == "not":
                if len(args) != 1:
                    raise FormulaError("'not' takes exactly one argument")
                return Not(args[0])
            if op == "and":
                return conj(args)
            if op == "or":
                return disj(args)
            raise FormulaError(f"unknown operator {op!r}")
        if tok == ")":
            raise FormulaError("unexpected ')'")
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok.startswith("x") and tok[1:].isdigit():
            return Var(int(tok[1:]))
        raise FormulaError(f"unknown token {tok!r}")

    result = parse()
    if pos != len(tokens):
        raise FormulaError(f"trailing tokens starting at {tokens[pos]!r}")
    return result
