"""Prefix-notation expressions for structural equations.

Grammar::

    expr   := number | symbol | "(" op expr* ")"
    symbol := node name | "eps"

``eps`` is the node's own noise draw.  Operators:

    +        one or more arguments, sum
    -        one argument negates, two subtract
    *        two or more arguments, product (``(* 0.5 X1)`` scales)
    atan sin sign abs sq sqrtabs      exactly one argument

``sq`` is the square and ``sqrtabs`` is ``sqrt(|x|)``.  Printing is
canonical (single spaces, numbers via ``repr``), so ``print(parse(s)) == s``
for printed strings and ``parse(print(e)) == e`` for every expression.
"""
from __future__ import annotations

import re
from typing import NamedTuple, Union

import numpy as np

NOISE = "eps"

UNARY = {
    "atan": np.arctan,
    "sin": np.sin,
    "sign": np.sign,
    "abs": np.abs,
    "sq": np.square,
    "sqrtabs": lambda v: np.sqrt(np.abs(v)),
}
VARIADIC = {"+", "-", "*"}


class Num(NamedTuple):
    value: float


class Sym(NamedTuple):
    name: str


class Call(NamedTuple):
    op: str
    args: tuple


Expr = Union[Num, Sym, Call]


class ExprError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")
_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|[+-]?(inf|nan)$")


def _tokens(text):
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprError(f"unexpected character at {pos} in {text!r}")
        pos = m.end()
        yield m.group(1) or m.group(2) or m.group(3)


def parse(text: str) -> Expr:
    toks = list(_tokens(text))
    if not toks:
        raise ExprError("empty expression")
    expr, pos = _parse(toks, 0)
    if pos != len(toks):
        raise ExprError(f"trailing tokens in {text!r}")
    return expr


def _parse(toks, pos):
    tok = toks[pos]
    if tok == ")":
        raise ExprError("unbalanced ')'")
    if tok != "(":
        if _NUMBER.match(tok):
            return Num(float(tok)), pos + 1
        return Sym(tok), pos + 1
    if pos + 1 >= len(toks):
        raise ExprError("unterminated '('")
    op = toks[pos + 1]
    if op not in UNARY and op not in VARIADIC:
        raise ExprError(f"unknown operator {op!r}")
    pos += 2
    args = []
    while True:
        if pos >= len(toks):
            raise ExprError("unterminated '('")
        if toks[pos] == ")":
            pos += 1
            break
        arg, pos = _parse(toks, pos)
        args.append(arg)
    _check_arity(op, len(args))
    return Call(op, tuple(args)), pos


def _check_arity(op, k):
    ok = {
        "+": k >= 1,
        "-": k in (1, 2),
        "*": k >= 2,
    }.get(op, k == 1)
    if not ok:
        raise ExprError(f"operator {op!r} cannot take {k} argument(s)")


def to_string(expr: Expr) -> str:
    if isinstance(expr, Num):
        return repr(float(expr.value))
    if isinstance(expr, Sym):
        return expr.name
    return "(" + " ".join([expr.op] + [to_string(a) for a in expr.args]) + ")"


def symbols(expr: Expr) -> set:
    if isinstance(expr, Sym):
        return {expr.name}
    if isinstance(expr, Call):
        out = set()
        for a in expr.args:
            out |= symbols(a)
        return out
    return set()


def evaluate(expr: Expr, env: dict, noise: np.ndarray) -> np.ndarray:
    if isinstance(expr, Num):
        return np.full_like(noise, expr.value)
    if isinstance(expr, Sym):
        if expr.name == NOISE:
            return noise
        return env[expr.name]
    vals = [evaluate(a, env, noise) for a in expr.args]
    if expr.op == "+":
        out = vals[0]
        for v in vals[1:]:
            out = out + v
        return out
    if expr.op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - vals[1]
    if expr.op == "*":
        out = vals[0]
        for v in vals[1:]:
            out = out * v
        return out
    return UNARY[expr.op](vals[0])
