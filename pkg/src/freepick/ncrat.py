"""Noncommutative rational expressions in matrix variables.

Grammar (whitespace is ignored, ``*`` is mandatory)::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := '-' factor | 'inv' '(' expr ')' | '(' expr ')' | atom
    atom   := 'Z' digits | complex literal

Complex literals take the forms ``a``, ``bi``, ``a+bi`` / ``a-bi`` and
``i``.  The lexer reads ``a+bi`` greedily as one literal, so ``2 + 3i`` is
the constant ``2+3j`` rather than a sum.  A subtraction ``a - b`` parses to
``Add([a, Neg(b)])``; parentheses never flatten, so ``(a + b) + c`` stays
nested.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import FreePickError, InputError


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start exceeds end")


class NCSyntaxError(FreePickError, SyntaxError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{message} at {span.start}..{span.end}")
        self.span = span


class SingularInverse(FreePickError, ArithmeticError):
    def __init__(self, message: str, span: SourceSpan | None):
        super().__init__(message)
        self.span = span


class UnboundVariable(FreePickError, LookupError):
    pass


_NOSPAN = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    index: int
    span: SourceSpan | None = _NOSPAN


@dataclass(frozen=True)
class Const:
    value: complex
    span: SourceSpan | None = _NOSPAN


@dataclass(frozen=True)
class Add:
    terms: tuple
    span: SourceSpan | None = _NOSPAN


@dataclass(frozen=True)
class Neg:
    child: "Expr"
    span: SourceSpan | None = _NOSPAN


@dataclass(frozen=True)
class Mul:
    factors: tuple
    span: SourceSpan | None = _NOSPAN


@dataclass(frozen=True)
class Inv:
    child: "Expr"
    span: SourceSpan | None = _NOSPAN


Expr = Union[Var, Const, Add, Neg, Mul, Inv]

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN = re.compile(rf"""
    (?P<ws>\s+)
  | (?P<cplx>{_NUM}\s*[+-]\s*{_NUM}\s*i(?![A-Za-z0-9_]))
  | (?P<imag>{_NUM}\s*i(?![A-Za-z0-9_]))
  | (?P<real>{_NUM})
  | (?P<inv>inv(?![A-Za-z0-9_]))
  | (?P<unit>i(?![A-Za-z0-9_]))
  | (?P<var>Z\d+)
  | (?P<op>[-+*()])
""", re.VERBOSE)


def _literal(kind: str, text: str) -> complex:
    t = re.sub(r"\s+", "", text)
    if kind == "real":
        return complex(float(t), 0.0)
    if kind == "unit":
        return 1j
    if kind == "imag":
        return complex(0.0, float(t[:-1]))
    m = re.fullmatch(rf"({_NUM})([+-])({_NUM})i", t)
    im = float(m.group(3))
    return complex(float(m.group(1)), im if m.group(2) == "+" else -im)


def tokenize(text: str) -> list[tuple[str, str, SourceSpan]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise NCSyntaxError(f"unknown token {text[pos]!r}", SourceSpan(pos, pos + 1))
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), SourceSpan(m.start(), m.end())))
        pos = m.end()
    toks.append(("eof", "", SourceSpan(len(text), len(text))))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0

    @property
    def cur(self):
        return self.toks[self.pos]

    def eat(self, kind, value=None):
        k, v, span = self.cur
        if k != kind or (value is not None and v != value):
            want = value or kind
            got = "end of input" if k == "eof" else repr(v)
            raise NCSyntaxError(f"expected {want!r}, got {got}", span)
        self.pos += 1
        return v, span

    def is_op(self, *ops):
        k, v, _ = self.cur
        return k == "op" and v in ops

    def expr(self) -> Expr:
        start = self.cur[2].start
        terms = [self.term()]
        while self.is_op("+", "-"):
            op, span = self.eat("op")
            t = self.term()
            if op == "-":
                t = Neg(t, SourceSpan(span.start, _end(t)))
            terms.append(t)
        if len(terms) == 1:
            return terms[0]
        return Add(tuple(terms), SourceSpan(start, _end(terms[-1])))

    def term(self) -> Expr:
        start = self.cur[2].start
        factors = [self.factor()]
        while self.is_op("*"):
            self.eat("op", "*")
            factors.append(self.factor())
        if len(factors) == 1:
            return factors[0]
        return Mul(tuple(factors), SourceSpan(start, _end(factors[-1])))

    def factor(self) -> Expr:
        kind, val, span = self.cur
        if kind == "op" and val == "-":
            self.eat("op")
            child = self.factor()
            return Neg(child, SourceSpan(span.start, _end(child)))
        if kind == "inv":
            self.eat("inv")
            self.eat("op", "(")
            child = self.expr()
            _, close = self.eat("op", ")")
            return Inv(child, SourceSpan(span.start, close.end))
        if kind == "op" and val == "(":
            self.eat("op")
            inner = self.expr()
            self.eat("op", ")")
            return inner
        if kind == "var":
            self.eat("var")
            idx = int(val[1:])
            if idx < 1:
                raise NCSyntaxError("variables are numbered from Z1", span)
            return Var(idx, span)
        if kind in ("real", "imag", "cplx", "unit"):
            self.eat(kind)
            return Const(_literal(kind, val), span)
        got = "end of input" if kind == "eof" else repr(val)
        raise NCSyntaxError(f"unexpected {got}", span)


def _end(e: Expr) -> int:
    return e.span.end if e.span is not None else 0


def parse(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    if p.cur[0] != "eof":
        k, v, span = p.cur
        msg = "unbalanced ')'" if v == ")" else f"unexpected {v!r}"
        raise NCSyntaxError(msg, span)
    return e


def _fmt_const(c: complex) -> str:
    re_, im = c.real, c.imag
    if im == 0:
        if re_ < 0 or np.isnan(re_) or np.isinf(re_):
            raise ValueError(f"constant {c!r} has no literal form; write it as Neg(Const(...))")
        return repr(abs(re_))
    if re_ == 0:
        if im < 0:
            raise ValueError(f"constant {c!r} has no literal form; write it as Neg(Const(...))")
        return f"({repr(im)}i)"
    if re_ < 0:
        raise ValueError(f"constant {c!r} has no literal form; write it as Neg(Const(...))")
    sign = "+" if im > 0 else "-"
    return f"({repr(re_)}{sign}{repr(abs(im))}i)"


def format(e: Expr) -> str:  # noqa: A001 - mirrors parse
    """Canonical text of ``e``; ``parse(format(e)) == e`` structurally.

    Constants with a negative real part (or a negative pure imaginary part)
    have no literal form and raise :class:`ValueError`.
    """
    return _fmt_expr(e)


def _fmt_expr(e: Expr) -> str:
    if isinstance(e, Add):
        parts = [_fmt_term(e.terms[0])]
        for t in e.terms[1:]:
            if isinstance(t, Neg):
                parts.append(" - " + _fmt_term(t.child))
            else:
                parts.append(" + " + _fmt_term(t))
        return "".join(parts)
    return _fmt_term(e)


def _fmt_term(e: Expr) -> str:
    if isinstance(e, Mul):
        return "*".join(_fmt_factor(f) for f in e.factors)
    return _fmt_factor(e)


def _fmt_factor(e: Expr) -> str:
    if isinstance(e, Var):
        return f"Z{e.index}"
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Inv):
        return f"inv({_fmt_expr(e.child)})"
    if isinstance(e, Neg):
        return "-" + _fmt_factor(e.child)
    return f"({_fmt_expr(e)})"


def evaluate(e: Expr, vars: Sequence[np.ndarray], rtol: float = 1e-12) -> np.ndarray:
    """Literal evaluation with ``vars[k-1]`` bound to ``Zk``; constants become ``c I``."""
    mats = [np.atleast_2d(np.asarray(v, dtype=complex)) for v in vars]
    if not mats:
        raise InputError("at least one variable matrix is required")
    n = mats[0].shape[0]
    for m in mats:
        if m.shape != (n, n):
            raise InputError("variables must be square matrices of one size")
    return _eval(e, mats, n, rtol)


def _eval(e: Expr, mats, n, rtol) -> np.ndarray:
    if isinstance(e, Var):
        if e.index > len(mats):
            raise UnboundVariable(f"Z{e.index} is not bound ({len(mats)} variables given)")
        return mats[e.index - 1]
    if isinstance(e, Const):
        return e.value * np.eye(n, dtype=complex)
    if isinstance(e, Neg):
        return -_eval(e.child, mats, n, rtol)
    if isinstance(e, Add):
        out = _eval(e.terms[0], mats, n, rtol)
        for t in e.terms[1:]:
            out = out + _eval(t, mats, n, rtol)
        return out
    if isinstance(e, Mul):
        out = _eval(e.factors[0], mats, n, rtol)
        for f in e.factors[1:]:
            out = out @ _eval(f, mats, n, rtol)
        return out
    if isinstance(e, Inv):
        x = _eval(e.child, mats, n, rtol)
        sv = np.linalg.svd(x, compute_uv=False)
        if sv[-1] <= rtol * max(sv[0], np.finfo(float).tiny):
            where = f" at {e.span.start}..{e.span.end}" if e.span else ""
            raise SingularInverse(f"inverse of a singular matrix{where}", e.span)
        return np.linalg.inv(x)
    raise TypeError(f"not an expression node: {e!r}")


def depth(e: Expr) -> int:
    if isinstance(e, (Var, Const)):
        return 0
    if isinstance(e, (Neg, Inv)):
        return 1 + depth(e.child)
    kids = e.terms if isinstance(e, Add) else e.factors
    return 1 + max(depth(k) for k in kids)


def random_expr(rng: random.Random, max_depth: int = 6, nvars: int = 2) -> Expr:
    """Random AST whose constants all have literal forms."""
    if max_depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return Var(rng.randint(1, nvars))
        re_ = round(rng.uniform(0, 3), rng.randint(0, 3))
        im = round(rng.uniform(-3, 3), rng.randint(0, 3)) if rng.random() < 0.4 else 0.0
        if re_ == 0 and im < 0:
            im = -im
        return Const(complex(re_, im))
    kind = rng.choice(["add", "mul", "neg", "inv"])
    sub = lambda: random_expr(rng, max_depth - 1, nvars)  # noqa: E731
    if kind == "add":
        return Add(tuple(sub() for _ in range(rng.randint(2, 3))))
    if kind == "mul":
        return Mul(tuple(sub() for _ in range(rng.randint(2, 3))))
    if kind == "neg":
        return Neg(sub())
    return Inv(sub())
