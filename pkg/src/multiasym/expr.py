"""Holomorphic test expressions in ``z_1..z_n``.

Grammar (whitespace ignored)::

    expr    := term (('+' | '-') term)*
    term    := '-' term | product
    product := power (('*' | '/') ('-' power | power))*
    power   := atom ('^' ['-'] integer)?
    atom    := number | '(' snum ',' snum ')' | 'z' digits
             | 'exp' '(' expr ')' | '(' expr ')'
    snum    := ['-'] number ['/' number]

Unary minus binds looser than ``*`` and ``/``, so ``-1/z1`` is
``neg(div(1, z1))`` and ``-z1^2`` is ``-(z1^2)``.  Decimal literals are
kept as exact fractions.
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ExprSyntaxError, PoleError
from .jet import POLE_TOL, Jet
from .poly import Poly


class Expr:
    """Base class of expression nodes.  Nodes are immutable and hashable."""

    def __str__(self) -> str:
        return render(self)

    def __call__(self, z):
        return evaluate(self, z)

    @property
    def nvars(self) -> int:
        return max_var(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    re: Fraction
    im: Fraction = Fraction(0)

    @property
    def value(self):
        if self.im == 0:
            return self.re
        return complex(self.re, self.im)

    def __repr__(self):
        return f"Const({self.re}{'' if self.im == 0 else f', {self.im}'})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    i: int

    def __repr__(self):
        return f"z{self.i}"


@dataclass(frozen=True, repr=False)
class Add(Expr):
    a: Expr
    b: Expr

    def __repr__(self):
        return f"add({self.a!r}, {self.b!r})"


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    a: Expr
    b: Expr

    def __repr__(self):
        return f"sub({self.a!r}, {self.b!r})"


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    a: Expr
    b: Expr

    def __repr__(self):
        return f"mul({self.a!r}, {self.b!r})"


@dataclass(frozen=True, repr=False)
class Div(Expr):
    a: Expr
    b: Expr

    def __repr__(self):
        return f"div({self.a!r}, {self.b!r})"


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    a: Expr
    k: int

    def __repr__(self):
        return f"pow({self.a!r}, {self.k})"


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    a: Expr

    def __repr__(self):
        return f"neg({self.a!r})"


@dataclass(frozen=True, repr=False)
class Exp(Expr):
    a: Expr

    def __repr__(self):
        return f"exp({self.a!r})"


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(c) -> Const:
    if isinstance(c, Const):
        return c
    if isinstance(c, complex):
        return Const(Fraction(c.real), Fraction(c.imag))
    return Const(Fraction(c))


# -- parsing ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<var>z\d+)|(?P<exp>exp)|(?P<op>[-+*/^(),]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ExprSyntaxError(pos, "a token", text)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.toks.append(("end", "", len(text)))
        self.k = 0

    def peek(self, ahead: int = 0):
        return self.toks[min(self.k + ahead, len(self.toks) - 1)]

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.peek()
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            raise ExprSyntaxError(tok[2], repr(value) if value else kind, self.text)
        self.k += 1
        return tok

    def at(self, value: str) -> bool:
        return self.peek()[1] == value and self.peek()[0] == "op"

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            raise ExprSyntaxError(self.peek()[2], "end of input or operator", self.text)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        if self.at("-"):
            self.take()
            return Neg(self.term())
        return self.product()

    def product(self) -> Expr:
        e = self.power()
        while self.at("*") or self.at("/"):
            op = self.take()[1]
            if self.at("-"):
                self.take()
                rhs: Expr = Neg(self.power())
            else:
                rhs = self.power()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            self.take()
            sign = 1
            if self.at("-"):
                self.take()
                sign = -1
            tok = self.peek()
            if tok[0] != "num" or not tok[1].isdigit():
                raise ExprSyntaxError(tok[2], "integer exponent", self.text)
            self.take()
            return Pow(base, sign * int(tok[1]))
        return base

    def _complex_literal_ahead(self) -> bool:
        # '(' ['-'] num ['/' num] ',' ...
        j = 1
        if self.peek(j)[1] == "-":
            j += 1
        if self.peek(j)[0] != "num":
            return False
        j += 1
        if self.peek(j)[1] == "/":
            j += 2
        return self.peek(j)[1] == ","

    def snum(self) -> Fraction:
        sign = 1
        if self.at("-"):
            self.take()
            sign = -1
        value = Fraction(self.take(kind="num")[1])
        if self.at("/"):
            self.take()
            den = Fraction(self.take(kind="num")[1])
            if den == 0:
                raise ExprSyntaxError(self.peek()[2], "nonzero denominator", self.text)
            value /= den
        return sign * value

    def atom(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return Const(Fraction(val))
        if kind == "var":
            self.take()
            i = int(val[1:])
            if i < 1:
                raise ExprSyntaxError(pos, "variable index >= 1", self.text)
            return Var(i)
        if kind == "exp":
            self.take()
            self.take("(")
            e = self.expr()
            self.take(")")
            return Exp(e)
        if self.at("("):
            if self._complex_literal_ahead():
                self.take("(")
                re_ = self.snum()
                self.take(",")
                im = self.snum()
                self.take(")")
                return Const(re_, im)
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        raise ExprSyntaxError(pos, "number, variable, exp( or (", self.text)


def parse(text: str, n: int | None = None) -> Expr:
    """Parse ``text``; if ``n`` is given, variables beyond ``z_n`` are rejected."""
    e = _Parser(text).parse()
    if n is not None and max_var(e) > n:
        raise ExprSyntaxError(text.find(f"z{max_var(e)}"), f"variable index <= {n}", text)
    return e


def as_expr(e) -> Expr:
    if isinstance(e, Expr):
        return e
    if isinstance(e, str):
        return parse(e)
    return const(e)


# -- rendering ----------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Neg: 2, Mul: 3, Div: 3, Pow: 4}


def _prec(e: Expr) -> int:
    return _PREC.get(type(e), 5)


def _fmt_frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def render(e: Expr) -> str:
    def wrap(x: Expr, need: int) -> str:
        s = render(x)
        return s if _prec(x) >= need else f"({s})"

    if isinstance(e, Const):
        if e.im == 0 and e.re >= 0 and e.re.denominator == 1:
            return str(e.re.numerator)
        return f"({_fmt_frac(e.re)},{_fmt_frac(e.im)})"
    if isinstance(e, Var):
        return f"z{e.i}"
    if isinstance(e, Add):
        return f"{wrap(e.a, 1)} + {wrap(e.b, 2)}"
    if isinstance(e, Sub):
        return f"{wrap(e.a, 1)} - {wrap(e.b, 2)}"
    if isinstance(e, Neg):
        return f"-{wrap(e.a, 2)}"
    if isinstance(e, Mul):
        return f"{wrap(e.a, 3)}*{wrap(e.b, 4)}"
    if isinstance(e, Div):
        return f"{wrap(e.a, 3)}/{wrap(e.b, 4)}"
    if isinstance(e, Pow):
        return f"{wrap(e.a, 5)}^{e.k}"
    if isinstance(e, Exp):
        return f"exp({render(e.a)})"
    raise TypeError(f"unknown node {e!r}")


# -- structural helpers -------------------------------------------------------

def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.a, e.b)
    if isinstance(e, (Neg, Exp, Pow)):
        return (e.a,)
    return ()


def walk(e: Expr):
    yield e
    for c in children(e):
        yield from walk(c)


def max_var(e: Expr) -> int:
    return max((x.i for x in walk(e) if isinstance(x, Var)), default=0)


def variables(e: Expr) -> frozenset[int]:
    return frozenset(x.i for x in walk(e) if isinstance(x, Var))


def has_exp(e: Expr) -> bool:
    return any(isinstance(x, Exp) for x in walk(e))


def is_real_rational(e: Expr) -> bool:
    """No ``exp`` and every literal real (so exact arithmetic applies)."""
    return all(not isinstance(x, Exp) and not (isinstance(x, Const) and x.im != 0) for x in walk(e))


# -- evaluation ---------------------------------------------------------------

class _Ops:
    """Arithmetic back-end for :func:`fold`."""

    def const(self, c: Const):
        return complex(c.re, c.im)

    def div(self, a, b):
        if abs(b) < POLE_TOL:
            raise PoleError("division by zero")
        return a / b

    def pow(self, a, k):
        if k < 0:
            if abs(a) < POLE_TOL:
                raise PoleError("negative power of zero")
            return 1 / a ** (-k)
        return a**k

    def exp(self, a):
        try:
            return cmath.exp(a)
        except OverflowError as exc:
            raise DomainError(f"exp overflow at {a}") from exc


class _ExactOps(_Ops):
    def const(self, c: Const):
        if c.im != 0:
            raise DomainError("complex literal in exact evaluation")
        return c.re

    def div(self, a, b):
        if b == 0:
            raise PoleError("division by zero")
        return Fraction(a) / b

    def pow(self, a, k):
        if k < 0:
            if a == 0:
                raise PoleError("negative power of zero")
            return Fraction(1) / Fraction(a) ** (-k)
        return a**k

    def exp(self, a):
        raise DomainError("exp is not exact")


class _ArrayOps(_Ops):
    def const(self, c: Const):
        return np.complex128(complex(c.re, c.im))

    def div(self, a, b):
        if np.any(np.abs(b) < POLE_TOL):
            raise PoleError("division by zero")
        return a / b

    def pow(self, a, k):
        if k < 0:
            if np.any(np.abs(a) < POLE_TOL):
                raise PoleError("negative power of zero")
            return 1 / a ** (-k)
        return a**k

    def exp(self, a):
        with np.errstate(over="raise", invalid="raise"):
            try:
                return np.exp(a)
            except FloatingPointError as exc:
                raise DomainError("exp overflow") from exc


class _JetOps(_Ops):
    def __init__(self, cap, exact):
        self.cap, self.exact = cap, exact

    def const(self, c: Const):
        if self.exact:
            return c.re
        return complex(c.re, c.im)

    def div(self, a, b):
        if not isinstance(b, Jet) and abs(b) < POLE_TOL:
            raise PoleError("division by zero")
        return a / b

    def pow(self, a, k):
        if isinstance(a, Jet):
            return a**k
        return super().pow(a, k)

    def exp(self, a):
        if isinstance(a, Jet):
            return a.exp()
        return super().exp(a)


class _PolyOps(_Ops):
    def __init__(self, n):
        self.n = n

    def const(self, c: Const):
        return Poly.const(self.n, c.re if c.im == 0 else complex(c.re, c.im))

    def div(self, a, b):
        if b.degree() > 0:
            raise ValueError("not a polynomial: division by a nonconstant")
        if b.is_zero():
            raise PoleError("division by zero")
        return a * Poly.const(self.n, 1 / b.coeff((0,) * self.n))

    def pow(self, a, k):
        if k < 0:
            return self.div(Poly.const(self.n, 1), a**(-k))
        return a**k

    def exp(self, a):
        raise ValueError("not a polynomial: exp")


def fold(e: Expr, env: Callable[[int], object], ops: _Ops):
    """Evaluate the tree bottom-up with variable values from ``env(i)``."""
    if isinstance(e, Const):
        return ops.const(e)
    if isinstance(e, Var):
        return env(e.i)
    if isinstance(e, Add):
        return fold(e.a, env, ops) + fold(e.b, env, ops)
    if isinstance(e, Sub):
        return fold(e.a, env, ops) - fold(e.b, env, ops)
    if isinstance(e, Mul):
        return fold(e.a, env, ops) * fold(e.b, env, ops)
    if isinstance(e, Div):
        return ops.div(fold(e.a, env, ops), fold(e.b, env, ops))
    if isinstance(e, Neg):
        return -fold(e.a, env, ops)
    if isinstance(e, Pow):
        return ops.pow(fold(e.a, env, ops), e.k)
    if isinstance(e, Exp):
        return ops.exp(fold(e.a, env, ops))
    raise TypeError(f"unknown node {e!r}")


def _env(z: Sequence, e: Expr):
    def get(i):
        if i > len(z):
            raise DomainError(f"variable z{i} not supplied (got {len(z)} values)")
        return z[i - 1]

    return get


def evaluate(e: Expr, z: Sequence) -> complex:
    """Complex floating point value at ``z``."""
    z = [complex(v) for v in z]
    return complex(fold(e, _env(z, e), _Ops()))


def evaluate_exact(e: Expr, z: Sequence) -> Fraction:
    """Exact rational value at rational ``z`` (no ``exp``, real literals)."""
    z = [Fraction(v) for v in z]
    return Fraction(fold(e, _env(z, e), _ExactOps()))


def eval_array(e: Expr, Z: np.ndarray) -> np.ndarray:
    """Vectorised evaluation; ``Z`` has shape ``(..., n)``."""
    Z = np.asarray(Z, dtype=np.complex128)
    cols = [Z[..., k] for k in range(Z.shape[-1])]
    out = fold(e, _env(cols, e), _ArrayOps())
    return np.broadcast_to(np.asarray(out, dtype=np.complex128), Z.shape[:-1]).copy()


def eval_jet(e: Expr, env: Sequence, cap, exact: bool = False):
    """Evaluate with arbitrary jet-valued (or scalar) variables."""
    return fold(e, _env(list(env), e), _JetOps(tuple(cap), exact))


def jet(e: Expr, z: Sequence, cap: Sequence[int], exact: bool | None = None) -> Jet:
    """Taylor jet of ``e`` at the point ``z`` in all ``len(z)`` variables.

    ``exact`` defaults to true when ``e`` and ``z`` are real rational.
    """
    cap = tuple(int(c) for c in cap)
    if len(cap) != len(z):
        raise ValueError("cap must have one entry per variable")
    if exact is None:
        exact = is_real_rational(e) and all(isinstance(v, (int, Fraction)) for v in z)
    if exact:
        z = [Fraction(v) for v in z]
    else:
        z = [complex(v) for v in z]
    env = [Jet.variable(v, k, cap, exact) for k, v in enumerate(z)]
    out = eval_jet(e, env, cap, exact)
    if not isinstance(out, Jet):
        out = Jet.constant(out, cap, exact)
    return out


def to_poly(e: Expr, n: int | None = None) -> Poly:
    """Exact polynomial form; raises ``ValueError`` for non-polynomials."""
    n = max(max_var(e), 1) if n is None else n
    return fold(e, lambda i: Poly.var(n, i), _PolyOps(n))


def from_poly(p: Poly) -> Expr:
    """Expression tree for a polynomial (sum of monomials, sorted)."""
    out: Expr | None = None
    for m, c in sorted(p.terms.items()):
        factors: list[Expr] = []
        for i, k in enumerate(m, 1):
            if k == 1:
                factors.append(Var(i))
            elif k > 1:
                factors.append(Pow(Var(i), k))
        term: Expr | None = None
        if c != 1 or not factors:
            term = const(c)
        for f in factors:
            term = f if term is None else Mul(term, f)
        out = term if out is None else Add(out, term)
    return ZERO if out is None else out


# -- symbolic manipulation ----------------------------------------------------

def _is_const(e: Expr, v=None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def simplify(e: Expr) -> Expr:
    """Local constant folding and identity removal.  Not a normal form."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        a = simplify(e.a)
        if isinstance(a, Const):
            return Const(-a.re, -a.im)
        if isinstance(a, Neg):
            return a.a
        if isinstance(a, Div) and isinstance(a.a, Const):
            return Div(Const(-a.a.re, -a.a.im), a.b) if a.a.re <= 0 and a.a.im == 0 else Neg(a)
        return Neg(a)
    if isinstance(e, Exp):
        a = simplify(e.a)
        if _is_const(a, 0):
            return ONE
        return Exp(a)
    if isinstance(e, Pow):
        a = simplify(e.a)
        if e.k == 0:
            return ONE
        if e.k == 1:
            return a
        if isinstance(a, Const) and a.im == 0 and (e.k > 0 or a.re != 0):
            return Const(a.re**e.k)
        if isinstance(a, Pow):
            return Pow(a.a, a.k * e.k)
        return Pow(a, e.k)
    a, b = simplify(e.a), simplify(e.b)
    if isinstance(a, Const) and isinstance(b, Const) and a.im == 0 and b.im == 0:
        if isinstance(e, Add):
            return Const(a.re + b.re)
        if isinstance(e, Sub):
            return Const(a.re - b.re)
        if isinstance(e, Mul):
            return Const(a.re * b.re)
        if isinstance(e, Div) and b.re != 0:
            return Const(a.re / b.re)
    if isinstance(e, Add):
        if _is_const(a, 0):
            return b
        if _is_const(b, 0):
            return a
        if isinstance(b, Neg):
            return Sub(a, b.a)
        return Add(a, b)
    if isinstance(e, Sub):
        if _is_const(b, 0):
            return a
        if _is_const(a, 0):
            return simplify(Neg(b))
        if a == b:
            return ZERO
        return Sub(a, b)
    if isinstance(e, Mul):
        if _is_const(a, 0) or _is_const(b, 0):
            return ZERO
        if _is_const(a, 1):
            return b
        if _is_const(b, 1):
            return a
        if _is_const(a, -1):
            return simplify(Neg(b))
        if _is_const(b, -1):
            return simplify(Neg(a))
        if isinstance(a, Neg) and isinstance(b, Neg):
            return Mul(a.a, b.a)
        if isinstance(a, Neg):
            return Neg(Mul(a.a, b))
        if isinstance(b, Neg):
            return Neg(Mul(a, b.a))
        return Mul(a, b)
    if isinstance(e, Div):
        if _is_const(a, 0) and not _is_const(b, 0):
            return ZERO
        if _is_const(b, 1):
            return a
        if isinstance(a, Neg):
            return simplify(Neg(Div(a.a, b)))
        return Div(a, b)
    raise TypeError(f"unknown node {e!r}")


def _d(e: Expr, i: int) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.i == i else ZERO
    if isinstance(e, Add):
        return Add(_d(e.a, i), _d(e.b, i))
    if isinstance(e, Sub):
        return Sub(_d(e.a, i), _d(e.b, i))
    if isinstance(e, Neg):
        return Neg(_d(e.a, i))
    if isinstance(e, Mul):
        return Add(Mul(_d(e.a, i), e.b), Mul(e.a, _d(e.b, i)))
    if isinstance(e, Div):
        return Div(Sub(Mul(_d(e.a, i), e.b), Mul(e.a, _d(e.b, i))), Pow(e.b, 2))
    if isinstance(e, Pow):
        return Mul(Mul(const(e.k), Pow(e.a, e.k - 1)), _d(e.a, i))
    if isinstance(e, Exp):
        return Mul(_d(e.a, i), e)
    raise TypeError(f"unknown node {e!r}")


def derive(e: Expr, i: int) -> Expr:
    """Symbolic partial derivative in ``z_i`` (simplified)."""
    if i not in variables(e):
        return ZERO
    return simplify(_d(e, i))


def derive_multi(e: Expr, alpha: Sequence[int]) -> Expr:
    for i, k in enumerate(alpha, 1):
        for _ in range(k):
            e = derive(e, i)
    return e


def subs(e: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace variables ``z_i`` by expressions (missing keys stay put)."""
    if isinstance(e, Var):
        return mapping.get(e.i, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, (Add, Sub, Mul, Div)):
        return type(e)(subs(e.a, mapping), subs(e.b, mapping))
    if isinstance(e, Pow):
        return Pow(subs(e.a, mapping), e.k)
    return type(e)(subs(e.a, mapping))


def restrict_zero(e: Expr, indices) -> Expr:
    """Substitute ``z_i = 0`` for ``i`` in ``indices`` and simplify."""
    return simplify(subs(e, {i: ZERO for i in indices}))


def equal_on_samples(a: Expr, b: Expr, n: int, rng: np.random.Generator,
                     count: int = 32, tol: float = 1e-10, scale: float = 0.5) -> bool:
    """Sampled equality test at random complex points of the polydisc."""
    Z = scale * (rng.uniform(-1, 1, (count, n)) + 1j * rng.uniform(-1, 1, (count, n)))
    try:
        va, vb = eval_array(a, Z), eval_array(b, Z)
    except PoleError:
        return False
    return bool(np.all(np.abs(va - vb) <= tol * np.maximum(1.0, np.abs(va))))
