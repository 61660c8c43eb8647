"""Sparse multivariate polynomials with exact rational (or complex) coefficients."""

from __future__ import annotations

from fractions import Fraction
from math import factorial, prod
from typing import Iterable, Mapping

Monomial = tuple[int, ...]


def _clean(terms: Mapping[Monomial, object]) -> dict[Monomial, object]:
    return {m: c for m, c in terms.items() if c != 0}


class Poly:
    """Polynomial in ``z_1..z_n`` stored as ``{exponent tuple: coefficient}``.

    Coefficients are ``Fraction`` when possible; complex values are allowed
    but then equality is only as exact as the floats involved.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Monomial, object] | None = None):
        self.n = n
        self.terms = _clean(terms or {})
        for m in self.terms:
            if len(m) != n:
                raise ValueError(f"monomial {m} has wrong length for n={n}")

    # construction
    @classmethod
    def zero(cls, n: int) -> "Poly":
        return cls(n)

    @classmethod
    def const(cls, n: int, c) -> "Poly":
        return cls(n, {(0,) * n: _num(c)})

    @classmethod
    def var(cls, n: int, i: int) -> "Poly":
        """The coordinate ``z_i`` (1-based)."""
        e = [0] * n
        e[i - 1] = 1
        return cls(n, {tuple(e): Fraction(1)})

    @classmethod
    def monomial(cls, alpha: Iterable[int], c=1) -> "Poly":
        alpha = tuple(alpha)
        return cls(len(alpha), {alpha: _num(c)})

    # arithmetic
    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.n, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        out: dict[Monomial, object] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = Poly.const(self.n, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, float, complex)):
            other = Poly.const(self.n, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.n != self.n:
                raise ValueError("polynomials over different numbers of variables")
            return other
        return Poly.const(self.n, other)

    # calculus and evaluation
    def diff(self, i: int) -> "Poly":
        out: dict[Monomial, object] = {}
        k = i - 1
        for m, c in self.terms.items():
            if m[k]:
                e = list(m)
                e[k] -= 1
                out[tuple(e)] = out.get(tuple(e), 0) + c * m[k]
        return Poly(self.n, out)

    def __call__(self, z):
        total = 0
        for m, c in self.terms.items():
            total += c * prod(zi**e for zi, e in zip(z, m) if e)
        return total

    def coeff(self, alpha: Iterable[int]):
        return self.terms.get(tuple(alpha), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def support(self) -> list[Monomial]:
        return sorted(self.terms)

    def restrict_zero(self, indices: Iterable[int]) -> "Poly":
        """Set ``z_i = 0`` for the given (1-based) indices."""
        idx = [i - 1 for i in indices]
        return Poly(self.n, {m: c for m, c in self.terms.items() if all(m[k] == 0 for k in idx)})

    def to_json(self) -> dict:
        """``{"1": c0, "z1*z2^2": c, ...}``."""
        return {(_mono_name(m) or "1"): _num_json(c) for m, c in sorted(self.terms.items())}

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            name = _mono_name(m)
            parts.append(f"{c}" if not name else f"{c}*{name}")
        return " + ".join(parts)


def _num(c):
    if isinstance(c, (int, Fraction)):
        return Fraction(c)
    if isinstance(c, complex) and c.imag == 0:
        return c.real
    return c


def _num_json(c):
    if isinstance(c, Fraction):
        return str(c) if c.denominator != 1 else c.numerator
    if isinstance(c, complex):
        return [c.real, c.imag]
    return c


def _mono_name(m: Monomial) -> str:
    parts = []
    for i, e in enumerate(m, 1):
        if e == 1:
            parts.append(f"z{i}")
        elif e > 1:
            parts.append(f"z{i}^{e}")
    return "*".join(parts)


def inv_factorial(alpha: Iterable[int]) -> Fraction:
    return Fraction(1, prod(factorial(a) for a in alpha))


class SeriesS:
    """Truncated power series in auxiliary variables ``s_1..s_k`` with
    :class:`Poly` coefficients (polynomials in ``z``).

    Used to expand products of exponentials in the block parameters.
    """

    __slots__ = ("cap", "n", "terms")

    def __init__(self, cap: tuple[int, ...], n: int, terms: dict[Monomial, Poly] | None = None):
        self.cap = cap
        self.n = n
        self.terms = {b: p for b, p in (terms or {}).items() if not p.is_zero()}

    @classmethod
    def one(cls, cap, n) -> "SeriesS":
        return cls(cap, n, {(0,) * len(cap): Poly.const(n, 1)})

    def __mul__(self, other: "SeriesS") -> "SeriesS":
        out: dict[Monomial, Poly] = {}
        for b1, p1 in self.terms.items():
            for b2, p2 in other.terms.items():
                b = tuple(x + y for x, y in zip(b1, b2))
                if any(x > c for x, c in zip(b, self.cap)):
                    continue
                out[b] = out.get(b, Poly.zero(self.n)) + p1 * p2
        return SeriesS(self.cap, self.n, out)

    def get(self, beta: Monomial) -> Poly:
        return self.terms.get(tuple(beta), Poly.zero(self.n))
