"""Truncated multivariate Taylor jets.

A :class:`Jet` stores Taylor-normalized coefficients ``d^a f / a!`` for every
multi-index ``a <= cap`` (componentwise) in a dense array whose trailing
``len(cap)`` axes index the multi-index and whose leading axes are a batch
of independent base points.  Arithmetic is truncated at ``cap``.

Coefficients are ``complex128`` in floating mode and Python ``Fraction``
objects (``dtype=object``) in exact mode.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial, prod

import numpy as np

from .errors import DomainError, JetFailure, PoleError

POLE_TOL = 1e-300


def _as_array(value, exact: bool):
    if exact:
        arr = np.asarray(value, dtype=object)
        return arr
    return np.asarray(value, dtype=np.complex128)


class Jet:
    __slots__ = ("c", "cap", "exact")

    def __init__(self, coeffs: np.ndarray, cap: tuple[int, ...], exact: bool = False):
        self.c = coeffs
        self.cap = tuple(cap)
        self.exact = exact

    # construction
    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(k + 1 for k in self.cap)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.c.shape[: self.c.ndim - len(self.cap)]

    @classmethod
    def constant(cls, value, cap, exact: bool = False) -> "Jet":
        value = _as_array(value, exact)
        dims = tuple(k + 1 for k in cap)
        c = np.zeros(value.shape + dims, dtype=value.dtype)
        if exact:
            c[...] = Fraction(0)
        c[(...,) + (0,) * len(dims)] = value
        return cls(c, cap, exact)

    @classmethod
    def variable(cls, value, k: int, cap, exact: bool = False) -> "Jet":
        """Jet of ``s -> value + s_k`` (``k`` is 0-based)."""
        out = cls.constant(value, cap, exact)
        if cap[k] >= 1:
            idx = [0] * len(cap)
            idx[k] = 1
            out.c[(...,) + tuple(idx)] = Fraction(1) if exact else 1.0
        return out

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.cap != self.cap:
                raise JetFailure(f"jet caps differ: {self.cap} vs {other.cap}")
            return other
        if self.exact and isinstance(other, (int, Fraction)):
            return Jet.constant(Fraction(other), self.cap, True)
        if self.exact and isinstance(other, np.ndarray) and other.dtype == object:
            return Jet.constant(other, self.cap, True)
        return Jet.constant(other, self.cap, False)

    def _promote(self, other: "Jet") -> tuple[np.ndarray, np.ndarray, bool]:
        exact = self.exact and other.exact
        a, b = self.c, other.c
        if not exact:
            a = a.astype(np.complex128) if a.dtype == object else a
            b = b.astype(np.complex128) if b.dtype == object else b
        return a, b, exact

    # accessors
    def value(self):
        return self.c[(...,) + (0,) * len(self.cap)]

    def coeff(self, alpha):
        return self.c[(...,) + tuple(alpha)]

    def derivative(self, alpha):
        """The partial derivative ``d^alpha f`` at the base point."""
        return self.coeff(alpha) * prod(factorial(a) for a in alpha)

    # arithmetic
    def __add__(self, other) -> "Jet":
        other = self._lift(other)
        a, b, exact = self._promote(other)
        return Jet(a + b, self.cap, exact)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.c, self.cap, self.exact)

    def __sub__(self, other) -> "Jet":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Jet":
        return self._lift(other) - self

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            # scalar (or batched scalar) multiple: no convolution needed
            a, b, exact = self._promote(self._lift(other))
            scal = b[(...,) + (0,) * len(self.cap)]
            return Jet(a * scal[(...,) + (None,) * len(self.cap)], self.cap, exact)
        a, b, exact = self._promote(other)
        return Jet(_convolve(a, b, self.dims), self.cap, exact)

    def __rmul__(self, other) -> "Jet":
        return self * other

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = self._lift(other)
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self._lift(other) * self.reciprocal()

    def __pow__(self, k: int) -> "Jet":
        if not isinstance(k, (int, np.integer)):
            raise JetFailure("only integer powers are supported")
        if k < 0:
            return self.reciprocal() ** (-k)
        one = np.full(self.batch_shape, Fraction(1) if self.exact else 1.0,
                      dtype=object if self.exact else np.complex128)
        out = Jet.constant(one, self.cap, self.exact)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def _split(self):
        zero = (...,) + (0,) * len(self.cap)
        a0 = self.c[zero]
        h = self.c.copy()
        h[zero] = Fraction(0) if self.exact else 0.0
        return a0, Jet(h, self.cap, self.exact)

    @property
    def order(self) -> int:
        return sum(self.cap)

    def reciprocal(self) -> "Jet":
        a0, h = self._split()
        if self.exact:
            if np.any(np.asarray(a0 == 0, dtype=bool)):
                raise PoleError("division by zero")
            inv0 = np.vectorize(lambda v: Fraction(1) / v, otypes=[object])(a0)
        else:
            if np.any(np.abs(a0) < POLE_TOL):
                raise PoleError("division by (numerically) zero")
            inv0 = 1.0 / a0
        u = h * inv0  # nilpotent
        one = self._lift(Fraction(1) if self.exact else 1.0)
        r = one
        for _ in range(self.order):
            r = one - u * r
        return r * inv0

    def exp(self) -> "Jet":
        if self.exact:
            raise JetFailure("exp is not available in exact mode")
        a0, h = self._split()
        with np.errstate(over="raise", invalid="raise"):
            try:
                e0 = np.exp(a0)
            except FloatingPointError as exc:
                raise DomainError("exp overflow") from exc
        one = self._lift(1.0)
        r = one
        for k in range(self.order, 0, -1):
            r = one + (h * r) * (1.0 / k)
        return r * e0

    def to_complex(self) -> "Jet":
        if not self.exact:
            return self
        return Jet(self.c.astype(np.complex128), self.cap, False)


def _convolve(a: np.ndarray, b: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    k = len(dims)
    batch = np.broadcast_shapes(a.shape[: a.ndim - k], b.shape[: b.ndim - k])
    dtype = object if (a.dtype == object and b.dtype == object) else np.complex128
    out = np.zeros(batch + dims, dtype=dtype)
    if dtype == object:
        out[...] = Fraction(0)
    pad = (None,) * k
    for alpha in np.ndindex(*dims):
        av = a[(...,) + alpha]
        if dtype == object:
            if not np.any(np.asarray(av != 0, dtype=bool)):
                continue
        elif not np.any(av):
            continue
        src = tuple(slice(0, d - al) for d, al in zip(dims, alpha))
        dst = tuple(slice(al, d) for d, al in zip(dims, alpha))
        out[(...,) + dst] += np.asarray(av)[(...,) + pad] * b[(...,) + src]
    return out
