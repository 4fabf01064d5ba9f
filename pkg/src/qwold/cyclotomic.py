"""Exact arithmetic in cyclotomic fields Q(zeta_n).

Elements are stored in the reduced power basis 1, zeta, ..., zeta^(phi(n)-1)
with rational coefficients.  Mixed conductors are lifted to their lcm.
Anything combined with a float or complex falls back to ``complex``.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from functools import lru_cache
from math import gcd
from numbers import Rational


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def _polydiv_exact(num: list[int], den: list[int]) -> list[int]:
    # coefficient lists, lowest degree first; den monic
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    for k in range(len(out) - 1, -1, -1):
        c = num[k + len(den) - 1]
        out[k] = c
        if c:
            for j, d in enumerate(den):
                num[k + j] -= c * d
    assert not any(num[: len(den) - 1]), "inexact cyclotomic division"
    return out


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_n, lowest degree first."""
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly = _polydiv_exact(poly, list(cyclotomic_poly(d)))
    return tuple(poly)


@lru_cache(maxsize=None)
def _phi(n: int) -> int:
    return len(cyclotomic_poly(n)) - 1


@lru_cache(maxsize=None)
def _power_table(n: int) -> tuple[tuple[int, ...], ...]:
    """Reduced integer coordinates of zeta_n^k for k = 0..n-1."""
    phi = _phi(n)
    p = cyclotomic_poly(n)
    rows = []
    cur = [0] * phi
    cur[0] = 1
    for _ in range(n):
        rows.append(tuple(cur))
        # multiply by zeta: shift up, reduce the overflow with Phi_n (monic)
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            for j in range(phi):
                cur[j] -= top * p[j]
    return tuple(rows)


def _reduce(n: int, poly: list) -> tuple:
    """Reduce a polynomial in zeta_n (any degree) to the power basis."""
    phi = _phi(n)
    table = _power_table(n)
    out = [Fraction(0)] * phi
    for k, c in enumerate(poly):
        if c:
            row = table[k % n]
            for j in range(phi):
                if row[j]:
                    out[j] += c * row[j]
    return tuple(out)


class Cyclo:
    """An element of Q(zeta_n), zeta_n = exp(2 pi i / n)."""

    __slots__ = ("n", "c")

    def __init__(self, n: int, coeffs):
        self.n = n
        self.c = tuple(Fraction(x) for x in coeffs)

    # -- constructors -----------------------------------------------------
    @classmethod
    def rational(cls, x, n: int = 1) -> "Cyclo":
        phi = _phi(n)
        return cls(n, (Fraction(x),) + (Fraction(0),) * (phi - 1))

    @classmethod
    def root(cls, turn) -> "Cyclo":
        """exp(2 pi i * turn) for a rational ``turn``."""
        t = Fraction(turn) % 1
        n, k = t.denominator, t.numerator
        if n == 1:
            return cls.rational(1)
        return cls(n, _power_table(n)[k])

    @classmethod
    def i(cls) -> "Cyclo":
        return cls.root(Fraction(1, 4))

    @classmethod
    def gaussian(cls, re, im) -> "Cyclo":
        return cls.rational(re) + cls.rational(im) * cls.i()

    # -- structure --------------------------------------------------------
    def lift(self, m: int) -> "Cyclo":
        if m == self.n:
            return self
        if m % self.n:
            raise ValueError(f"cannot lift conductor {self.n} to {m}")
        step = m // self.n
        poly = [Fraction(0)] * (step * len(self.c))
        for k, c in enumerate(self.c):
            poly[k * step] = c
        return Cyclo(m, _reduce(m, poly))

    def _common(self, other: "Cyclo"):
        m = _lcm(self.n, other.n)
        return self.lift(m), other.lift(m)

    def is_zero(self) -> bool:
        return not any(self.c)

    def conjugate(self) -> "Cyclo":
        n = self.n
        poly = [Fraction(0)] * n
        for k, c in enumerate(self.c):
            poly[(-k) % n] += c
        return Cyclo(n, _reduce(n, poly))

    conj = conjugate

    def __complex__(self) -> complex:
        n = self.n
        return complex(sum(float(c) * cmath.exp(2j * cmath.pi * k / n) for k, c in enumerate(self.c) if c))

    def __abs__(self) -> float:
        return abs(complex(self))

    @property
    def real(self) -> float:
        return complex(self).real

    @property
    def imag(self) -> float:
        return complex(self).imag

    # -- arithmetic -------------------------------------------------------
    @staticmethod
    def _coerce(x):
        if isinstance(x, Cyclo):
            return x
        if isinstance(x, (int, Rational)):
            return Cyclo.rational(x)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) + other
        a, b = self._common(o)
        return Cyclo(a.n, tuple(x + y for x, y in zip(a.c, b.c)))

    __radd__ = __add__

    def __neg__(self):
        return Cyclo(self.n, tuple(-x for x in self.c))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) - other
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) * other
        a, b = self._common(o)
        if len(a.c) == 1 or len(b.c) == 1:
            s, v = (a.c[0], b) if len(a.c) == 1 else (b.c[0], a)
            return Cyclo(v.n, tuple(s * x for x in v.c))
        poly = [Fraction(0)] * (len(a.c) + len(b.c) - 1)
        for i, x in enumerate(a.c):
            if x:
                for j, y in enumerate(b.c):
                    if y:
                        poly[i + j] += x * y
        return Cyclo(a.n, _reduce(a.n, poly))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = Cyclo.rational(1, self.n)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def inverse(self) -> "Cyclo":
        # norm trick: multiply by all Galois conjugates except self
        n = self.n
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        if len(self.c) == 1:
            return Cyclo.rational(1 / self.c[0])
        prod = Cyclo.rational(1, n)
        for k in range(2, n):
            if gcd(k, n) == 1:
                poly = [Fraction(0)] * (n * len(self.c))
                for j, c in enumerate(self.c):
                    poly[(j * k) % n] += c
                prod = prod * Cyclo(n, _reduce(n, poly))
        norm = self * prod
        assert all(x == 0 for x in norm.c[1:]), "norm must be rational"
        return prod * Cyclo.rational(1 / norm.c[0])

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) / other
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return other / complex(self)
        return o * self.inverse()

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) == other
            return NotImplemented
        a, b = self._common(o)
        return a.c == b.c

    def __hash__(self):
        # canonical under lifting: hash the complex value rounded
        z = complex(self)
        return hash((round(z.real, 9), round(z.imag, 9)))

    def __repr__(self):
        if all(x == 0 for x in self.c[1:]):
            return f"Cyclo({self.c[0]})"
        terms = [f"{c}*z{self.n}^{k}" for k, c in enumerate(self.c) if c]
        return "Cyclo(" + " + ".join(terms) + ")"


def is_exact(x) -> bool:
    return isinstance(x, (Cyclo, int, Rational))


def conj(x):
    if isinstance(x, Cyclo):
        return x.conjugate()
    if isinstance(x, (int, Rational)):
        return x
    return complex(x).conjugate()


def to_complex(x) -> complex:
    return complex(x)
