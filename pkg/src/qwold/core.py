"""Phases, q-matrices, graded monomial indexing and truncation windows."""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .cyclotomic import Cyclo

VALUE_TOL = 1e-12


@dataclass(frozen=True)
class Phase:
    """A unimodular scalar.

    ``turn`` holds an exact rational rotation (value exp(2 pi i turn)), kept
    reduced modulo 1.  ``angle`` holds a raw angle in radians when the phase
    is not a rational rotation.  Exactly one of the two is set.
    """

    turn: Fraction | None = None
    angle: float | None = None

    def __post_init__(self):
        if (self.turn is None) == (self.angle is None):
            raise ValueError("Phase needs exactly one of turn/angle")
        if self.turn is not None:
            object.__setattr__(self, "turn", Fraction(self.turn) % 1)

    @classmethod
    def rational(cls, p: int, r: int = 1) -> "Phase":
        if r <= 0:
            raise ValueError("rotation order must be positive")
        return cls(turn=Fraction(p, r))

    @classmethod
    def from_angle(cls, theta: float) -> "Phase":
        return cls(angle=float(theta))

    @classmethod
    def one(cls) -> "Phase":
        return cls(turn=Fraction(0))

    @classmethod
    def parse(cls, text: str) -> "Phase":
        text = text.strip()
        if text.startswith("rad:"):
            return cls.from_angle(float(text[4:]))
        if "/" in text:
            p, r = text.split("/")
            return cls.rational(int(p), int(r))
        return cls.rational(int(text), 1)

    @property
    def exact(self) -> bool:
        return self.turn is not None

    @property
    def order(self) -> int | None:
        return None if self.turn is None else self.turn.denominator

    @property
    def theta(self) -> float:
        if self.turn is not None:
            return 2 * math.pi * float(self.turn)
        return self.angle

    @property
    def value(self) -> complex:
        if self.turn is not None:
            # exact table values for quarter turns
            t = self.turn
            if t == 0:
                return 1 + 0j
            if t == Fraction(1, 2):
                return -1 + 0j
            if t == Fraction(1, 4):
                return 1j
            if t == Fraction(3, 4):
                return -1j
        return cmath.exp(1j * self.theta)

    def scalar(self):
        """Exact ``Cyclo`` for rational rotations, complex otherwise."""
        if self.turn is not None:
            return Cyclo.root(self.turn)
        return self.value

    def __mul__(self, other: "Phase") -> "Phase":
        if self.exact and other.exact:
            return Phase(turn=self.turn + other.turn)
        return Phase(angle=self.theta + other.theta)

    def conj(self) -> "Phase":
        if self.exact:
            return Phase(turn=-self.turn)
        return Phase(angle=-self.angle)

    def __pow__(self, k: int) -> "Phase":
        return phase_pow(self, k)

    def is_one(self) -> bool:
        if self.exact:
            return self.turn == 0
        return abs(self.value - 1) < VALUE_TOL

    def close_to(self, other: "Phase", tol: float = VALUE_TOL) -> bool:
        if self.exact and other.exact:
            return self.turn == other.turn
        return abs(self.value - other.value) < tol

    def text(self) -> str:
        if self.exact:
            return f"{self.turn.numerator}/{self.turn.denominator}"
        return f"rad:{self.angle!r}"

    def __str__(self):
        return self.text()


def phase_pow(q: Phase, k: int) -> Phase:
    if q.exact:
        return Phase(turn=q.turn * k)
    return Phase(angle=q.angle * k)


def xy_sequences(n: int) -> tuple[int, int]:
    """The recursions x_1 = 0, x_n = x_{n-1} + n - 1 and y_1 = 1, y_n = y_{n-1} + n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x, y = 0, 1
    for m in range(2, n + 1):
        x += m - 1
        y += m
    return x, y


class QMatrix:
    """The phase function q(i, j) of a q-commutative d-tuple (1-based)."""

    def __init__(self, entries: Sequence[Sequence[Phase]]):
        self.entries = tuple(tuple(row) for row in entries)
        self.d = len(self.entries)
        self.validate()

    def validate(self) -> None:
        d = self.d
        for row in self.entries:
            if len(row) != d:
                raise ValueError("QMatrix must be square")
        for i in range(d):
            if not self.entries[i][i].is_one():
                raise ValueError(f"q({i + 1},{i + 1}) must be 1")
            for j in range(d):
                a, b = self.entries[i][j], self.entries[j][i]
                if not a.close_to(b.conj(), 1e-14):
                    raise ValueError(f"q({i + 1},{j + 1}) is not the conjugate of q({j + 1},{i + 1})")

    def __call__(self, i: int, j: int) -> Phase:
        return self.entries[i - 1][j - 1]

    @classmethod
    def pair(cls, q: Phase) -> "QMatrix":
        return cls([[Phase.one(), q], [q.conj(), Phase.one()]])

    @classmethod
    def power_convention(cls, q: Phase, d: int) -> "QMatrix":
        """q(i, j) = q^(j - i), the convention of the rotated-shift d-tuple."""
        return cls([[phase_pow(q, j - i) for j in range(d)] for i in range(d)])

    def to_json(self) -> dict:
        return {"d": self.d, "entries": [[p.text() for p in row] for row in self.entries]}

    @classmethod
    def from_json(cls, obj: dict) -> "QMatrix":
        m = cls([[Phase.parse(s) for s in row] for row in obj["entries"]])
        if m.d != obj.get("d", m.d):
            raise ValueError("QMatrix d does not match entries")
        return m


def qi_product(Q: QMatrix, i: int) -> Phase:
    if not 1 <= i <= Q.d:
        raise IndexError(f"index {i} out of range 1..{Q.d}")
    out = Phase.one()
    for j in range(1, Q.d + 1):
        out = out * Q(i, j)
    return out


# -- graded monomial basis ----------------------------------------------------


def total_degree(exps: Sequence[int]) -> int:
    return sum(exps)


def monomials(d: int, cap: int) -> list[tuple[int, ...]]:
    """All exponent tuples with every exponent < cap, in graded lex order.

    Degree ascending; within a degree, lexicographically descending so that
    z1^2 precedes z1 z2 precedes z2^2.
    """
    if d == 0:
        return [()]
    out = list(itertools.product(range(cap), repeat=d))
    out.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return out


def monomials_of_degree(d: int, deg: int) -> Iterator[tuple[int, ...]]:
    for e in monomials(d, deg + 1):
        if sum(e) == deg:
            yield e


def monomial_text(exps: Sequence[int]) -> str:
    parts = []
    for j, n in enumerate(exps, start=1):
        if n == 1:
            parts.append(f"z{j}" if len(exps) > 1 else "z")
        elif n > 1:
            parts.append((f"z{j}" if len(exps) > 1 else "z") + f"^{n}")
    return " ".join(parts) or "1"


@dataclass(frozen=True)
class TruncationWindow:
    """Per-variable cap N and the band of the operator word under test."""

    N: int
    band: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.band < 0:
            raise ValueError("band must be non-negative")

    @property
    def safe_cap(self) -> int:
        return self.N - self.band

    @property
    def valid(self) -> bool:
        return self.safe_cap >= 1

    def with_band(self, band: int) -> "TruncationWindow":
        return TruncationWindow(self.N, band)
