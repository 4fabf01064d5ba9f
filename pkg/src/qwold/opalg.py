"""Lazy graded operators on (H^2(D^d) (x) F) (+) K_u.

An operator is a finite sum of terms.  A Hardy term is
``scalar * (word of monomial atoms) (x) fiber_matrix``; fiber maps commute
with the Hardy atoms, so all fiber factors of a word are multiplied into a
single matrix.  A K_u term is ``scalar * matrix`` on K_u.  Hardy terms vanish
on K_u and K_u terms vanish on the Hardy part.

Every Hardy atom maps a monomial to a phase times a monomial (or to zero),
so application to finitely supported vectors is exact.  Rational phases and
exact matrix entries are carried as :class:`~qwold.cyclotomic.Cyclo`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Union

import numpy as np

from .core import Phase, TruncationWindow, monomial_text, monomials
from .cyclotomic import Cyclo, conj, is_exact
from .report import FAIL, INCONCLUSIVE, PASS, Check

# basis keys: ("h", exps, k) for z^exps (x) e_k, ("u", j) for the j-th K_u vector
Key = tuple
Vector = dict


class SignatureMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SpaceSignature:
    d: int
    fiber_dim: int
    ku_dim: int = 0

    def __post_init__(self):
        if self.d < 0 or self.ku_dim < 0 or self.fiber_dim < 0:
            raise ValueError("signature dimensions must be non-negative")
        if self.d >= 1 and self.fiber_dim < 1:
            raise ValueError("fiber_dim must be >= 1 when d >= 1")

    def basis(self, N: int) -> list[Key]:
        keys: list[Key] = [("h", e, k) for e in monomials(self.d, N) for k in range(self.fiber_dim)]
        keys += [("u", j) for j in range(self.ku_dim)]
        return keys

    def to_json(self) -> dict:
        return {"d": self.d, "fiberDim": self.fiber_dim, "kuDim": self.ku_dim}

    @classmethod
    def from_json(cls, obj: dict) -> "SpaceSignature":
        return cls(int(obj["d"]), int(obj.get("fiberDim", 1)), int(obj.get("kuDim", 0)))


def key_degree(key: Key) -> int:
    return sum(key[1]) if key[0] == "h" else 0


def key_text(key: Key, fiber_dim: int = 1) -> str:
    if key[0] == "u":
        return f"k{key[1]}"
    s = monomial_text(key[1])
    return s if fiber_dim <= 1 else f"{s}(x)e{key[2]}"


# -- scalars and matrices ---------------------------------------------------------


def _is_zero(x) -> bool:
    if isinstance(x, Cyclo):
        return x.is_zero()
    return x == 0


def as_matrix(A) -> np.ndarray:
    """Object array when every entry is exact, complex array otherwise."""
    A = np.asarray(A, dtype=object) if not isinstance(A, np.ndarray) else A
    if A.dtype != object:
        return A.astype(complex)
    if all(is_exact(x) for x in A.flat):
        return A
    return np.array([[complex(x) for x in row] for row in A], dtype=complex).reshape(A.shape)


def _matmul(A, B):
    if A is None:
        return B
    if B is None:
        return A
    if A.dtype == object and B.dtype == object:
        return np.dot(A, B)
    return np.asarray(as_complex(A) @ as_complex(B))


def as_complex(A) -> np.ndarray:
    if A.dtype == object:
        return np.array([complex(x) for x in A.flat], dtype=complex).reshape(A.shape)
    return A.astype(complex, copy=False)


def _scale(s, A):
    if A.dtype == object and is_exact(s):
        return np.array([s * x for x in A.flat], dtype=object).reshape(A.shape)
    return complex(s) * as_complex(A)


def _mat_add(A, B):
    if A.dtype == object and B.dtype == object:
        return np.array([x + y for x, y in zip(A.flat, B.flat)], dtype=object).reshape(A.shape)
    return as_complex(A) + as_complex(B)


def _conj_t(A):
    if A is None:
        return None
    if A.dtype == object:
        return np.array([[conj(x) for x in row] for row in A.T], dtype=object)
    return A.conj().T


def exact_identity(n: int) -> np.ndarray:
    M = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            M[i, j] = Cyclo.rational(1 if i == j else 0)
    return M


def _norm_scalar(s):
    if isinstance(s, (int, Rational)) and not isinstance(s, bool):
        return Cyclo.rational(s)
    if isinstance(s, Cyclo):
        return s
    return complex(s)


@lru_cache(maxsize=4096)
def _root(turn: Fraction) -> Cyclo:
    return Cyclo.root(turn)


# -- atoms ---------------------------------------------------------------------------


def _atom_text(a) -> str:
    if a[0] == "S":
        return f"Shift:{a[1]}"
    if a[0] == "C":
        return f"Coshift:{a[1]}"
    if a[0] == "R":
        return f"Rot:{a[1].text()}"
    return f"RotVar:{a[1]}:{a[2].text()}"


def _atom_adjoint(a):
    if a[0] == "S":
        return ("C", a[1])
    if a[0] == "C":
        return ("S", a[1])
    if a[0] == "R":
        return ("R", a[1].conj())
    return ("Rv", a[1], a[2].conj())


@lru_cache(maxsize=200_000)
def act_word(word: tuple, exps: tuple):
    """Apply a Hardy word to z^exps: returns (turn, angle, new_exps) or None."""
    e = list(exps)
    turn = Fraction(0)
    angle = 0.0
    for a in reversed(word):
        tag = a[0]
        if tag == "S":
            e[a[1] - 1] += 1
        elif tag == "C":
            j = a[1] - 1
            if e[j] == 0:
                return None
            e[j] -= 1
        else:
            c: Phase = a[1] if tag == "R" else a[2]
            n = sum(e) if tag == "R" else e[a[1] - 1]
            if n:
                if c.exact:
                    turn += c.turn * n
                else:
                    angle += c.angle * n
    return turn % 1, angle, tuple(e)


def _phase_scalar(turn: Fraction, angle: float):
    if angle == 0.0:
        return _root(turn)
    return complex(_root(turn)) * complex(np.exp(1j * angle))


def _simplify_word(word: tuple) -> tuple:
    out: list = []
    for a in word:
        if out:
            b = out[-1]
            # Coshift(j) Shift(j) = I on H^2
            if b[0] == "C" and a[0] == "S" and a[1] == b[1]:
                out.pop()
                continue
            if b[0] == "R" and a[0] == "R":
                out[-1] = ("R", b[1] * a[1])
                if out[-1][1].exact and out[-1][1].turn == 0:
                    out.pop()
                continue
        if a[0] == "R" and a[1].exact and a[1].turn == 0:
            continue
        out.append(a)
    return tuple(out)


# -- operator -------------------------------------------------------------------------


class LazyOperator:
    """Finite sum of Hardy terms and K_u terms; immutable."""

    __slots__ = ("signature", "hardy", "ku")

    def __init__(self, signature: SpaceSignature, hardy: Iterable = (), ku: Iterable = ()):
        self.signature = signature
        merged: dict = {}
        order: list = []
        for s, word, F in hardy:
            word = _simplify_word(tuple(word))
            s = _norm_scalar(s)
            if F is not None:
                F = as_matrix(F)
                if F.shape != (signature.fiber_dim, signature.fiber_dim):
                    raise SignatureMismatch("fiber matrix has the wrong shape")
            if word in merged:
                merged[word] = _combine(merged[word], (s, F), signature.fiber_dim)
            else:
                merged[word] = (s, F)
                order.append(word)
        self.hardy = tuple((merged[w][0], w, merged[w][1]) for w in order if not _term_zero(merged[w]))
        kus = []
        for s, B in ku:
            s = _norm_scalar(s)
            if B is not None:
                B = as_matrix(B)
                if B.shape != (signature.ku_dim, signature.ku_dim):
                    raise SignatureMismatch("K_u matrix has the wrong shape")
            kus.append((s, B))
        if len(kus) > 1:
            tot = None
            for s, B in kus:
                M = _scale(s, B if B is not None else exact_identity(signature.ku_dim))
                tot = M if tot is None else _mat_add(tot, M)
            kus = [(Cyclo.rational(1), tot)]
        self.ku = tuple(t for t in kus if not _term_zero(t)) if signature.ku_dim else ()

    # algebra
    def _check(self, other: "LazyOperator"):
        if not isinstance(other, LazyOperator):
            raise TypeError("expected a LazyOperator")
        if other.signature != self.signature:
            raise SignatureMismatch(f"{self.signature} vs {other.signature}")

    def __matmul__(self, other: "LazyOperator") -> "LazyOperator":
        return compose(self, other)

    def __add__(self, other: "LazyOperator") -> "LazyOperator":
        self._check(other)
        return LazyOperator(self.signature, self.hardy + other.hardy, self.ku + other.ku)

    def __sub__(self, other: "LazyOperator") -> "LazyOperator":
        return self + scale(-1, other)

    def __rmul__(self, s) -> "LazyOperator":
        return scale(s, self)

    def adjoint(self) -> "LazyOperator":
        return adjoint(self)

    @property
    def H(self) -> "LazyOperator":
        return adjoint(self)

    @property
    def band(self) -> int:
        """Largest net degree raise over the Hardy terms."""
        b = 0
        for _, w, _ in self.hardy:
            b = max(b, sum(1 for a in w if a[0] == "S") - sum(1 for a in w if a[0] == "C"))
        return b

    @property
    def exact(self) -> bool:
        def word_exact(w):
            return all(a[-1].exact for a in w if a[0] in ("R", "Rv"))

        return all(isinstance(s, Cyclo) and word_exact(w) and (F is None or F.dtype == object) for s, w, F in self.hardy) and all(
            isinstance(s, Cyclo) and (B is None or B.dtype == object) for s, B in self.ku
        )

    def apply(self, v: Vector) -> Vector:
        return apply(self, v)

    def __call__(self, v: Vector) -> Vector:
        return apply(self, v)

    def __repr__(self):
        parts = []
        for s, w, F in self.hardy:
            parts.append(" ".join(_atom_text(a) for a in w) + (" (x)F" if F is not None else ""))
        if self.ku:
            parts.append("Ku")
        return f"LazyOperator({self.signature}, " + " + ".join(parts or ["0"]) + ")"


def _term_zero(t) -> bool:
    s, F = t[0], t[-1]
    if _is_zero(s):
        return True
    if F is None:
        return False
    return all(_is_zero(x) for x in F.flat)


def _combine(t1, t2, n):
    s1, F1 = t1
    s2, F2 = t2
    if F1 is None and F2 is None:
        return (s1 + s2, None)
    A = _scale(s1, F1 if F1 is not None else exact_identity(n))
    B = _scale(s2, F2 if F2 is not None else exact_identity(n))
    return (Cyclo.rational(1), _mat_add(A, B))


def compose(A: LazyOperator, B: LazyOperator) -> LazyOperator:
    A._check(B)
    hardy = [(sa * sb, wa + wb, _matmul(Fa, Fb)) for sa, wa, Fa in A.hardy for sb, wb, Fb in B.hardy]
    ku = [(sa * sb, _matmul(Ba, Bb)) for sa, Ba in A.ku for sb, Bb in B.ku]
    return LazyOperator(A.signature, hardy, ku)


def adjoint(T: LazyOperator) -> LazyOperator:
    hardy = [(conj(s), tuple(_atom_adjoint(a) for a in reversed(w)), _conj_t(F)) for s, w, F in T.hardy]
    ku = [(conj(s), _conj_t(B)) for s, B in T.ku]
    return LazyOperator(T.signature, hardy, ku)


def scale(c, T: LazyOperator) -> LazyOperator:
    if isinstance(c, Phase):
        c = c.scalar()
    c = _norm_scalar(c)
    return LazyOperator(T.signature, [(c * s, w, F) for s, w, F in T.hardy], [(c * s, B) for s, B in T.ku])


def add(A: LazyOperator, B: LazyOperator) -> LazyOperator:
    return A + B


def apply(T: LazyOperator, v: Vector) -> Vector:
    sig = T.signature
    out: dict = {}
    for key, coef in v.items():
        if _is_zero(coef):
            continue
        if key[0] == "h":
            if len(key[1]) != sig.d or not 0 <= key[2] < sig.fiber_dim:
                raise SignatureMismatch(f"vector key {key} does not match {sig}")
            k = key[2]
            for s, w, F in T.hardy:
                res = act_word(w, key[1])
                if res is None:
                    continue
                turn, angle, e = res
                c = s * _phase_scalar(turn, angle) * coef
                if F is None:
                    nk = ("h", e, k)
                    out[nk] = out.get(nk, 0) + c
                else:
                    col = F[:, k]
                    for r in range(sig.fiber_dim):
                        x = col[r]
                        if not _is_zero(x):
                            nk = ("h", e, r)
                            out[nk] = out.get(nk, 0) + c * x
        elif key[0] == "u":
            j = key[1]
            if not 0 <= j < sig.ku_dim:
                raise SignatureMismatch(f"vector key {key} does not match {sig}")
            for s, B in T.ku:
                if B is None:
                    out[key] = out.get(key, 0) + s * coef
                else:
                    for r in range(sig.ku_dim):
                        x = B[r, j]
                        if not _is_zero(x):
                            nk = ("u", r)
                            out[nk] = out.get(nk, 0) + s * x * coef
        else:
            raise SignatureMismatch(f"bad key {key}")
    return {k: c for k, c in out.items() if not _is_zero(c)}


def basis_vector(key: Key) -> Vector:
    return {key: Cyclo.rational(1)}


def inner(u: Vector, v: Vector):
    """<u, v>, linear in the first slot."""
    tot = 0
    for k, c in u.items():
        if k in v:
            tot = tot + c * conj(v[k])
    return tot


# -- constructors ----------------------------------------------------------------------


def shift(sig: SpaceSignature, j: int = 1) -> LazyOperator:
    _check_var(sig, j)
    return LazyOperator(sig, [(1, (("S", j),), None)])


def coshift(sig: SpaceSignature, j: int = 1) -> LazyOperator:
    _check_var(sig, j)
    return LazyOperator(sig, [(1, (("C", j),), None)])


def rot(sig: SpaceSignature, c: Phase) -> LazyOperator:
    """R_c : f(z) -> f(c z), all variables rotated together."""
    return LazyOperator(sig, [(1, (("R", c),), None)])


def rot_var(sig: SpaceSignature, j: int, c: Phase) -> LazyOperator:
    _check_var(sig, j)
    return LazyOperator(sig, [(1, (("Rv", j, c),), None)])


def fiber_map(sig: SpaceSignature, A) -> LazyOperator:
    return LazyOperator(sig, [(1, (), as_matrix(A))])


def ku_map(sig: SpaceSignature, B) -> LazyOperator:
    return LazyOperator(sig, [], [(1, as_matrix(B))])


def hardy_identity(sig: SpaceSignature) -> LazyOperator:
    return LazyOperator(sig, [(1, (), None)] if sig.fiber_dim else [])


def ku_identity(sig: SpaceSignature) -> LazyOperator:
    return LazyOperator(sig, [], [(1, None)] if sig.ku_dim else [])


def identity(sig: SpaceSignature) -> LazyOperator:
    return hardy_identity(sig) + ku_identity(sig)


def zero(sig: SpaceSignature) -> LazyOperator:
    return LazyOperator(sig)


def _check_var(sig, j):
    if not 1 <= j <= sig.d:
        raise SignatureMismatch(f"variable {j} out of range for d={sig.d}")


def word_product(ops: list[LazyOperator]) -> LazyOperator:
    out = identity(ops[0].signature)
    for op in ops:
        out = out @ op
    return out


# -- truncated matrices ---------------------------------------------------------------------


@dataclass
class TruncatedMatrix:
    """Dense compression of an operator to the box basis (every exponent < N)."""

    signature: SpaceSignature
    window: TruncationWindow
    basis: list
    matrix: np.ndarray

    def __post_init__(self):
        n = len(self.basis)
        if self.matrix.shape != (n, n):
            raise ValueError("TruncatedMatrix must be square over its basis")

    @property
    def degrees(self) -> np.ndarray:
        return np.array([key_degree(k) for k in self.basis])

    def safe_mask(self, cap: int | None = None) -> np.ndarray:
        cap = self.window.safe_cap if cap is None else cap
        return np.array([k[0] == "u" or key_degree(k) < cap for k in self.basis])

    def index(self) -> dict:
        return {k: i for i, k in enumerate(self.basis)}

    def like(self, matrix: np.ndarray, band: int | None = None) -> "TruncatedMatrix":
        w = self.window if band is None else self.window.with_band(band)
        return TruncatedMatrix(self.signature, w, self.basis, matrix)

    def __matmul__(self, other: "TruncatedMatrix") -> "TruncatedMatrix":
        if other.basis != self.basis:
            raise SignatureMismatch("basis mismatch")
        return self.like(self.matrix @ other.matrix, self.window.band + other.window.band)

    @property
    def H(self) -> "TruncatedMatrix":
        return self.like(self.matrix.conj().T)

    def compress(self, keep) -> "TruncatedMatrix":
        """Compression to the span of the basis vectors selected by ``keep``."""
        keep = np.asarray(keep, dtype=bool)
        idx = np.flatnonzero(keep)
        return TruncatedMatrix(self.signature, self.window, [self.basis[i] for i in idx], self.matrix[np.ix_(idx, idx)])

    def to_json(self) -> dict:
        M = self.matrix
        return {
            "signature": self.signature.to_json(),
            "N": self.window.N,
            "band": self.window.band,
            "basis": [key_text(k, self.signature.fiber_dim) for k in self.basis],
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in M],
        }


def densify(T: LazyOperator, window: TruncationWindow | int) -> TruncatedMatrix:
    if isinstance(window, int):
        window = TruncationWindow(window, T.band)
    sig = T.signature
    basis = sig.basis(window.N)
    idx = {k: i for i, k in enumerate(basis)}
    M = np.zeros((len(basis), len(basis)), dtype=complex)
    for c, key in enumerate(basis):
        for k, val in apply(T, basis_vector(key)).items():
            r = idx.get(k)
            if r is not None:
                M[r, c] = complex(val)
    return TruncatedMatrix(sig, TruncationWindow(window.N, max(window.band, T.band)), basis, M)


def lazy_window_keys(sig: SpaceSignature, safe_cap: int) -> list[Key]:
    keys = [("h", e, k) for e in monomials(sig.d, safe_cap + 1) if sum(e) <= safe_cap for k in range(sig.fiber_dim)]
    return keys + [("u", j) for j in range(sig.ku_dim)]


def _vec_dev(u: Vector, v: Vector):
    dev, exact_nonzero, worst = 0.0, False, None
    for k in set(u) | set(v):
        a, b = u.get(k, 0), v.get(k, 0)
        diff = a - b
        if _is_zero(diff):
            continue
        mag = abs(complex(diff))
        if isinstance(diff, Cyclo):
            exact_nonzero = True
            mag = max(mag, 5e-324)
        if mag > dev:
            dev, worst = mag, k
    return dev, exact_nonzero


Operand = Union[LazyOperator, TruncatedMatrix]


def equal_on_window(A: Operand, B: Operand, window: TruncationWindow, tol: float = 0.0, name: str = "equal_on_window") -> Check:
    """Compare A and B on every basis vector of the safe window.

    Lazy-vs-lazy comparison is exact: with tol = 0 it passes only when the
    images agree identically.  Dense operands are compared column by column
    on the columns of total degree below the safe cap.
    """
    if not window.valid:
        return Check(name, float("nan"), tol, INCONCLUSIVE, "empty safe window")
    sig = A.signature
    if B.signature != sig:
        raise SignatureMismatch(f"{sig} vs {B.signature}")
    if isinstance(A, LazyOperator) and isinstance(B, LazyOperator):
        worst, witness = 0.0, None
        for key in lazy_window_keys(sig, window.safe_cap):
            e = basis_vector(key)
            dev, _ = _vec_dev(apply(A, e), apply(B, e))
            if dev > worst:
                worst, witness = dev, key_text(key, sig.fiber_dim)
        ok = worst <= tol
        return Check(name, worst, tol, PASS if ok else FAIL, None if ok else witness, {"exact": A.exact and B.exact})
    dA = A if isinstance(A, TruncatedMatrix) else densify(A, window)
    dB = B if isinstance(B, TruncatedMatrix) else densify(B, window)
    if dA.basis != dB.basis:
        raise SignatureMismatch("dense bases differ")
    mask = dA.safe_mask(window.safe_cap)
    if not mask.any():
        return Check(name, float("nan"), tol, INCONCLUSIVE, "empty safe window")
    diff = np.abs(dA.matrix[:, mask] - dB.matrix[:, mask])
    cols = np.flatnonzero(mask)
    j = int(np.argmax(diff.max(axis=0))) if diff.size else 0
    worst = float(diff.max()) if diff.size else 0.0
    ok = worst <= tol
    return Check(name, worst, tol, PASS if ok else FAIL, None if ok else key_text(dA.basis[cols[j]], sig.fiber_dim))


# -- JSON --------------------------------------------------------------------------------


def _mat_to_json(M) -> list:
    return [[[float(complex(z).real), float(complex(z).imag)] for z in row] for row in M]


def _mat_from_json(rows) -> np.ndarray:
    return np.array([[complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z) for z in row] for row in rows], dtype=complex)


def operator_to_json(T: LazyOperator) -> dict:
    terms, mats = [], {}
    for s, w, F in T.hardy:
        atoms = [_atom_text(a) for a in w]
        if not atoms:
            atoms = ["HardyIdentity"]
        if F is not None:
            mid = f"m{len(mats)}"
            mats[mid] = _mat_to_json(F)
            atoms.append(f"Fiber:{mid}")
        z = complex(s)
        terms.append({"scalar": [z.real, z.imag], "atoms": atoms})
    for s, B in T.ku:
        if B is None:
            atoms = ["KuIdentity"]
        else:
            mid = f"m{len(mats)}"
            mats[mid] = _mat_to_json(B)
            atoms = [f"Ku:{mid}"]
        z = complex(s)
        terms.append({"scalar": [z.real, z.imag], "atoms": atoms})
    return {"signature": T.signature.to_json(), "terms": terms, "matrices": mats}


def operator_from_json(obj: dict) -> LazyOperator:
    sig = SpaceSignature.from_json(obj["signature"])
    mats = {k: _mat_from_json(v) for k, v in obj.get("matrices", {}).items()}
    hardy, ku = [], []
    for t in obj["terms"]:
        sc = t.get("scalar", [1, 0])
        s = complex(sc[0], sc[1]) if isinstance(sc, (list, tuple)) else complex(sc)
        word, F, K, has_h, has_k = [], None, None, False, False
        for a in t["atoms"]:
            tag, _, rest = a.partition(":")
            if tag == "Shift":
                word.append(("S", int(rest)))
                has_h = True
            elif tag == "Coshift":
                word.append(("C", int(rest)))
                has_h = True
            elif tag == "Rot":
                word.append(("R", Phase.parse(rest)))
                has_h = True
            elif tag == "RotVar":
                j, _, ph = rest.partition(":")
                word.append(("Rv", int(j), Phase.parse(ph)))
                has_h = True
            elif tag == "Fiber":
                F = _matmul(F, mats[rest]) if F is not None else mats[rest]
                has_h = True
            elif tag == "HardyIdentity":
                has_h = True
            elif tag == "Ku":
                K = _matmul(K, mats[rest]) if K is not None else mats[rest]
                has_k = True
            elif tag == "KuIdentity":
                has_k = True
            else:
                raise ValueError(f"unknown atom {a!r}")
        if has_h and has_k:
            continue  # Hardy and K_u atoms annihilate each other's summand
        if has_k:
            ku.append((s, K))
        else:
            hardy.append((s, tuple(word), F))
    return LazyOperator(sig, hardy, ku)
