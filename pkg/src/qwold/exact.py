"""Small exact matrix helpers over cyclotomic scalars (object arrays)."""

from __future__ import annotations

import numpy as np

from .cyclotomic import Cyclo, conj, is_exact
from .opalg import exact_identity


def to_exact(A) -> np.ndarray:
    A = np.asarray(A, dtype=object)
    out = np.empty(A.shape, dtype=object)
    for idx, x in np.ndenumerate(A):
        if isinstance(x, Cyclo):
            out[idx] = x
        elif is_exact(x):
            out[idx] = Cyclo.rational(x)
        else:
            raise TypeError(f"entry {x!r} is not exact")
    return out


def is_exact_matrix(A) -> bool:
    return isinstance(A, np.ndarray) and A.dtype == object and all(is_exact(x) for x in A.flat)


def mul(A, B) -> np.ndarray:
    return np.dot(A, B)


def ctranspose(A) -> np.ndarray:
    return np.array([[conj(x) for x in row] for row in A.T], dtype=object).reshape(A.shape[1], A.shape[0])


def zeros(n: int, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    Z = np.empty((n, m), dtype=object)
    for idx in np.ndindex(n, m):
        Z[idx] = Cyclo.rational(0)
    return Z


def inverse(A) -> np.ndarray:
    """Gauss-Jordan inverse; raises ZeroDivisionError when singular."""
    n = A.shape[0]
    M = np.hstack([to_exact(A), exact_identity(n)])
    for c in range(n):
        piv = next((r for r in range(c, n) if not M[r, c].is_zero()), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        if piv != c:
            M[[c, piv]] = M[[piv, c]]
        inv = M[c, c].inverse()
        M[c] = [x * inv for x in M[c]]
        for r in range(n):
            if r != c and not M[r, c].is_zero():
                f = M[r, c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return M[:, n:]


def equal(A, B) -> bool:
    return A.shape == B.shape and all((x - y).is_zero() for x, y in zip(A.flat, B.flat))


def cayley_unitary(H) -> np.ndarray:
    """(I + iH)(I - iH)^{-1} for Hermitian H; exact when H is exact."""
    n = H.shape[0]
    iH = np.array([Cyclo.i() * x for x in to_exact(H).flat], dtype=object).reshape(n, n)
    I = exact_identity(n)
    return mul(I + iH, inverse(I - iH))


def random_hermitian(n: int, rng: np.random.Generator, bound: int = 3) -> np.ndarray:
    H = zeros(n)
    for a in range(n):
        H[a, a] = Cyclo.rational(int(rng.integers(-bound, bound + 1)))
        for b in range(a + 1, n):
            re, im = (int(x) for x in rng.integers(-bound, bound + 1, size=2))
            H[a, b] = Cyclo.gaussian(re, im)
            H[b, a] = H[a, b].conjugate()
    return H


def diag(entries) -> np.ndarray:
    n = len(entries)
    D = zeros(n)
    for k, x in enumerate(entries):
        D[k, k] = x if isinstance(x, Cyclo) else Cyclo.rational(x)
    return D


def block_diag(A, B) -> np.ndarray:
    n, m = A.shape[0], B.shape[0]
    Z = zeros(n + m)
    Z[:n, :n] = A
    Z[n:, n:] = B
    return Z
