"""BCL q-tuples: model construction, tau_BCL, extraction and equivalence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
import scipy.linalg

from . import exact as ex
from .core import Phase, TruncationWindow
from .cyclotomic import Cyclo
from .opalg import (
    LazyOperator,
    SpaceSignature,
    TruncatedMatrix,
    adjoint,
    as_complex,
    densify,
    exact_identity,
    identity,
    ku_map,
)
from .report import Check
from .wold import RANK_TOL, TOL, defect, ku_projection, orth, pair_caps

BCL1, BCL2 = "BCL1", "BCL2"


class InvalidTuple(ValueError):
    pass


class NoUnimodularQ(ValueError):
    def __init__(self, residual: float, detail: str = ""):
        super().__init__(f"no unimodular q exists (best residual {residual:.3e}){detail}")
        self.residual = residual


class ExtractionError(ValueError):
    pass


def _c(A) -> np.ndarray:
    return as_complex(A) if isinstance(A, np.ndarray) else np.asarray(A, dtype=complex)


def _H(A):
    return ex.ctranspose(A) if A.dtype == object else A.conj().T


def _mm(A, B):
    if A.dtype == object and B.dtype == object:
        return np.dot(A, B)
    return _c(A) @ _c(B)


def _eye_like(A):
    n = A.shape[0]
    return exact_identity(n) if A.dtype == object else np.eye(n, dtype=complex)


@dataclass
class BCLTuple:
    q: Phase
    P: np.ndarray
    U: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    flavor: str = BCL1

    def __post_init__(self):
        for name in ("P", "U", "W1", "W2"):
            A = getattr(self, name)
            if not isinstance(A, np.ndarray):
                A = np.asarray(A, dtype=complex)
            if A.ndim != 2:
                A = A.reshape(0, 0) if A.size == 0 else A
            setattr(self, name, A)

    @property
    def fiber_dim(self) -> int:
        return self.P.shape[0]

    @property
    def ku_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def exact(self) -> bool:
        return self.q.exact and all(ex.is_exact_matrix(A) or A.size == 0 for A in (self.P, self.U, self.W1, self.W2))

    def signature(self) -> SpaceSignature:
        return SpaceSignature(1 if self.fiber_dim else 0, self.fiber_dim, self.ku_dim)

    def validate(self, tol: float = 1e-12) -> None:
        n, k = self.fiber_dim, self.ku_dim
        if self.P.shape != (n, n) or self.U.shape != (n, n):
            raise InvalidTuple("P and U must be square of the same size")
        if self.W1.shape != (k, k) or self.W2.shape != (k, k):
            raise InvalidTuple("W1 and W2 must be square of the same size")
        P, U, W1, W2 = (_c(A) for A in (self.P, self.U, self.W1, self.W2))
        if n:
            if np.abs(P @ P - P).max() > tol or np.abs(P - P.conj().T).max() > tol:
                raise InvalidTuple("P is not an orthogonal projection")
            if np.abs(U.conj().T @ U - np.eye(n)).max() > tol:
                raise InvalidTuple("U is not unitary")
        if k:
            for name, W in (("W1", W1), ("W2", W2)):
                if np.abs(W.conj().T @ W - np.eye(k)).max() > tol:
                    raise InvalidTuple(f"{name} is not unitary")
            if np.abs(W1 @ W2 - self.q.value * W2 @ W1).max() > tol:
                raise InvalidTuple("W1 W2 != q W2 W1")
            r = self.q.order
            if r is not None and k % r:
                raise InvalidTuple(f"q of order {r} admits no q-commuting unitaries on a space of dimension {k}")

    def to_json(self) -> dict:
        def m(A):
            return [[[float(z.real), float(z.imag)] for z in row] for row in _c(A)]

        return {
            "q": self.q.text(),
            "fiberDim": self.fiber_dim,
            "kuDim": self.ku_dim,
            "P": m(self.P),
            "U": m(self.U),
            "W1": m(self.W1),
            "W2": m(self.W2),
            "flavor": self.flavor,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BCLTuple":
        def m(rows, n):
            if n == 0:
                return np.zeros((0, 0), dtype=complex)
            return np.array([[complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z) for z in row] for row in rows], dtype=complex)

        n, k = int(obj["fiberDim"]), int(obj.get("kuDim", 0))
        t = cls(Phase.parse(obj["q"]), m(obj["P"], n), m(obj["U"], n), m(obj.get("W1", []), k), m(obj.get("W2", []), k), obj.get("flavor", BCL1))
        if t.fiber_dim != n or t.ku_dim != k:
            raise InvalidTuple("declared dimensions do not match the matrices")
        return t


# -- model ----------------------------------------------------------------------------------


def build_model(t: BCLTuple, check: bool = True) -> tuple[LazyOperator, LazyOperator]:
    if check:
        t.validate(1e-10)
    sig = t.signature()
    q, qb = t.q, t.q.conj()
    P, U = t.P, t.U
    hardy1, hardy2 = [], []
    if t.fiber_dim:
        I = _eye_like(P)
        Pp = I - P
        Rq, Rqb, S = ("R", q), ("R", qb), ("S", 1)
        if t.flavor == BCL1:
            Uh = _H(U)
            hardy1 = [(1, (Rq,), _mm(Pp, U)), (1, (S, Rq), _mm(P, U))]
            hardy2 = [(1, (Rqb,), _mm(Uh, P)), (1, (Rqb, S), _mm(Uh, Pp))]
        elif t.flavor == BCL2:
            Uh = _H(U)
            hardy1 = [(1, (Rq,), _mm(Uh, Pp)), (1, (S, Rq), _mm(Uh, P))]
            hardy2 = [(1, (Rqb,), _mm(P, U)), (1, (Rqb, S), _mm(Pp, U))]
        else:
            raise InvalidTuple(f"unknown flavor {t.flavor!r}")
    ku1 = [(1, t.W1)] if t.ku_dim else []
    ku2 = [(1, t.W2)] if t.ku_dim else []
    return LazyOperator(sig, hardy1, ku1), LazyOperator(sig, hardy2, ku2)


def bcl1_to_bcl2(t: BCLTuple) -> BCLTuple:
    """BCL-2 data (P, U*) of the same pair."""
    if t.flavor != BCL1:
        raise InvalidTuple("expected a BCL-1 tuple")
    return replace(t, U=_H(t.U), flavor=BCL2)


def conjugated_bcl2(t: BCLTuple) -> BCLTuple:
    """BCL-2 data (U* P U, U*): its model is the BCL-1 model of t."""
    if t.flavor != BCL1:
        raise InvalidTuple("expected a BCL-1 tuple")
    Uh = _H(t.U)
    return replace(t, P=_mm(_mm(Uh, t.P), t.U), U=Uh, flavor=BCL2)


def as_bcl1(t: BCLTuple) -> BCLTuple:
    """BCL-1 data with literally the same model."""
    if t.flavor == BCL1:
        return t
    Ud = t.U
    return replace(t, P=_mm(_mm(_H(Ud), t.P), Ud), U=_H(Ud), flavor=BCL1)


# -- q inference ---------------------------------------------------------------------------------


def snap_phase(z: complex, max_order: int = 64, tol: float = 1e-9) -> Phase:
    theta = math.atan2(z.imag, z.real) / (2 * math.pi)
    f = Fraction(theta).limit_denominator(max_order)
    cand = Phase(turn=f)
    if abs(cand.value - z / abs(z)) < tol:
        return cand
    return Phase.from_angle(2 * math.pi * theta)


def infer_q(V1: TruncatedMatrix, V2: TruncatedMatrix, tol: float = 1e-8) -> tuple[Phase, float]:
    """Unimodular least-squares q in V1 V2 = q V2 V1 over the safe window."""
    cap = V1.window.N - V1.window.band - V2.window.band
    mask = V1.safe_mask(cap)
    X = (V1.matrix @ V2.matrix)[:, mask]
    Y = (V2.matrix @ V1.matrix)[:, mask]
    den = np.vdot(Y, Y).real
    if den == 0:
        return Phase.one(), float(np.abs(X).max()) if X.size else 0.0
    z = np.vdot(Y, X) / den
    if abs(z) < 1e-12:
        raise NoUnimodularQ(float(np.abs(X).max()))
    q = snap_phase(z)
    res = float(np.abs(X - q.value * Y).max())
    if res > tol:
        raise NoUnimodularQ(res)
    return q, res


def q_commutation_check(V1: TruncatedMatrix, V2: TruncatedMatrix, q: Phase, tol: float = TOL, name: str = "q_commutativity") -> Check:
    cap = V1.window.N - V1.window.band - V2.window.band
    mask = V1.safe_mask(cap)
    R = (V1.matrix @ V2.matrix - q.value * V2.matrix @ V1.matrix)[:, mask]
    return Check.from_residual(name, float(np.abs(R).max()) if R.size else 0.0, tol)


# -- tau_BCL --------------------------------------------------------------------------------------


@dataclass
class Extraction:
    tuple: BCLTuple
    tau: np.ndarray
    basis1: np.ndarray
    basis2: np.ndarray
    ku_basis: np.ndarray
    cap: int
    lower_cap: int
    full_fiber: bool
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _column_maps(V1: TruncatedMatrix, V2: TruncatedMatrix, E1, E2, D1, D2):
    A1h, A2h = V1.matrix.conj().T, V2.matrix.conj().T
    B = np.vstack([E1.conj().T @ D1, E2.conj().T @ D2 @ A1h])  # (D1; D2 V1*)
    A = np.vstack([E1.conj().T @ D1 @ A2h, E2.conj().T @ D2])  # (D1 V2*; D2)
    return B, A


def tau_matrix(V: TruncatedMatrix, B: np.ndarray, K: np.ndarray, n_terms: int) -> np.ndarray:
    """Rows: coefficient of z^n of B (I - zV*)^{-1} h for n < n_terms, then K* h."""
    Vh = V.matrix.conj().T
    rows = []
    cur = np.eye(V.matrix.shape[0], dtype=complex)
    for _ in range(n_terms):
        rows.append(B @ cur)
        cur = Vh @ cur
    if K.shape[1]:
        rows.append(K.conj().T)
    return np.vstack(rows)


def extract_bcl1(
    V1: TruncatedMatrix,
    V2: TruncatedMatrix,
    q: Phase | None = None,
    tol: float = TOL,
    rank_tol: float = RANK_TOL,
    check_tol: float = 1e-8,
) -> Extraction:
    if V1.signature != V2.signature or V1.basis != V2.basis:
        raise ExtractionError("V1 and V2 act on different spaces")
    if q is None:
        q, _ = infer_q(V1, V2, check_tol)
    qc = q_commutation_check(V1, V2, q, check_tol)
    if not qc.passed:
        raise NoUnimodularQ(qc.residual, f" for the supplied q = {q.text()}")
    V = V1 @ V2
    cap, low = pair_caps(V1, V2)
    if low < 1:
        raise ExtractionError("window too small for the pair's band")
    d1, d2 = defect(V1, rank_tol, cap), defect(V2, rank_tol, cap)
    E1, E2 = d1.basis, d2.basis
    ku = ku_projection(V, None, tol, cap)
    K = ku.basis
    mask = V.safe_mask(cap)
    idx = np.flatnonzero(mask)
    B, A = _column_maps(V1, V2, E1, E2, d1.projection, d2.projection)
    Bw, Aw = B[:, idx], A[:, idx]
    m = B.shape[0]
    rankB = int(np.linalg.matrix_rank(Bw, rank_tol)) if Bw.size else 0
    full = rankB == m
    if m == 0:
        U = np.zeros((0, 0), dtype=complex)
    elif full:
        X, _, Yh = np.linalg.svd(Aw @ Bw.conj().T)
        U = X @ Yh
    else:
        U = Aw @ np.linalg.pinv(Bw, rcond=rank_tol)
    m1 = E1.shape[1]
    P = np.diag([1.0] * m1 + [0.0] * (m - m1)).astype(complex)
    W1 = K.conj().T @ V1.matrix @ K
    W2 = K.conj().T @ V2.matrix @ K
    t = BCLTuple(q, P, U, W1, W2, BCL1)
    checks = [qc, ku.check(tol)]
    fit = float(np.abs(U @ Bw - Aw).max()) if Aw.size else 0.0
    checks.append(Check.from_residual("u_fit", fit, check_tol))
    if m:
        if full:
            checks.append(Check.from_residual("u_unitary", float(np.abs(U.conj().T @ U - np.eye(m)).max()), check_tol))
        else:
            # isometric on the sampled range of the column map
            R = orth(Bw, rank_tol)
            G = (U @ R).conj().T @ (U @ R) - np.eye(R.shape[1])
            checks.append(Check.from_residual("u_isometric_on_window", float(np.abs(G).max()) if G.size else 0.0, check_tol, fiber="truncated"))
    if K.shape[1]:
        checks.append(Check.from_residual("w_q_commutation", float(np.abs(W1 @ W2 - q.value * W2 @ W1).max()), check_tol))
    tau = tau_matrix(V, B, K, V.window.N)
    ex_ = Extraction(t, tau, E1, E2, K, cap, low, full, checks)
    ex_.checks += tau_checks(ex_, V1, V2, tol=check_tol)
    return ex_


def _model_dense(t: BCLTuple, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense model matrices in tau's row layout: z^n (x) F blocks, n < N, then K_u."""
    m, k = t.fiber_dim, t.ku_dim
    P, U = _c(t.P), _c(t.U)
    W1, W2 = _c(t.W1), _c(t.W2)
    q, qb = t.q.value, t.q.conj().value
    Pp = np.eye(m) - P
    if t.flavor == BCL1:
        a1, b1 = Pp @ U, P @ U
        a2, b2 = U.conj().T @ P, U.conj().T @ Pp
    else:
        a1, b1 = U.conj().T @ Pp, U.conj().T @ P
        a2, b2 = P @ U, Pp @ U
    size = N * m + k
    M1 = np.zeros((size, size), dtype=complex)
    M2 = np.zeros((size, size), dtype=complex)
    for n in range(N):
        s = slice(n * m, (n + 1) * m)
        M1[s, s] = q**n * a1
        M2[s, s] = qb**n * a2
        if n + 1 < N:
            s1 = slice((n + 1) * m, (n + 2) * m)
            M1[s1, s] = q**n * b1  # M_z R_q
            M2[s1, s] = qb ** (n + 1) * b2  # R_qbar M_z
    if k:
        M1[N * m :, N * m :] = W1
        M2[N * m :, N * m :] = W2
    return M1, M2


def tau_checks(e: Extraction, V1: TruncatedMatrix, V2: TruncatedMatrix, tol: float = 1e-8) -> list:
    """Isometry of tau and tau V_i = M_i tau on the lower window."""
    N = V1.window.N
    t = e.tuple
    M1, M2 = _model_dense(t, N)
    lidx = np.flatnonzero(V1.safe_mask(e.lower_cap))
    T = e.tau
    # the model raises degree by at most one: drop the top coefficient block
    m = t.fiber_dim
    rows = np.r_[np.arange((N - 1) * m), np.arange(N * m, N * m + t.ku_dim)]
    iso = T[:, lidx].conj().T @ T[:, lidx] - np.eye(lidx.size)
    out = [Check.from_residual("tau_isometry", float(np.abs(iso).max()) if iso.size else 0.0, tol)]
    for name, V, M in (("tau_intertwines_v1", V1, M1), ("tau_intertwines_v2", V2, M2)):
        R = (T @ V.matrix - M @ T)[np.ix_(rows, lidx)]
        out.append(Check.from_residual(name, float(np.abs(R).max()) if R.size else 0.0, tol))
    return out


def tau_bcl(V1: TruncatedMatrix, V2: TruncatedMatrix, q: Phase | None = None, **kw) -> Extraction:
    return extract_bcl1(V1, V2, q, **kw)


# -- exact tau coefficients -------------------------------------------------------------------------


def tau_coefficient_ops(V1: LazyOperator, V2: LazyOperator, n: int) -> tuple[LazyOperator, LazyOperator]:
    """Exact lazy operators D_{V1*} V*^n and D_{V2*} V1* V*^n (the z^n coefficient of tau)."""
    I = identity(V1.signature)
    D1 = I - V1 @ adjoint(V1)
    D2 = I - V2 @ adjoint(V2)
    Vs = adjoint(V1 @ V2)
    P = I
    for _ in range(n):
        P = P @ Vs
    return D1 @ P, D2 @ adjoint(V1) @ P


# -- equivalence ------------------------------------------------------------------------------------


@dataclass
class Equivalence:
    omega: np.ndarray
    omega_u: np.ndarray
    residual: float


def _intertwiner_space(pairs: list[tuple[np.ndarray, np.ndarray]], n: int, m: int, rank_tol: float) -> np.ndarray:
    """Basis (columns, vec-ordered) of {X (m x n): X A = B X for every (A, B)}."""
    blocks = []
    for A, B in pairs:
        # vec(X A) = (A^T (x) I_m) vec X ; vec(B X) = (I_n (x) B) vec X   (column-major vec)
        blocks.append(np.kron(A.T, np.eye(m)) - np.kron(np.eye(n), B))
    L = np.vstack(blocks) if blocks else np.zeros((0, n * m))
    if L.shape[0] == 0:
        return np.eye(n * m)
    # absolute cutoff: a constraint matrix that is zero up to rounding has a full null space
    _, sv, Vh = np.linalg.svd(L)
    rank = int(np.sum(sv > rank_tol * max(1.0, float(np.abs(L).max()))))
    return Vh[rank:].conj().T


def _unitary_intertwiner(pairs, n: int, rng: np.random.Generator, rank_tol: float, tol: float):
    if n == 0:
        return np.zeros((0, 0), dtype=complex), 0.0
    Nsp = _intertwiner_space(pairs, n, n, rank_tol)
    if Nsp.shape[1] == 0:
        return None, float("inf")
    c = rng.standard_normal(Nsp.shape[1]) + 1j * rng.standard_normal(Nsp.shape[1])
    X = (Nsp @ c).reshape((n, n), order="F")
    try:
        Wp, _ = scipy.linalg.polar(X)
    except (ValueError, np.linalg.LinAlgError):
        return None, float("inf")
    res = max(float(np.abs(Wp @ A - B @ Wp).max()) for A, B in pairs) if pairs else 0.0
    res = max(res, float(np.abs(Wp.conj().T @ Wp - np.eye(n)).max()))
    if res > tol:
        return None, res
    idx = np.flatnonzero(np.abs(Wp.ravel()) > 1e-9)
    if idx.size:
        z = Wp.ravel()[idx[0]]
        Wp = Wp * (abs(z) / z)
    return Wp, res


def tuples_equivalent(t: BCLTuple, t2: BCLTuple, tol: float = 1e-8, rank_tol: float = 1e-9, seed: int = 0) -> Equivalence | None:
    """Unitaries omega, omega_u with omega (P, U) = (P', U') omega and omega_u W_i = W_i' omega_u."""
    if t.fiber_dim != t2.fiber_dim or t.ku_dim != t2.ku_dim:
        return None
    if not t.q.close_to(t2.q, 1e-12):
        return None
    a, b = as_bcl1(t), as_bcl1(t2)
    rng = np.random.default_rng(seed)
    om, r1 = _unitary_intertwiner([(_c(a.P), _c(b.P)), (_c(a.U), _c(b.U))], a.fiber_dim, rng, rank_tol, tol)
    if om is None:
        return None
    omu, r2 = _unitary_intertwiner([(_c(a.W1), _c(b.W1)), (_c(a.W2), _c(b.W2))], a.ku_dim, rng, rank_tol, tol)
    if omu is None:
        return None
    return Equivalence(om, omu, max(r1, r2))


def offdiagonal_blocks(W: np.ndarray, W2: np.ndarray, fiber_dim: int, N: int, rank_tol: float = 1e-9) -> tuple[int, int]:
    """Dimensions of the solution spaces of X W = S X and Y S* = W2* Y on the truncated window.

    S is the truncated shift on H^2_N (x) F.  Both must be zero: an
    intertwiner between two models cannot mix the shift and unitary parts.
    """
    S = np.kron(np.eye(N, k=-1), np.eye(fiber_dim))
    k, k2, n = W.shape[0], W2.shape[0], N * fiber_dim
    if n == 0:
        return 0, 0
    dim12 = _intertwiner_space([(W, S)], k, n, rank_tol).shape[1] if k else 0
    dim21 = _intertwiner_space([(S.conj().T, W2.conj().T)], n, k2, rank_tol).shape[1] if k2 else 0
    return dim12, dim21


def model_matrices(t: BCLTuple, N: int) -> tuple[TruncatedMatrix, TruncatedMatrix]:
    V1, V2 = build_model(t)
    w = TruncationWindow(N, 1)
    return densify(V1, w), densify(V2, w)


# -- Weyl pairs -----------------------------------------------------------------------------------------


def weyl_pair(q: Phase, r: int, exact: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Clock C = diag(q^k) and cyclic shift S on C^r with C S = q S C (needs q^r = 1)."""
    if q.exact:
        if r % q.order:
            raise InvalidTuple(f"q of order {q.order} has no Weyl pair on C^{r}")
    elif abs(q.value**r - 1) > 1e-12:
        raise InvalidTuple("q^r must be 1")
    if exact and q.exact:
        C = ex.diag([Cyclo.root(q.turn * k) for k in range(r)])
        S = ex.zeros(r)
        for k in range(r):
            S[(k + 1) % r, k] = Cyclo.rational(1)
        return C, S
    C = np.diag([q.value**k for k in range(r)])
    S = np.roll(np.eye(r), 1, axis=0).astype(complex)
    return C, S


def ku_only_pair(W1, W2) -> tuple[LazyOperator, LazyOperator]:
    k = W1.shape[0]
    sig = SpaceSignature(0, 0, k)
    return ku_map(sig, W1), ku_map(sig, W2)
