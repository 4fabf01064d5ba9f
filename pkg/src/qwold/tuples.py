"""q-commutative d-tuples of isometries: complements, the Delta_i maps,
per-index BCL data on a shared fiber, and unitary extensions on a bilateral
window."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import exact as ex
from .bcl import BCL1, BCLTuple, _c, _H, _mm, extract_bcl1, tau_matrix, _model_dense
from .core import Phase, QMatrix, TruncationWindow, qi_product
from .cyclotomic import Cyclo, is_exact
from .opalg import LazyOperator, SpaceSignature, TruncatedMatrix, apply, basis_vector, densify, equal_on_window, exact_identity, scale
from .report import FAIL, PASS, Check
from .wold import RANK_TOL, TOL, coverage_residual, defect, ku_projection, orth


class TupleError(ValueError):
    pass


def _check_index(d: int, i: int) -> None:
    if not 1 <= i <= d:
        raise IndexError(f"index {i} out of range 1..{d}")


def v_complement(ops: list, i: int):
    """V_1 ... V_{i-1} V_{i+1} ... V_d in ascending order (lazy or dense)."""
    d = len(ops)
    if d < 2:
        raise TupleError("complements need d >= 2")
    _check_index(d, i)
    rest = [V for j, V in enumerate(ops, 1) if j != i]
    out = rest[0]
    for V in rest[1:]:
        out = out @ V
    return out


def complement_check(ops: list[LazyOperator], Q: QMatrix, i: int, window: TruncationWindow | int, tol: float = 0.0) -> Check:
    """V_i V_(i) = q_i V_(i) V_i, compared exactly on the window."""
    Vi, Vc = ops[i - 1], v_complement(ops, i)
    qi = qi_product(Q, i)
    return equal_on_window(Vi @ Vc, scale(qi, Vc @ Vi), window, tol, f"complement_relation_{i}")


def relation_checks(ops: list[LazyOperator], Q: QMatrix, window: TruncationWindow | int, tol: float = 0.0) -> list[Check]:
    out = []
    for i in range(1, len(ops) + 1):
        for j in range(i + 1, len(ops) + 1):
            out.append(equal_on_window(ops[i - 1] @ ops[j - 1], scale(Q(i, j), ops[j - 1] @ ops[i - 1]), window, tol, f"q_commutation_{i}_{j}"))
    return out


def tuple_caps(Vs: list[TruncatedMatrix]) -> tuple[int, int]:
    bands = [V.window.band for V in Vs]
    cap = Vs[0].window.N - sum(bands)
    return cap, cap - max(bands)


def _product_adjoint(Vs, ks) -> np.ndarray:
    n = Vs[0].matrix.shape[0]
    out = np.eye(n, dtype=complex)
    for k in ks:
        out = out @ Vs[k - 1].matrix.conj().T
    return out


# -- Delta_i -------------------------------------------------------------------------------


@dataclass
class DeltaMap:
    index: int
    matrix: np.ndarray
    domain_basis: np.ndarray
    codomain_bases: dict
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def delta_i(Vs: list[TruncatedMatrix], i: int, tol: float = TOL, rank_tol: float = RANK_TOL, samples: int = 200, seed: int = 0) -> DeltaMap:
    """Delta_i h = (+)_{j != i} D_{V_j*} (prod_{k > j, k != i} V_k*) h on D_{V_(i)*}."""
    d = len(Vs)
    _check_index(d, i)
    cap, low = tuple_caps(Vs)
    if low < 1:
        raise TupleError("window too small for the tuple's band")
    Vc = v_complement(Vs, i)
    dc = defect(Vc, rank_tol, cap)
    others = [j for j in range(1, d + 1) if j != i]
    defects = {j: defect(Vs[j - 1], rank_tol, cap) for j in others}
    maps = {}
    for j in others:
        tail = [k for k in range(j + 1, d + 1) if k != i]
        maps[j] = defects[j].basis.conj().T @ defects[j].projection @ _product_adjoint(Vs, tail)
    E = dc.basis
    Dm = np.vstack([maps[j] @ E for j in others]) if others else np.zeros((0, E.shape[1]))
    n = E.shape[1]
    checks = [Check.from_residual(f"delta_{i}_isometry", float(np.abs(Dm.conj().T @ Dm - np.eye(n)).max()) if n else 0.0, tol)]
    lidx = np.flatnonzero(Vc.safe_mask(low))
    sizes = [defects[j].basis.shape[1] for j in others]
    blocks = []
    for a, j in enumerate(others):
        row = [np.zeros((sizes[a], lidx.size)) for _ in others]
        row[a] = defects[j].basis.conj().T @ defects[j].projection[:, lidx]
        blocks.append(np.hstack(row))
    target = np.vstack(blocks) if blocks else np.zeros((0, 0))
    checks.append(Check.from_residual(f"delta_{i}_coverage", coverage_residual(target, Dm, rank_tol) if target.size else 0.0, tol))
    # telescoping: sum_j |D_{V_j*} prod V_k* h|^2 = |D_{V_(i)*} h|^2
    idx = np.flatnonzero(Vc.safe_mask(cap))
    rng = np.random.default_rng(seed)
    H = np.zeros((Vc.matrix.shape[0], samples), dtype=complex)
    H[idx] = rng.standard_normal((idx.size, samples)) + 1j * rng.standard_normal((idx.size, samples))
    lhs = sum(np.linalg.norm(defects[j].projection @ _product_adjoint(Vs, [k for k in range(j + 1, d + 1) if k != i]) @ H, axis=0) ** 2 for j in others)
    rhs = np.linalg.norm(dc.projection @ H, axis=0) ** 2
    scale_ = np.maximum(1.0, np.linalg.norm(H, axis=0) ** 2)
    checks.append(Check.from_residual(f"delta_{i}_telescoping", float(np.max(np.abs(lhs - rhs) / scale_)), tol))
    return DeltaMap(i, Dm, E, {j: defects[j].basis for j in others}, checks)


# -- tuple models -------------------------------------------------------------------------------


@dataclass
class TupleModel:
    """Per-index BCL data on the shared fiber F = D_{V_1*} (+) ... (+) D_{V_d*}.

    ``per_index`` holds the data read off the pair (V_i, V_(i)) and rebased
    through Delta_i; each entry models V_i through its own wave map.
    ``coherent`` (when present) models every V_i through the single wave map
    of V = V_1 ... V_d, which is what the unitary extension uses.
    """

    d: int
    Q: QMatrix
    per_index: list
    W: list
    fiber_dims: list
    coherent: list | None = None
    checks: list = field(default_factory=list)
    full_fiber: bool = True

    @property
    def fiber_dim(self) -> int:
        return sum(self.fiber_dims)

    @property
    def ku_dim(self) -> int:
        return self.W[0].shape[0] if self.W else 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def w_relation_residual(self) -> float:
        r = 0.0
        for i in range(1, self.d + 1):
            for j in range(1, self.d + 1):
                A, B = _c(self.W[i - 1]), _c(self.W[j - 1])
                if A.size:
                    r = max(r, float(np.abs(A @ B - self.Q(i, j).value * B @ A).max()))
        return r

    def to_json(self) -> dict:
        out = {
            "d": self.d,
            "Q": self.Q.to_json(),
            "fiberDims": list(self.fiber_dims),
            "fullFiber": self.full_fiber,
            "perIndex": [t.to_json() for t in self.per_index],
        }
        if self.coherent is not None:
            out["coherent"] = [t.to_json() for t in self.coherent]
        out["checks"] = [c.to_json() for c in sorted(self.checks, key=lambda c: c.name)]
        return out


def _theta(i: int, d: int, sizes: dict, Dm: np.ndarray) -> np.ndarray:
    """F_i = D_{V_i*} (+) D_{V_(i)*} into the shared F, slot order 1..d."""
    offs, o = {}, 0
    for j in range(1, d + 1):
        offs[j] = o
        o += sizes[j]
    m_i = sizes[i]
    T = np.zeros((o, m_i + Dm.shape[1]), dtype=complex)
    T[offs[i] : offs[i] + m_i, :m_i] = np.eye(m_i)
    r = 0
    for j in range(1, d + 1):
        if j == i:
            continue
        T[offs[j] : offs[j] + sizes[j], m_i:] = Dm[r : r + sizes[j]]
        r += sizes[j]
    return T


def fiber_map(Vs: list[TruncatedMatrix], bases: dict) -> np.ndarray:
    """G h = (+)_j D_{V_j*} V_{j-1}* ... V_1* h in the shared-fiber coordinates."""
    rows = []
    for j in range(1, len(Vs) + 1):
        E = bases[j]
        D = np.eye(E.shape[0]) - Vs[j - 1].matrix @ Vs[j - 1].matrix.conj().T
        rows.append(E.conj().T @ D @ _product_adjoint(Vs, range(j - 1, 0, -1)))
    return np.vstack(rows)


def _coherent(Vs, Q, G, K, V, Ws, idx, lidx, N, rank_tol, tol):
    """Model of each V_i through the wave map of V with fiber map G."""
    Vh = V.matrix.conj().T
    out, checks = [], []
    m = G.shape[0]
    Bw = G[:, idx]
    T = tau_matrix(V, G, K, N)
    rows = np.r_[np.arange((N - 1) * m), np.arange(N * m, N * m + K.shape[1])]
    for i in range(1, len(Vs) + 1):
        qi = qi_product(Q, i)
        Vi = Vs[i - 1].matrix
        upper = G @ Vh @ Vi - qi.value * G @ Vi @ Vh
        A = G @ Vi + upper
        Aw = A[:, idx]
        if m:
            X, _, Yh = np.linalg.svd(Aw @ Bw.conj().T)
            U = X @ Yh
            R = orth(upper[:, idx], rank_tol)
            P = R @ R.conj().T
        else:
            U = P = np.zeros((0, 0), dtype=complex)
        t = BCLTuple(qi, P, U, Ws[i - 1], Ws[i - 1], BCL1)
        M1, _ = _model_dense(t, N)
        res = (T @ Vi - M1 @ T)[np.ix_(rows, lidx)]
        checks.append(Check.from_residual(f"coherent_fit_{i}", float(np.abs(U @ Bw - Aw).max()) if m else 0.0, tol))
        checks.append(Check.from_residual(f"coherent_intertwines_{i}", float(np.abs(res).max()) if res.size else 0.0, tol))
        out.append(t)
    return out, checks


def extract_tuple_bcl(ops: list, Q: QMatrix, window: TruncationWindow | int | None = None, tol: float = TOL, rank_tol: float = RANK_TOL, check_tol: float = 1e-8) -> TupleModel:
    """Per-index pair extraction of (V_i, V_(i)) with phase q_i, rebased onto the shared fiber."""
    d = len(ops)
    if Q.d != d:
        raise TupleError("QMatrix size does not match the tuple")
    if d < 2:
        raise TupleError("tuple extraction needs d >= 2")
    lazy = isinstance(ops[0], LazyOperator)
    checks = []
    if lazy:
        if window is None:
            raise TupleError("a window is needed for lazy operators")
        w = window if isinstance(window, TruncationWindow) else TruncationWindow(int(window), 1)
        ctol = 0.0 if all(V.exact for V in ops) else check_tol
        for i in range(1, d + 1):
            checks.append(complement_check(ops, Q, i, w, ctol))
        Vs = [densify(V, w) for V in ops]
    else:
        Vs = list(ops)
    cap, low = tuple_caps(Vs)
    if low < 1:
        raise TupleError("window too small for the tuple's band")
    N = Vs[0].window.N
    bases = {j: defect(Vs[j - 1], rank_tol, cap).basis for j in range(1, d + 1)}
    sizes = {j: bases[j].shape[1] for j in bases}
    V = Vs[0]
    for X in Vs[1:]:
        V = V @ X
    ku = ku_projection(V, None, tol, cap)
    K = ku.basis
    checks.append(ku.check(tol))
    Ws = [K.conj().T @ X.matrix @ K for X in Vs]
    per, full = [], True
    for i in range(1, d + 1):
        qi = qi_product(Q, i)
        Vc = v_complement(Vs, i)
        e = extract_bcl1(Vs[i - 1], Vc, qi, tol, rank_tol, check_tol)
        full = full and e.full_fiber
        for c in e.checks:
            c.name = f"index_{i}_{c.name}"
        checks += e.checks
        dm = delta_i(Vs, i, tol, rank_tol)
        checks += dm.checks
        # K_u of the pair (V_i, V_(i)) against K_u of V
        kp = ku_projection(Vs[i - 1] @ Vc, None, tol, cap)
        dist = float(np.abs(kp.projection - ku.projection).max()) if kp.projection.size else 0.0
        checks.append(Check.from_residual(f"ku_coincidence_{i}", dist, tol))
        T = _theta(i, d, sizes, dm.matrix)
        P = T @ _c(e.tuple.P) @ T.conj().T
        U = T @ _c(e.tuple.U) @ T.conj().T
        per.append(BCLTuple(qi, P, U, Ws[i - 1], Ws[i - 1], BCL1))
    model = TupleModel(d, Q, per, Ws, [sizes[j] for j in range(1, d + 1)], None, checks, full)
    if K.shape[1]:
        checks.append(Check.from_residual("w_relations", model.w_relation_residual(), check_tol))
    if full:
        G = fiber_map(Vs, bases)
        idx = np.flatnonzero(V.safe_mask(cap))
        lidx = np.flatnonzero(V.safe_mask(low))
        model.coherent, cc = _coherent(Vs, Q, G, K, V, Ws, idx, lidx, N, rank_tol, check_tol)
        checks += cc
    return model


# -- exact models from pair data ------------------------------------------------------------------


def _eye(A):
    return exact_identity(A.shape[0]) if A.dtype == object else np.eye(A.shape[0], dtype=complex)


def _phase_scalar(q: Phase, exact: bool):
    return q.scalar() if exact else q.value


def tuple_model_from_pair(t: BCLTuple) -> TupleModel:
    """The BCL-1 pair model as a 2-tuple model on one common fiber.

    Index 1 is (q, P, U).  Index 2 is (conj q, U* P-perp U, U* (P + conj(q) P-perp)):
    R_qbar M_z = conj(q) M_z R_qbar moves the phase into the unitary.
    """
    if t.flavor != BCL1:
        raise TupleError("expected a BCL-1 tuple")
    q, qb = t.q, t.q.conj()
    P, U = t.P, t.U
    exact = P.dtype == object and q.exact
    if P.size:
        I = _eye(P)
        Pp = I - P
        Uh = _H(U)
        c = _phase_scalar(qb, exact)
        P2 = _mm(_mm(Uh, Pp), U)
        if exact:
            cPp = np.array([[c * x for x in row] for row in Pp], dtype=object)
        else:
            cPp = c * _c(Pp)
        U2 = _mm(Uh, P + cPp)
    else:
        P2, U2 = P, U
    Q = QMatrix.pair(q)
    first = BCLTuple(q, P, U, t.W1, t.W1, BCL1)
    second = BCLTuple(qb, P2, U2, t.W2, t.W2, BCL1)
    return TupleModel(2, Q, [first, second], [t.W1, t.W2], [t.fiber_dim], [first, second])


def tuple_model_from_unitaries(Ws: list, Q: QMatrix) -> TupleModel:
    """A tuple of q-commuting unitaries: F = 0, everything lives on K_u."""
    empty = np.zeros((0, 0), dtype=complex)
    per = [BCLTuple(qi_product(Q, i), empty, empty, W, W, BCL1) for i, W in enumerate(Ws, 1)]
    return TupleModel(len(Ws), Q, per, list(Ws), [0] * len(Ws), per)


def model_operators(model: TupleModel, coherent: bool = True) -> list[LazyOperator]:
    """X_i = R_{q_i} (x) P_i-perp U_i + M_z R_{q_i} (x) P_i U_i (+) W_i."""
    data = model.coherent if coherent else model.per_index
    if data is None:
        raise TupleError("the model has no coherent data (truncated fiber)")
    m, k = data[0].fiber_dim, data[0].ku_dim
    sig = SpaceSignature(1 if m else 0, m, k)
    out = []
    for t in data:
        hardy = []
        if m:
            Pp = _eye(t.P) - t.P
            R = ("R", t.q)
            hardy = [(1, (R,), _mm(Pp, t.U)), (1, (("S", 1), R), _mm(t.P, t.U))]
        out.append(LazyOperator(sig, hardy, [(1, t.W1)] if k else []))
    return out


# -- bilateral extension --------------------------------------------------------------------------


@dataclass(frozen=True)
class BilateralWindow:
    """Laurent monomials zeta^k with -M <= k < N."""

    M: int
    N: int

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("bilateral window needs M, N >= 1")

    @property
    def degrees(self) -> range:
        return range(-self.M, self.N)


@dataclass
class BilateralOperator:
    window: BilateralWindow
    fiber_dim: int
    ku_dim: int
    matrix: np.ndarray
    band: int = 1

    @property
    def exact(self) -> bool:
        return self.matrix.dtype == object

    def index(self, k: int, e: int = 0) -> int:
        return (k + self.window.M) * self.fiber_dim + e

    def ku_index(self, j: int) -> int:
        return (self.window.M + self.window.N) * self.fiber_dim + j

    def __matmul__(self, other: "BilateralOperator") -> "BilateralOperator":
        return BilateralOperator(self.window, self.fiber_dim, self.ku_dim, _dot(self.matrix, other.matrix), self.band + other.band)

    def H(self) -> "BilateralOperator":
        A = ex.ctranspose(self.matrix) if self.exact else self.matrix.conj().T
        return BilateralOperator(self.window, self.fiber_dim, self.ku_dim, A, self.band)

    def interior(self, up: int, down: int = 0) -> np.ndarray:
        """Column indices whose images stay inside the window."""
        cols = [self.index(k, e) for k in self.window.degrees if k - down >= -self.window.M and k + up < self.window.N for e in range(self.fiber_dim)]
        cols += [self.ku_index(j) for j in range(self.ku_dim)]
        return np.array(cols, dtype=int)

    def to_json(self) -> dict:
        M = _c(self.matrix)
        return {
            "range": [-self.window.M, self.window.N],
            "fiberDim": self.fiber_dim,
            "kuDim": self.ku_dim,
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in M],
        }


def _deviation(A) -> float:
    """Max entry size; exactly 0.0 when every exact entry vanishes."""
    if A.size == 0:
        return 0.0
    if A.dtype == object:
        if all((x.is_zero() if isinstance(x, Cyclo) else x == 0) for x in A.flat):
            return 0.0
        return float(max(abs(complex(x)) for x in A.flat))
    return float(np.abs(A).max())


def _dot(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix product; for cyclotomic object arrays only the nonzero entries are multiplied."""
    if A.dtype != object or B.dtype != object:
        return np.dot(A, B)
    nzA = [[(r, A[r, k]) for r in range(A.shape[0]) if not A[r, k].is_zero()] for k in range(A.shape[1])]
    out = ex.zeros(A.shape[0], B.shape[1])
    for j in range(B.shape[1]):
        for k in range(B.shape[0]):
            b = B[k, j]
            if b.is_zero():
                continue
            for r, a in nzA[k]:
                out[r, j] = out[r, j] + a * b
    return out


def _zeros(n: int, exact: bool) -> np.ndarray:
    return ex.zeros(n) if exact else np.zeros((n, n), dtype=complex)


def _entry(x, exact: bool):
    if exact:
        return x if isinstance(x, Cyclo) else Cyclo.rational(x)
    return complex(x)


def _model_is_exact(data: list) -> bool:
    return all(t.q.exact and all(A.size == 0 or A.dtype == object for A in (t.P, t.U, t.W1)) for t in data)


def bilateral_operator(t: BCLTuple, window: BilateralWindow, exact: bool) -> BilateralOperator:
    """R_q (x) P-perp U + M_zeta R_q (x) P U (+) W on the bilateral window."""
    m, k = t.fiber_dim, t.ku_dim
    size = (window.M + window.N) * m + k
    Y = _zeros(size, exact)
    op = BilateralOperator(window, m, k, Y)
    if m:
        P, U = (t.P, t.U) if exact else (_c(t.P), _c(t.U))
        Pp = _eye(P) - P
        a, b = _mm(Pp, U), _mm(P, U)
        for n in window.degrees:
            ph = Cyclo.root(t.q.turn * n) if exact else t.q.value**n
            for r in range(m):
                for s in range(m):
                    Y[op.index(n, r), op.index(n, s)] = _entry(ph * a[r, s], exact)
                    if n + 1 < window.N:
                        Y[op.index(n + 1, r), op.index(n, s)] = _entry(ph * b[r, s], exact)
    if k:
        W = t.W1 if exact else _c(t.W1)
        base = op.ku_index(0)
        for r in range(k):
            for s in range(k):
                Y[base + r, base + s] = _entry(W[r, s], exact)
    return op


@dataclass
class Extension:
    operators: list
    window: BilateralWindow
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _embedded_columns(op: BilateralOperator, N: int) -> list[int]:
    cols = [op.index(n, e) for n in range(N) for e in range(op.fiber_dim)]
    return cols + [op.ku_index(j) for j in range(op.ku_dim)]


def extend_to_unitaries(model: TupleModel, window: BilateralWindow, tol: float = TOL) -> Extension:
    """Unitary extensions Y_i with M_zeta the bilateral shift, and the checks that certify them."""
    data = model.coherent
    if data is None:
        raise TupleError("the model has no coherent data (truncated fiber)")
    d = model.d
    if window.N <= d:
        raise TupleError(f"bilateral window N = {window.N} too small for a product of {d} banded factors")
    exact = _model_is_exact(data)
    Ys = [bilateral_operator(t, window, exact) for t in data]
    checks = []
    m, k = model.fiber_dim, model.ku_dim
    # restriction to the embedded Hardy window equals the model, exactly
    Xs = model_operators(model)
    for i, (Y, X) in enumerate(zip(Ys, Xs), 1):
        dev = 0.0
        for n in range(window.N - 1):
            for e in range(m):
                img = apply(X, basis_vector(("h", (n,), e)))
                dev = max(dev, _column_deviation(Y, Y.index(n, e), img, window.N))
        for j in range(k):
            img = apply(X, basis_vector(("u", j)))
            dev = max(dev, _column_deviation(Y, Y.ku_index(j), img, window.N))
        checks.append(Check.from_residual(f"extension_restriction_{i}", dev, tol if not exact else 0.0))
    # unitarity on the interior
    for i, Y in enumerate(Ys, 1):
        cols = Y.interior(1, 1)
        G1 = _dot(Y.H().matrix, Y.matrix)[:, cols]
        G2 = _dot(Y.matrix, Y.H().matrix)[:, cols]
        I = _zeros(Y.matrix.shape[0], exact)
        for c in range(I.shape[0]):
            I[c, c] = _entry(1, exact)
        r = max(_deviation(G1 - I[:, cols]), _deviation(G2 - I[:, cols]))
        checks.append(Check.from_residual(f"extension_unitary_{i}", r, tol))
    # q-commutation on the interior
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            A, B = Ys[i - 1], Ys[j - 1]
            cols = A.interior(2)
            ph = model.Q(i, j).scalar() if exact else model.Q(i, j).value
            AB, BA = _dot(A.matrix, B.matrix)[:, cols], _dot(B.matrix, A.matrix)[:, cols]
            R = AB - np.array([[ph * x for x in row] for row in BA], dtype=object) if exact else AB - ph * BA
            checks.append(Check.from_residual(f"extension_q_commutation_{i}_{j}", _deviation(R), tol))
    # the product is the bilateral shift (+) W_1 ... W_d
    Yp = Ys[0]
    for Y in Ys[1:]:
        Yp = Yp @ Y
    cols = Yp.interior(d)
    target = _zeros(Yp.matrix.shape[0], exact)
    for n in window.degrees:
        if n + 1 < window.N:
            for e in range(m):
                target[Yp.index(n + 1, e), Yp.index(n, e)] = _entry(1, exact)
    if k:
        Wp = model.W[0] if exact else _c(model.W[0])
        for W in model.W[1:]:
            Wp = np.dot(Wp, W if exact else _c(W))
        base = Yp.ku_index(0)
        target[base:, base:] = Wp
    checks.append(Check.from_residual("extension_product_is_bilateral_shift", _deviation((Yp.matrix - target)[:, cols]), tol))
    # minimality: backward orbits of the embedded Hardy window fill the bilateral window
    Ystar = _c(Yp.H().matrix)
    emb = _embedded_columns(Yp, window.N)
    cur = np.eye(Ystar.shape[0], dtype=complex)[:, emb]
    vecs = [cur]
    for _ in range(window.M):
        cur = Ystar @ cur
        vecs.append(cur)
    span = np.hstack(vecs)
    checks.append(Check.from_residual("extension_minimality", coverage_residual(np.eye(Ystar.shape[0]), span, RANK_TOL), max(tol, 1e-10)))
    return Extension(Ys, window, checks)


def _column_deviation(Y: BilateralOperator, col: int, img: dict, N: int) -> float:
    """Distance between column ``col`` of Y and the Hardy-window vector ``img``."""
    expected = {}
    for key, val in img.items():
        if key[0] == "h":
            if key[1][0] >= N:
                continue
            expected[Y.index(key[1][0], key[2])] = val
        else:
            expected[Y.ku_index(key[1])] = val
    dev = 0.0
    colv = Y.matrix[:, col]
    for r in range(colv.shape[0]):
        diff = colv[r] - expected.get(r, 0)
        if isinstance(diff, Cyclo):
            if not diff.is_zero():
                dev = max(dev, abs(complex(diff)))
        elif is_exact(diff):
            dev = max(dev, abs(float(diff)))
        else:
            dev = max(dev, abs(complex(diff)))
    return dev


__all__ = [
    "BilateralOperator",
    "BilateralWindow",
    "DeltaMap",
    "Extension",
    "TupleError",
    "TupleModel",
    "bilateral_operator",
    "complement_check",
    "delta_i",
    "extend_to_unitaries",
    "extract_tuple_bcl",
    "fiber_map",
    "model_operators",
    "relation_checks",
    "tuple_caps",
    "tuple_model_from_pair",
    "tuple_model_from_unitaries",
    "v_complement",
]
