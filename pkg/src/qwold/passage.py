"""The r_q passage between commutative and q-commutative pairs, doubly-q tests,
and the normal form of doubly q-commutative shift pairs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bcl import BCL1, BCLTuple, _c, _column_maps
from .core import Phase, TruncationWindow, monomial_text, monomials, total_degree
from .opalg import LazyOperator, SpaceSignature, TruncatedMatrix, adjoint, identity, key_degree, key_text, scale
from .report import FAIL, INCONCLUSIVE, PASS, Check
from .wold import RANK_TOL, TOL, defect, ku_projection, measured_band, pair_caps

COMM2Q, Q2COMM = "COMM->Q", "Q->COMM"


class HypothesisFailure(ValueError):
    pass


def _safe_idx(T: TruncatedMatrix, cap: int) -> np.ndarray:
    return np.flatnonzero(T.safe_mask(cap))


def _like(T: TruncatedMatrix, M: np.ndarray, band: int) -> TruncatedMatrix:
    return TruncatedMatrix(T.signature, TruncationWindow(T.window.N, band), T.basis, M)


# -- r_q --------------------------------------------------------------------------------------


def rq_operator(V1: TruncatedMatrix, V2: TruncatedMatrix, q: Phase, tol: float = TOL) -> TruncatedMatrix:
    """sum_n q^n V^n D_{V*} V*^n for V = V1 V2, n = 0..N."""
    V = V1 @ V2
    cap = V.window.safe_cap
    ku = ku_projection(V, None, tol, cap)
    if ku.basis.shape[1]:
        raise HypothesisFailure(f"V1 V2 is not a shift: unitary part of dimension {ku.basis.shape[1]}")
    M = V.matrix
    D = np.eye(M.shape[0]) - M @ M.conj().T
    out = np.zeros_like(M, dtype=complex)
    left = np.eye(M.shape[0], dtype=complex)
    qv = q.value
    for n in range(V.window.N + 1):
        out += qv**n * (left @ D @ left.conj().T)
        left = left @ M
    R = TruncatedMatrix(V.signature, TruncationWindow(V.window.N, 0), V.basis, out)
    R.window = TruncationWindow(V.window.N, measured_band(R))
    return R


def rq_lazy(V1: LazyOperator, V2: LazyOperator, q: Phase, n_terms: int) -> LazyOperator:
    """Exact lazy r_q truncated after n_terms terms (exact on degrees < n_terms for graded shifts)."""
    V = V1 @ V2
    Vs = adjoint(V)
    I = identity(V.signature)
    D = I - V @ Vs
    out = scale(0, I)
    left, right = I, I
    for n in range(n_terms):
        out = out + scale(q**n, left @ D @ right)
        left, right = left @ V, right @ Vs
    return out


def unitary_check(R: TruncatedMatrix, cap: int, tol: float, name: str = "rq_unitary") -> Check:
    idx = _safe_idx(R, cap)
    M = R.matrix[:, idx]
    G = M.conj().T @ M - np.eye(idx.size)
    G2 = R.matrix[np.ix_(idx, idx)] @ R.matrix[np.ix_(idx, idx)].conj().T - np.eye(idx.size)
    return Check.from_residual(name, float(max(np.abs(G).max(), np.abs(G2).max())) if idx.size else 0.0, tol)


def relation_check(A: TruncatedMatrix, B: TruncatedMatrix, phase: Phase, tol: float, name: str, cap: int | None = None) -> Check:
    """A B = phase * B A on the safe window; witness is the first failing basis vector."""
    cap = A.window.N - A.window.band - B.window.band if cap is None else cap
    idx = _safe_idx(A, cap)
    if idx.size == 0:
        return Check(name, float("nan"), tol, INCONCLUSIVE, "empty safe window")
    R = (A.matrix @ B.matrix - phase.value * B.matrix @ A.matrix)[:, idx]
    col = np.abs(R).max(axis=0)
    bad = np.flatnonzero(col > tol)
    w = key_text(A.basis[idx[bad[0]]], A.signature.fiber_dim) if bad.size else None
    return Check(name, float(col.max()), tol, FAIL if bad.size else PASS, w)


@dataclass
class PassageCertificate:
    rq: TruncatedMatrix
    direction: str
    pair: tuple
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"direction": self.direction, "residuals": {c.name: c.residual for c in self.checks}, "verdicts": {c.name: c.verdict for c in self.checks}}


def _mul(*Ts: TruncatedMatrix) -> TruncatedMatrix:
    out = Ts[0]
    for T in Ts[1:]:
        out = out @ T
    return out


def to_q_commutative(V1: TruncatedMatrix, V2: TruncatedMatrix, q: Phase, tol: float = TOL) -> PassageCertificate:
    """(V1, V2) commutative -> (V1 r_q, r_{conj q} V2) q-commutative."""
    return _passage(V1, V2, q, tol, COMM2Q)


def from_q_commutative(V1: TruncatedMatrix, V2: TruncatedMatrix, q: Phase, tol: float = TOL) -> PassageCertificate:
    """(V1, V2) q-commutative -> (V1 r_{conj q}, r_q V2) commutative."""
    return _passage(V1, V2, q, tol, Q2COMM)


def _passage(V1, V2, q: Phase, tol: float, direction: str) -> PassageCertificate:
    rq = rq_operator(V1, V2, q, tol)
    rqb = rq_operator(V1, V2, q.conj(), tol)
    cap = V1.window.N - V1.window.band - V2.window.band
    checks = [unitary_check(rq, cap, tol)]
    if direction == COMM2Q:
        checks.append(relation_check(V1, V2, Phase.one(), tol, "input_commutative"))
        W1, W2 = V1 @ rq, rqb @ V2
        out_phase = q
    else:
        checks.append(relation_check(V1, V2, q, tol, "input_q_commutative"))
        W1, W2 = V1 @ rqb, rq @ V2
        out_phase = Phase.one()
    checks.append(relation_check(W1, W2, out_phase, tol, "output_relation"))
    V = V1 @ V2
    checks.append(relation_check(rq, V, q, tol, "rq_intertwines_v"))
    return PassageCertificate(rq, direction, (W1, W2), checks)


def round_trip(V1: TruncatedMatrix, V2: TruncatedMatrix, q: Phase, tol: float = TOL) -> Check:
    """to_q_commutative followed by from_q_commutative returns the input pair."""
    c1 = to_q_commutative(V1, V2, q, tol)
    W1, W2 = c1.pair
    c2 = from_q_commutative(W1, W2, q, tol)
    X1, X2 = c2.pair
    cap = X1.window.N - X1.window.band - X2.window.band
    idx = _safe_idx(V1, cap)
    r = max(float(np.abs((X1.matrix - V1.matrix)[:, idx]).max()), float(np.abs((X2.matrix - V2.matrix)[:, idx]).max())) if idx.size else 0.0
    return Check.from_residual("passage_round_trip", r, tol)


def abstract_passage_check(V1: TruncatedMatrix, V2: TruncatedMatrix, r: TruncatedMatrix, q: Phase, tol: float = TOL) -> list[Check]:
    """Commutativity of (V1, V2) agrees with q-commutativity of (V1 r, r* V2), given r V = q V r."""
    V = V1 @ V2
    cap = V.window.N - V.window.band - max(r.window.band, 0)
    hyp = relation_check(r, V, q, tol, "abstract_hypothesis", cap)
    hyp_u = unitary_check(r, cap, tol, "abstract_unitary")
    if not (hyp.passed and hyp_u.passed):
        return [hyp, hyp_u]
    comm = relation_check(V1, V2, Phase.one(), tol, "pair_commutative")
    W1, W2 = V1 @ r, r.H @ V2
    qc = relation_check(W1, W2, q, tol, "transformed_q_commutative")
    agree = Check.from_bool("abstract_biconditional", comm.passed == qc.passed, None if comm.passed == qc.passed else "verdicts differ")
    return [hyp, hyp_u, agree, comm, qc]


# -- doubly q-commutativity -----------------------------------------------------------------------


def doubly_window_check(V1: TruncatedMatrix, V2: TruncatedMatrix, q: Phase, tol: float = TOL) -> Check:
    """V2 V1* = q V1* V2 on the safe window."""
    cap = V1.window.N - max(V1.window.band, V2.window.band)
    idx = _safe_idx(V1, cap)
    A1h = V1.matrix.conj().T
    R = (V2.matrix @ A1h - q.value * A1h @ V2.matrix)[:, idx]
    col = np.abs(R).max(axis=0) if idx.size else np.zeros(0)
    bad = np.flatnonzero(col > tol)
    w = key_text(V1.basis[idx[bad[0]]], V1.signature.fiber_dim) if bad.size else None
    return Check("doubly_q_direct", float(col.max()) if col.size else 0.0, tol, FAIL if bad.size else PASS, w)


def pup_perp(t: BCLTuple) -> float:
    P, U = _c(t.P), _c(t.U)
    if P.size == 0:
        return 0.0
    Pp = np.eye(P.shape[0]) - P
    if t.flavor == BCL1:
        return float(np.linalg.norm(P @ U @ Pp, 2))
    return float(np.linalg.norm(Pp @ U @ P, 2))


def doubly_tuple_check(t: BCLTuple, tol: float = TOL) -> Check:
    name = "doubly_q_pup_perp" if t.flavor == BCL1 else "doubly_q_pdag_perp_udag_pdag"
    return Check.from_residual(name, pup_perp(t), tol)


def pup_perp_window(V1: TruncatedMatrix, V2: TruncatedMatrix, rank_tol: float = RANK_TOL) -> float:
    """Norm of P U P-perp on the part of F reached from the window.

    U sends (D1; D2 V1*) h to (D1 V2*; D2) h.  Vectors of P-perp F come from
    h with D1 h = 0, and P U on them is the top entry D1 V2* h.
    """
    cap, _ = pair_caps(V1, V2)
    d1, d2 = defect(V1, rank_tol, cap), defect(V2, rank_tol, cap)
    B, A = _column_maps(V1, V2, d1.basis, d2.basis, d1.projection, d2.projection)
    idx = _safe_idx(V1, cap)
    m1 = d1.basis.shape[1]
    Bw, Aw = B[:, idx], A[:, idx]
    N0 = scipy.linalg.null_space(Bw[:m1], rcond=rank_tol) if m1 else np.eye(idx.size)
    if N0.shape[1] == 0:
        return 0.0
    G = Bw @ N0
    Y, s, Zh = np.linalg.svd(G, full_matrices=False)
    keep = s > rank_tol
    if not keep.any():
        return 0.0
    X = Aw[:m1] @ N0 @ Zh[keep].conj().T @ np.diag(1 / s[keep])
    return float(np.linalg.norm(X, 2)) if X.size else 0.0


@dataclass
class DoublyVerdict:
    doubly: bool
    witness: str | None
    checks: list

    @property
    def agree(self) -> bool:
        v = [c.passed for c in self.checks if c.name.startswith("doubly_q")]
        return len(set(v)) <= 1


def is_doubly_q(input, q: Phase | None = None, tol: float = TOL, rank_tol: float = RANK_TOL) -> DoublyVerdict:
    """Tuple input: PUP-perp route.  Pair input: direct window test plus the window PUP-perp route."""
    if isinstance(input, BCLTuple):
        c = doubly_tuple_check(input, tol)
        return DoublyVerdict(c.passed, None, [c])
    V1, V2 = input
    if q is None:
        raise ValueError("q is required for operator pairs")
    direct = doubly_window_check(V1, V2, q, tol)
    route = Check.from_residual("doubly_q_window_pup_perp", pup_perp_window(V1, V2, rank_tol), max(tol, 1e-9))
    return DoublyVerdict(direct.passed, direct.witness, [direct, route])


def mixed_commutator_identity(t: BCLTuple, sig_model: tuple[LazyOperator, LazyOperator], window: TruncationWindow, tol: float = 1e-12) -> Check:
    """For q = 1: V2* V1 - V1 V2* = (I - M_z M_z*) (x) P U P-perp U, compared on the window."""
    from .opalg import LazyOperator as LO, equal_on_window

    V1, V2 = sig_model
    sig = V1.signature
    P, U = t.P, t.U
    if P.dtype == object and U.dtype == object:
        from .opalg import exact_identity

        Pp = exact_identity(P.shape[0]) - P
        M = np.dot(np.dot(np.dot(P, U), Pp), U)
    else:
        Pc, Uc = _c(P), _c(U)
        M = Pc @ Uc @ (np.eye(Pc.shape[0]) - Pc) @ Uc
    lhs = adjoint(V2) @ V1 - V1 @ adjoint(V2)
    rhs = LO(sig, [(1, (), M), (-1, (("S", 1), ("C", 1)), M)])
    return equal_on_window(lhs, rhs, window, tol, "mixed_commutator_identity")


# -- normal form of doubly q-commutative shift pairs ---------------------------------------------------


@dataclass
class SlocinskiResult:
    s_q: np.ndarray
    tau_s: np.ndarray
    monomial_basis: list
    phase_table: dict
    checks: list
    trusted: list = field(default_factory=list)
    off_diagonal: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _shift2(N: int, j: int) -> np.ndarray:
    basis = monomials(2, N)
    idx = {e: k for k, e in enumerate(basis)}
    S = np.zeros((len(basis), len(basis)))
    for e, k in idx.items():
        f = list(e)
        f[j] += 1
        f = tuple(f)
        if f in idx:
            S[idx[f], k] = 1
    return S


def slocinski_normal_form(V1: TruncatedMatrix, V2: TruncatedMatrix, q: Phase, tol: float = 1e-8, rank_tol: float = RANK_TOL) -> SlocinskiResult:
    dq = doubly_window_check(V1, V2, q, 1e-10)
    if not dq.passed:
        raise HypothesisFailure(f"pair is not doubly q-commutative (witness {dq.witness})")
    for name, V in (("V1", V1), ("V2", V2)):
        ku = ku_projection(V, None, 1e-10)
        if ku.basis.shape[1]:
            raise HypothesisFailure(f"{name} is not a shift on the window")
    rq = rq_operator(V1, V2, q)
    rqb = rq_operator(V1, V2, q.conj())
    A1, A2 = V1 @ rqb, rq @ V2
    checks = [relation_check(A1, A2, Phase.one(), 1e-10, "transform_commutative"), doubly_window_check(A1, A2, Phase.one(), 1e-10)]
    checks[-1].name = "transform_doubly_commutative"
    b1, b2 = V1.window.band, V2.window.band
    N = V1.window.N
    cap = N - b1 - b2
    idx = _safe_idx(V1, cap)
    K = np.vstack([A1.matrix.conj().T[:, idx], A2.matrix.conj().T[:, idx]])
    Z = scipy.linalg.null_space(K, rcond=rank_tol)
    if Z.shape[1] != 1:
        raise HypothesisFailure(f"joint multiplicity {Z.shape[1]} on the window (need 1)")
    e = np.zeros(V1.matrix.shape[0], dtype=complex)
    e[idx] = Z[:, 0]
    j = np.flatnonzero(np.abs(e) > 1e-9)[0]
    e = e * (abs(e[j]) / e[j])
    # tau_S* : z1^a z2^b -> A1^a A2^b e
    Nm = max(1, cap // max(1, max(b1, b2)))
    mon = monomials(2, Nm)
    cols = []
    A1m, A2m = A1.matrix, A2.matrix
    pow2 = [e]
    for b in range(1, Nm):
        pow2.append(A2m @ pow2[-1])
    cache = {}
    for a, b in mon:
        v = pow2[b]
        for _ in range(a):
            v = A1m @ v
        cache[(a, b)] = v
        cols.append(v)
    Tstar = np.array(cols).T
    tau = Tstar.conj().T
    s_q = tau @ rq.matrix @ Tstar
    # trusted monomials: image stays inside the window
    trusted = [k for k, (a, b) in enumerate(mon) if a * b1 + b * b2 + max(b1, b2) < cap]
    tr = np.array(trusted)
    iso = Tstar[:, tr].conj().T @ Tstar[:, tr] - np.eye(tr.size)
    checks.append(Check.from_residual("tau_s_isometry", float(np.abs(iso).max()), tol))
    S1, S2 = _shift2(Nm, 0), _shift2(Nm, 1)
    s_qb = tau @ rqb.matrix @ Tstar
    # tau_S V_i tau_S* = model_i on trusted monomials
    L1 = tau @ V1.matrix @ Tstar
    L2 = tau @ V2.matrix @ Tstar
    R1 = S1 @ s_q
    R2 = s_qb @ S2
    checks.append(Check.from_residual("slocinski_v1", float(np.abs((L1 - R1)[np.ix_(tr, tr)]).max()), tol))
    checks.append(Check.from_residual("slocinski_v2", float(np.abs((L2 - R2)[np.ix_(tr, tr)]).max()), tol))
    table = {monomial_text(mon[k]): complex(s_q[k, k]) for k in trusted}
    off = s_q[np.ix_(tr, tr)] - np.diag(np.diag(s_q[np.ix_(tr, tr)]))
    return SlocinskiResult(s_q, tau, mon, table, checks, trusted, float(np.abs(off).max()))
