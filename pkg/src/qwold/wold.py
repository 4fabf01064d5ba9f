"""Wold decomposition and defect machinery on truncated matrices.

Truncation rule: a box-truncated operator with band b computes the true
image of every basis vector of total degree < N - b.  All assertions are
restricted to such columns (the safe window).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TruncationWindow
from .opalg import TruncatedMatrix, key_degree, key_text
from .report import INCONCLUSIVE, PASS, Check

RANK_TOL = 1e-8
TOL = 1e-10


class WindowIsometryError(ValueError):
    def __init__(self, column: str, residual: float):
        super().__init__(f"not isometric on the safe window: column {column} (residual {residual:.3e})")
        self.column = column
        self.residual = residual


def measured_band(T: TruncatedMatrix, tol: float = 1e-13) -> int:
    """Largest degree raise over the nonzero entries (K_u counts as degree 0)."""
    deg = T.degrees
    rows, cols = np.nonzero(np.abs(T.matrix) > tol)
    if rows.size == 0:
        return 0
    return int(max(0, (deg[rows] - deg[cols]).max()))


def mat_product(*Ts: TruncatedMatrix) -> TruncatedMatrix:
    out = Ts[0]
    for T in Ts[1:]:
        out = out @ T
    return out


def safe_columns(T: TruncatedMatrix, cap: int | None = None) -> np.ndarray:
    return T.safe_mask(cap)


def window_isometry(V: TruncatedMatrix, tol: float = TOL, cap: int | None = None) -> Check:
    mask = V.safe_mask(cap)
    if not mask.any():
        return Check("window_isometry", float("nan"), tol, INCONCLUSIVE, "empty safe window")
    M = V.matrix[:, mask]
    G = M.conj().T @ M - np.eye(M.shape[1])
    colres = np.abs(G).max(axis=0)
    j = int(np.argmax(colres))
    return Check.from_residual("window_isometry", float(colres[j]), tol, key_text(V.basis[np.flatnonzero(mask)[j]], V.signature.fiber_dim))


def require_isometry(V: TruncatedMatrix, tol: float = 1e-8, cap: int | None = None) -> None:
    c = window_isometry(V, tol, cap)
    if c.verdict == INCONCLUSIVE:
        raise WindowIsometryError("(none)", float("nan"))
    if not c.passed:
        raise WindowIsometryError(c.witness, c.residual)


def canonical_basis(M: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span, built column by column in order.

    The rank is fixed by the singular values; the basis itself comes from
    Gram-Schmidt over the columns, which makes it deterministic and keeps
    basis vectors tied to the lowest-degree columns that generate them.
    Each vector is phase-normalized (first entry above 1e-9 real positive).
    """
    n = M.shape[0]
    if M.size == 0:
        return np.zeros((n, 0), dtype=complex)
    s = np.linalg.svd(M, compute_uv=False)
    rank = int((s > rank_tol).sum())
    out: list[np.ndarray] = []
    for c in range(M.shape[1]):
        if len(out) == rank:
            break
        v = M[:, c].astype(complex)
        nv = np.linalg.norm(v)
        if nv <= rank_tol:
            continue
        for _ in range(2):
            for b in out:
                v = v - b * (b.conj() @ v)
        if np.linalg.norm(v) > rank_tol * max(1.0, nv):
            v = v / np.linalg.norm(v)
            out.append(_phase_normalize(v))
    if len(out) < rank:
        # columns alone were numerically borderline; complete from the SVD
        U = np.linalg.svd(M, full_matrices=False)[0][:, :rank]
        for c in range(rank):
            v = U[:, c]
            for b in out:
                v = v - b * (b.conj() @ v)
            if np.linalg.norm(v) > 1e-6:
                out.append(_phase_normalize(v / np.linalg.norm(v)))
            if len(out) == rank:
                break
    return np.array(out).T if out else np.zeros((n, 0), dtype=complex)


def _phase_normalize(v: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > 1e-9)
    if idx.size:
        z = v[idx[0]]
        v = v * (abs(z) / z)
    return v


def orth(M: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, : int((s > rank_tol).sum())]


def coverage_residual(target: np.ndarray, span: np.ndarray, rank_tol: float = RANK_TOL) -> float:
    """max over unit vectors in span(target) of the distance to span(span)."""
    T = orth(target, rank_tol)
    if T.shape[1] == 0:
        return 0.0
    S = orth(span, rank_tol)
    R = T - S @ (S.conj().T @ T)
    return float(np.linalg.norm(R, 2))


# -- defect -------------------------------------------------------------------------------


@dataclass
class Defect:
    projection: np.ndarray
    basis: np.ndarray
    cap: int

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def defect(V: TruncatedMatrix, rank_tol: float = RANK_TOL, cap: int | None = None, iso_tol: float = 1e-8) -> Defect:
    """D_{V*} = I - V V* and an orthonormal basis of its range over the window."""
    cap = V.window.safe_cap if cap is None else cap
    require_isometry(V, iso_tol, cap)
    n = V.matrix.shape[0]
    D = np.eye(n) - V.matrix @ V.matrix.conj().T
    mask = V.safe_mask(cap)
    return Defect(D, canonical_basis(D[:, mask], rank_tol), cap)


# -- unitary part ------------------------------------------------------------------------


@dataclass
class KuResult:
    projection: np.ndarray
    basis: np.ndarray
    converged: bool
    iterations: int
    residual: float

    def check(self, tol: float) -> Check:
        if not self.converged:
            return Check("ku_projection", self.residual, tol, INCONCLUSIVE, f"no stationarity after {self.iterations} steps")
        return Check("ku_projection", self.residual, tol, PASS, None, {"iterations": self.iterations, "dim": self.basis.shape[1]})


def ku_projection(V: TruncatedMatrix, n_max: int | None = None, tol: float = TOL, cap: int | None = None) -> KuResult:
    """Stationary value of V^n V*^n on the safe window, rounded to a projection."""
    cap = V.window.safe_cap if cap is None else cap
    require_isometry(V, 1e-8, cap)
    n_max = V.window.N + 2 if n_max is None else n_max
    mask = V.safe_mask(cap)
    idx = np.flatnonzero(mask)
    M = V.matrix
    P = np.eye(M.shape[0], dtype=complex)
    res, converged, it = float("inf"), False, 0
    for it in range(1, n_max + 1):
        Pn = M @ P @ M.conj().T
        res = float(np.abs((Pn - P)[np.ix_(idx, idx)]).max()) if idx.size else 0.0
        P = Pn
        if res < tol:
            converged = True
            break
    S = P[np.ix_(idx, idx)]
    S = (S + S.conj().T) / 2
    w, X = np.linalg.eigh(S)
    keep = X[:, w > 0.5]
    full = np.zeros((M.shape[0], keep.shape[1]), dtype=complex)
    full[idx, :] = keep
    basis = canonical_basis(full @ full.conj().T, 1e-6) if keep.shape[1] else full
    proj = basis @ basis.conj().T
    return KuResult(proj, basis, converged, it, res)


# -- Wold decomposition ------------------------------------------------------------------------


@dataclass
class WoldParts:
    ku_projection: np.ndarray
    ku_basis: np.ndarray
    shift_basis: np.ndarray
    unitary_part: np.ndarray
    wave_map: np.ndarray
    row_labels: list
    window: TruncationWindow
    cap: int
    checks: list = field(default_factory=list)
    iterations: int = 0

    def to_json(self) -> dict:
        def cols(A):
            return [[[float(z.real), float(z.imag)] for z in A[:, j]] for j in range(A.shape[1])]

        return {
            "kuDim": self.ku_basis.shape[1],
            "multiplicity": self.shift_basis.shape[1],
            "kuBasis": cols(self.ku_basis),
            "shiftMultiplicityBasis": cols(self.shift_basis),
            "unitaryPart": [[[float(z.real), float(z.imag)] for z in row] for row in self.unitary_part],
            "iterations": self.iterations,
            "safeCap": self.cap,
            "residuals": {c.name: c.residual for c in self.checks},
        }


def wave_rows(V: TruncatedMatrix, E: np.ndarray, n_terms: int) -> np.ndarray:
    """Stacked blocks E* V*^n, n < n_terms: the H^2 coefficients of D_{V*}(I - zV*)^{-1}."""
    Vh = V.matrix.conj().T
    rows = []
    cur = np.eye(V.matrix.shape[0], dtype=complex)
    for _ in range(n_terms):
        rows.append(E.conj().T @ cur)
        cur = Vh @ cur
    return np.vstack(rows) if rows else np.zeros((0, V.matrix.shape[0]))


def wold_decompose(V: TruncatedMatrix, n_max: int | None = None, tol: float = TOL, rank_tol: float = RANK_TOL) -> WoldParts:
    cap = V.window.safe_cap
    dfc = defect(V, rank_tol, cap)
    ku = ku_projection(V, n_max, tol, cap)
    E, K = dfc.basis, ku.basis
    m, k = E.shape[1], K.shape[1]
    N = V.window.N
    W = K.conj().T @ V.matrix @ K if k else np.zeros((0, 0), dtype=complex)
    wave = np.vstack([wave_rows(V, E, N), K.conj().T]) if k else wave_rows(V, E, N)
    labels = [f"z^{n} e{a}" for n in range(N) for a in range(m)] + [f"k{a}" for a in range(k)]
    mask = V.safe_mask(cap)
    idx = np.flatnonzero(mask)
    checks = [ku.check(tol)]
    G = wave[:, idx]
    checks.append(Check.from_residual("wave_isometry", float(np.abs(G.conj().T @ G - np.eye(idx.size)).max()) if idx.size else 0.0, 1e-8))
    # model operator M_z (x) I_m (+) W
    S = np.zeros((N * m + k, N * m + k), dtype=complex)
    for n in range(N - 1):
        S[(n + 1) * m : (n + 2) * m, n * m : (n + 1) * m] = np.eye(m)
    if k:
        S[N * m :, N * m :] = W
    lhs = (wave @ V.matrix)[:, idx]
    rhs = (S @ wave)[:, idx]
    checks.append(Check.from_residual("wave_intertwining", float(np.abs(lhs - rhs).max()) if idx.size else 0.0, tol))
    if k:
        checks.append(Check.from_residual("unitary_part", float(np.abs(W.conj().T @ W - np.eye(k)).max()), 1e-8))
    return WoldParts(ku.projection, K, E, W, wave, labels, V.window, cap, checks, ku.iterations)


# -- pair defect machinery ------------------------------------------------------------------------


@dataclass
class LambdaSplit:
    matrix: np.ndarray
    basis: np.ndarray
    basis1: np.ndarray
    basis2: np.ndarray
    cap: int
    lower_cap: int
    checks: list
    dims: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def pair_caps(V1: TruncatedMatrix, V2: TruncatedMatrix) -> tuple[int, int]:
    b1, b2 = V1.window.band, V2.window.band
    cap = V1.window.N - b1 - b2
    return cap, cap - max(b1, b2)


def lambda_split(V1: TruncatedMatrix, V2: TruncatedMatrix, tol: float = TOL, rank_tol: float = RANK_TOL, samples: int = 200, seed: int = 0) -> LambdaSplit:
    """The map D_{V*} h -> (D_{V1*} h, D_{V2*} V1* h) and the identities behind it."""
    V = V1 @ V2
    cap, low = pair_caps(V1, V2)
    if low < 1:
        raise ValueError("window too small for the pair's band")
    dV, d1, d2 = defect(V, rank_tol, cap), defect(V1, rank_tol, cap), defect(V2, rank_tol, cap)
    E, E1, E2 = dV.basis, d1.basis, d2.basis
    D, D1, D2 = dV.projection, d1.projection, d2.projection
    A1, A2 = V1.matrix, V2.matrix
    mask = V.safe_mask(cap)
    idx = np.flatnonzero(mask)
    Lam = np.vstack([E1.conj().T @ D1 @ E, E2.conj().T @ D2 @ A1.conj().T @ E])
    checks = []
    n = E.shape[1]
    checks.append(Check.from_residual("lambda_isometry", float(np.abs(Lam.conj().T @ Lam - np.eye(n)).max()) if n else 0.0, tol))
    # coverage of the codomain on the lower window
    lmask = V.safe_mask(low)
    lidx = np.flatnonzero(lmask)
    F_low = np.vstack(
        [
            np.hstack([E1.conj().T @ D1[:, lidx], np.zeros((E1.shape[1], lidx.size))]),
            np.hstack([np.zeros((E2.shape[1], lidx.size)), E2.conj().T @ D2[:, lidx]]),
        ]
    )
    checks.append(Check.from_residual("lambda_coverage", coverage_residual(F_low, Lam, rank_tol), tol))
    # D = D1 + V1 D2 V1* = V2 D1 V2* + D2 on safe columns
    k1 = (D1 + A1 @ D2 @ A1.conj().T - D)[:, idx]
    k2 = (A2 @ D1 @ A2.conj().T + D2 - D)[:, idx]
    checks.append(Check.from_residual("defect_split_first", float(np.abs(k1).max()) if idx.size else 0.0, tol))
    checks.append(Check.from_residual("defect_split_second", float(np.abs(k2).max()) if idx.size else 0.0, tol))
    # norm identity on random window vectors
    rng = np.random.default_rng(seed)
    H = np.zeros((D.shape[0], samples), dtype=complex)
    H[idx] = rng.standard_normal((idx.size, samples)) + 1j * rng.standard_normal((idx.size, samples))
    nD = np.linalg.norm(D @ H, axis=0) ** 2
    nA = np.linalg.norm(D1 @ A2.conj().T @ H, axis=0) ** 2 + np.linalg.norm(D2 @ H, axis=0) ** 2
    nB = np.linalg.norm(D1 @ H, axis=0) ** 2 + np.linalg.norm(D2 @ A1.conj().T @ H, axis=0) ** 2
    scale_ = np.maximum(1.0, np.linalg.norm(H, axis=0) ** 2)
    checks.append(Check.from_residual("norm_identity", float(np.max(np.abs(nD - nA) / scale_ + np.abs(nD - nB) / scale_)), tol))
    # both column maps fill D_{V1*} (+) D_{V2*} on the lower window
    Amap = np.vstack([E1.conj().T @ D1 @ A2.conj().T[:, idx], E2.conj().T @ D2[:, idx]])
    Bmap = np.vstack([E1.conj().T @ D1[:, idx], E2.conj().T @ D2 @ A1.conj().T[:, idx]])
    checks.append(Check.from_residual("range_equality_first", coverage_residual(F_low, Amap, rank_tol), tol))
    checks.append(Check.from_residual("range_equality_second", coverage_residual(F_low, Bmap, rank_tol), tol))
    dims = {"defectV": n, "defectV1": E1.shape[1], "defectV2": E2.shape[1], "rankLambda": int(np.linalg.matrix_rank(Lam, rank_tol)) if Lam.size else 0}
    if dims["rankLambda"] != dims["defectV1"] + dims["defectV2"]:
        dims["note"] = "rank of Lambda differs from dim D_{V1*} + dim D_{V2*} on this window"
    return LambdaSplit(Lam, E, E1, E2, cap, low, checks, dims)
