"""Named example pairs and tuples, plus seeded random BCL data.

Expected results for the named examples ship as JSON files in ``golden/``.
Matrix entries there are strings in {"0", "1", "q", "qbar"} so that one file
covers every q.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import scipy.stats

from . import exact as ex
from .bcl import BCLTuple, build_model, weyl_pair
from .core import Phase, QMatrix, TruncationWindow, phase_pow
from .cyclotomic import Cyclo
from .opalg import LazyOperator, SpaceSignature, TruncatedMatrix, densify, identity, ku_map, rot, shift, adjoint
from .passage import to_q_commutative

NAMES = ("rq-mz", "rqmz-mz", "bidisk", "bidisk-restricted", "no-q-2x2", "tuple-d")
DEFAULT_Q = Phase.rational(1, 8)


class UnknownFixture(KeyError):
    pass


def golden(name: str) -> dict:
    if name not in NAMES:
        raise UnknownFixture(name)
    text = resources.files("qwold").joinpath("golden", f"{name}.json").read_text()
    return json.loads(text)


def resolve_entry(s: str, q: Phase) -> complex:
    return {"0": 0j, "1": 1 + 0j, "q": q.value, "qbar": q.conj().value}[s]


def resolve_matrix(rows, q: Phase, exact: bool = False) -> np.ndarray:
    """Numeric matrix, or a cyclotomic object array when exact and q is a rational rotation."""
    if exact and q.exact:
        table = {"0": Cyclo.rational(0), "1": Cyclo.rational(1), "q": q.scalar(), "qbar": q.conj().scalar()}
        return np.array([[table[s] for s in row] for row in rows], dtype=object)
    return np.array([[resolve_entry(s, q) for s in row] for row in rows], dtype=complex)


@dataclass
class FixtureSpec:
    name: str
    q: Phase
    d: int
    ops: list
    expected: dict
    Q: QMatrix | None = None
    window: int = 16
    compress_constants: bool = False
    tuple: BCLTuple | None = None
    extra: dict = field(default_factory=dict)

    @property
    def signature(self) -> SpaceSignature:
        return self.ops[0].signature

    def dense(self, N: int | None = None) -> list[TruncatedMatrix]:
        N = self.window if N is None else N
        w = TruncationWindow(N, 1)
        mats = [densify(V, w) for V in self.ops]
        if self.compress_constants:
            keep = [not (k[0] == "h" and sum(k[1]) == 0) for k in mats[0].basis]
            mats = [M.compress(keep) for M in mats]
        return mats


def _const_projection(sig: SpaceSignature) -> LazyOperator:
    I = identity(sig)
    out = I
    for j in range(1, sig.d + 1):
        out = out @ (I - shift(sig, j) @ adjoint(shift(sig, j)))
    return out


def _sqrt2_inverse() -> Cyclo:
    return (Cyclo.root(Phase.rational(1, 8).turn) + Cyclo.root(Phase.rational(7, 8).turn)) / 2


def example(name: str, q: Phase | None = None, window: int = 16, d: int = 3, alpha=None, beta=None) -> FixtureSpec:
    """Named example with its expected metadata."""
    if name not in NAMES:
        raise UnknownFixture(name)
    q = DEFAULT_Q if q is None else q
    exp = golden(name)
    if name == "rq-mz":
        sig = SpaceSignature(1, 1, 0)
        ops = [rot(sig, q), shift(sig, 1)]
        t = BCLTuple(q, resolve_matrix(exp["P"], q, True), resolve_matrix(exp["U"], q, True), np.zeros((0, 0)), np.zeros((0, 0)))
        return FixtureSpec(name, q, 1, ops, exp, QMatrix.pair(q), window, tuple=t)
    if name == "rqmz-mz":
        sig = SpaceSignature(1, 1, 0)
        ops = [rot(sig, q) @ shift(sig, 1), shift(sig, 1)]
        t = BCLTuple(q, resolve_matrix(exp["P"], q, True), resolve_matrix(exp["U"], q, True), np.zeros((0, 0)), np.zeros((0, 0)))
        return FixtureSpec(name, q, 1, ops, exp, QMatrix.pair(q), window, tuple=t)
    if name in ("bidisk", "bidisk-restricted"):
        sig = SpaceSignature(2, 1, 0)
        ops = [rot(sig, q) @ shift(sig, 1), shift(sig, 2)]
        restricted = name == "bidisk-restricted"
        if restricted:
            Qc = identity(sig) - _const_projection(sig)
            ops = [V @ Qc for V in ops]
        return FixtureSpec(name, q, 2, ops, exp, QMatrix.pair(q), window, compress_constants=restricted)
    if name == "no-q-2x2":
        sig = SpaceSignature(0, 0, 2)
        a = Cyclo.rational(1) if alpha is None else alpha
        b = Cyclo.i() if beta is None else beta
        s = _sqrt2_inverse()
        H = ex.zeros(2)
        H[0, 0], H[0, 1], H[1, 0], H[1, 1] = s, s, s, -s
        ops = [ku_map(sig, ex.diag([a, b])), ku_map(sig, H)]
        return FixtureSpec(name, q, 0, ops, exp, None, window, extra={"alpha": complex(a), "beta": complex(b)})
    # tuple-d: V_j = R_{q^(d-j)} M_{z_j}
    sig = SpaceSignature(d, 1, 0)
    ops = [rot(sig, phase_pow(q, d - j)) @ shift(sig, j) for j in range(1, d + 1)]
    return FixtureSpec(name, q, d, ops, exp, QMatrix.power_convention(q, d), window)


def tau_law(name: str, q: Phase, n: int) -> tuple[dict, dict]:
    """Exact z^n coefficients of the wave map on the monomial z^m, as dicts m -> (output monomial, phase).

    First entry: D_{V1*} V*^n, second: D_{V2*} V1* V*^n.
    """
    y = n * (n + 1) // 2
    qb = q.conj()
    if name == "rq-mz":
        return {}, {n: (0, phase_pow(qb, y))}
    if name == "rqmz-mz":
        return {2 * n: (0, phase_pow(qb, 2 * y))}, {2 * n + 1: (0, phase_pow(qb, 2 * y) * phase_pow(qb, n + 1))}
    raise UnknownFixture(name)


# -- random BCL data -------------------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _exact_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    return ex.cayley_unitary(ex.random_hermitian(n, rng))


def _haar(n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return scipy.stats.unitary_group.rvs(n, random_state=rng)


def random_bcl_tuple(
    fiber_dim: int,
    ku_order: int = 0,
    seed: int = 0,
    q: Phase | None = None,
    exact: bool = True,
    doubly: bool = False,
    rank: int | None = None,
) -> BCLTuple:
    """Seeded random BCL-1 tuple.

    exact=True draws U and the frame of P as Cayley transforms of Gaussian-rational
    Hermitian matrices, so every entry is exact.  exact=False draws U from Haar measure.
    doubly=True makes U reduce P, i.e. P U P-perp = 0.
    """
    if fiber_dim > 8 or ku_order > 16:
        raise ValueError("fiber_dim <= 8 and ku_order <= 16")
    rng = _rng(seed)
    if q is None:
        q = Phase.rational(1, ku_order) if ku_order else Phase.rational(int(rng.integers(0, 16)), 16)
    if ku_order and q.exact and ku_order % q.order:
        raise ValueError(f"q of order {q.order} admits no q-commuting unitaries on C^{ku_order}")
    n = fiber_dim
    k = int(rng.integers(0, n + 1)) if rank is None else rank
    use_exact = exact and q.exact
    if n:
        G = _exact_unitary(n, rng) if use_exact else _haar(n, rng)
        D = ex.diag([1] * k + [0] * (n - k)) if use_exact else np.diag([1.0] * k + [0.0] * (n - k)).astype(complex)
        Gh = ex.ctranspose(G) if use_exact else G.conj().T
        P = np.dot(np.dot(G, D), Gh)
        if doubly:
            if use_exact:
                blocks = [_exact_unitary(m, rng) for m in (k, n - k) if m]
                inner = ex.block_diag(*blocks) if len(blocks) == 2 else blocks[0]
            else:
                inner = np.zeros((n, n), dtype=complex)
                if k:
                    inner[:k, :k] = _haar(k, rng)
                if n - k:
                    inner[k:, k:] = _haar(n - k, rng)
            U = np.dot(np.dot(G, inner), Gh)
        else:
            U = _exact_unitary(n, rng) if use_exact else _haar(n, rng)
    else:
        P = U = np.zeros((0, 0), dtype=complex)
    if ku_order:
        C, S = weyl_pair(q, ku_order, exact=use_exact)
        h = _exact_unitary(ku_order, rng) if use_exact else _haar(ku_order, rng)
        hh = ex.ctranspose(h) if use_exact else h.conj().T
        W1, W2 = np.dot(np.dot(h, C), hh), np.dot(np.dot(h, S), hh)
    else:
        W1 = W2 = np.zeros((0, 0), dtype=complex)
    return BCLTuple(q, P, U, W1, W2)


def random_bcl_pair(fiber_dim: int, ku_order: int = 0, seed: int = 0, q: Phase | None = None, **kw) -> tuple[tuple[LazyOperator, LazyOperator], BCLTuple]:
    t = random_bcl_tuple(fiber_dim, ku_order, seed, q, **kw)
    return build_model(t), t


def random_shift_pair(fiber_dim: int, seed: int, q: Phase, doubly: bool = False, exact: bool = False) -> tuple[tuple[LazyOperator, LazyOperator], BCLTuple]:
    """BCL model with K_u = 0, so that V1 V2 is a shift."""
    rng = _rng(seed)
    fd = max(1, fiber_dim)
    return random_bcl_pair(fd, 0, int(rng.integers(2**31)), q, exact=exact, doubly=doubly)


# -- doubly q-commutative shift pairs of multiplicity one --------------------------------------------


def _diagonal_phase_conjugation(Vs: list[TruncatedMatrix], rng: np.random.Generator) -> list[TruncatedMatrix]:
    n = Vs[0].matrix.shape[0]
    g = np.exp(2j * np.pi * rng.random(n))
    return [V.like(np.diag(g) @ V.matrix @ np.diag(g.conj())) for V in Vs]


def slocinski_fixtures(N: int = 12, seed: int = 0) -> list[tuple[str, Phase, TruncatedMatrix, TruncatedMatrix]]:
    """Ten doubly q-commutative pairs of shifts with joint multiplicity one."""
    rng = _rng(seed)
    sig = SpaceSignature(2, 1, 0)
    w = TruncationWindow(N, 1)
    out = []
    for q in (Phase.one(), Phase.rational(1, 8), Phase.rational(1, 3), Phase.rational(2, 5)):
        out.append((f"bidisk q={q.text()}", q, densify(rot(sig, q) @ shift(sig, 1), w), densify(shift(sig, 2), w)))
    M1, M2 = densify(shift(sig, 1), w), densify(shift(sig, 2), w)
    for q in (Phase.rational(1, 8), Phase.rational(3, 7)):
        cert = to_q_commutative(M1, M2, q)
        W1, W2 = cert.pair
        out.append((f"passage q={q.text()}", q, W1, W2))
    for k, q in enumerate((Phase.rational(1, 8), Phase.rational(1, 6), Phase.rational(5, 12), Phase.one())):
        V1, V2 = densify(rot(sig, q) @ shift(sig, 1), w), densify(shift(sig, 2), w)
        G1, G2 = _diagonal_phase_conjugation([V1, V2], rng)
        out.append((f"conjugated bidisk q={q.text()} #{k}", q, G1, G2))
    return out


__all__ = [
    "DEFAULT_Q",
    "FixtureSpec",
    "NAMES",
    "UnknownFixture",
    "example",
    "golden",
    "random_bcl_pair",
    "random_bcl_tuple",
    "random_shift_pair",
    "resolve_matrix",
    "slocinski_fixtures",
    "tau_law",
]
