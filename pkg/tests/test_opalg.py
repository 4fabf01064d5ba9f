import numpy as np
import pytest
from hypothesis import given, strategies as st

from qwold.core import Phase, TruncationWindow, monomials
from qwold.cyclotomic import Cyclo
from qwold.opalg import (
    LazyOperator,
    SignatureMismatch,
    SpaceSignature,
    adjoint,
    apply,
    basis_vector,
    coshift,
    densify,
    equal_on_window,
    fiber_map,
    identity,
    inner,
    ku_map,
    operator_from_json,
    operator_to_json,
    rot,
    rot_var,
    scale,
    shift,
    word_product,
)

q8 = Phase.rational(1, 8)
SIG2 = SpaceSignature(2, 1, 0)


def shift_oracle(d, N, j):
    """Dense M_{z_j} on the box basis, built from the index map alone."""
    basis = monomials(d, N)
    idx = {e: k for k, e in enumerate(basis)}
    S = np.zeros((len(basis), len(basis)))
    for e, k in idx.items():
        f = list(e)
        f[j - 1] += 1
        if tuple(f) in idx:
            S[idx[tuple(f)], k] = 1
    return S


def test_shift_matches_index_oracle():
    for j in (1, 2):
        D = densify(shift(SIG2, j), 5)
        np.testing.assert_array_equal(D.matrix.real, shift_oracle(2, 5, j))


def test_rotation_acts_by_total_degree():
    D = densify(rot(SIG2, q8), 4)
    expected = [q8.value ** sum(e) for e in monomials(2, 4)]
    np.testing.assert_allclose(np.diag(D.matrix), expected, atol=1e-15)
    Dv = densify(rot_var(SIG2, 2, q8), 4)
    np.testing.assert_allclose(np.diag(Dv.matrix), [q8.value ** e[1] for e in monomials(2, 4)], atol=1e-15)


def test_coshift_kills_exponent_zero():
    assert apply(coshift(SIG2, 1), basis_vector(("h", (0, 3), 0))) == {}
    out = apply(coshift(SIG2, 1), basis_vector(("h", (2, 3), 0)))
    assert list(out) == [("h", (1, 3), 0)]


def test_shift_is_isometry_exactly():
    S = shift(SIG2, 1)
    assert equal_on_window(adjoint(S) @ S, identity(SIG2), TruncationWindow(8, 1)).passed
    # but not a co-isometry: the constant is missed
    c = equal_on_window(S @ adjoint(S), identity(SIG2), TruncationWindow(8, 1))
    assert not c.passed and c.witness == "1"


def test_bidisk_pair_is_q_commutative_exactly():
    V1, V2 = rot(SIG2, q8) @ shift(SIG2, 1), shift(SIG2, 2)
    c = equal_on_window(V1 @ V2, scale(q8, V2 @ V1), TruncationWindow(10, 2))
    assert c.passed and c.residual == 0.0 and c.detail["exact"]


def test_exact_scalars_are_cyclotomic():
    V = rot(SIG2, q8)
    val = apply(V, basis_vector(("h", (1, 0), 0)))[("h", (1, 0), 0)]
    assert isinstance(val, Cyclo)


def test_band_of_words():
    assert shift(SIG2, 1).band == 1
    assert (shift(SIG2, 1) @ shift(SIG2, 2)).band == 2
    assert adjoint(shift(SIG2, 1)).band == 0


def test_fiber_and_ku_maps():
    sig = SpaceSignature(1, 2, 2)
    A = np.array([[0, 1], [1, 0]], dtype=complex)
    F = fiber_map(sig, A)
    out = apply(F, basis_vector(("h", (3,), 0)))
    assert out == {("h", (3,), 1): 1}
    K = ku_map(sig, A)
    assert apply(K, basis_vector(("u", 1))) == {("u", 0): 1}
    assert apply(K, basis_vector(("h", (0,), 0))) == {}
    assert apply(F, basis_vector(("u", 0))) == {}


def test_signature_mismatch():
    with pytest.raises(SignatureMismatch):
        shift(SIG2, 1) @ shift(SpaceSignature(1, 1, 0), 1)
    with pytest.raises(ValueError):
        SpaceSignature(1, 0, 0)


def test_densify_of_product_is_product_of_densified_on_safe_window():
    V1, V2 = rot(SIG2, q8) @ shift(SIG2, 1), shift(SIG2, 2)
    w = TruncationWindow(7, 1)
    A = densify(V1 @ adjoint(V2) @ V2, w)
    B = densify(V1, w) @ densify(adjoint(V2), w) @ densify(V2, w)
    mask = A.safe_mask(w.N - 2)
    np.testing.assert_allclose(A.matrix[:, mask], B.matrix[:, mask], atol=1e-14)


def test_json_round_trip():
    sig = SpaceSignature(1, 2, 2)
    A = np.array([[0, 1j], [1, 0]])
    T = rot(sig, q8) @ shift(sig, 1) @ fiber_map(sig, A) + ku_map(sig, A)
    T2 = operator_from_json(operator_to_json(T))
    assert equal_on_window(T, T2, TruncationWindow(6, 1), 1e-15).passed


atoms = st.sampled_from(["S1", "S2", "C1", "C2", "R", "Rv"])


def build(word):
    ops = {
        "S1": shift(SIG2, 1),
        "S2": shift(SIG2, 2),
        "C1": coshift(SIG2, 1),
        "C2": coshift(SIG2, 2),
        "R": rot(SIG2, Phase.rational(1, 6)),
        "Rv": rot_var(SIG2, 1, Phase.rational(1, 5)),
    }
    return word_product([ops[a] for a in word]) if word else identity(SIG2)


exps = st.tuples(st.integers(0, 4), st.integers(0, 4))


@given(st.lists(atoms, max_size=6), exps, exps)
def test_adjoint_is_exact_adjoint(word, a, b):
    T = build(word)
    u, v = basis_vector(("h", a, 0)), basis_vector(("h", b, 0))
    lhs = inner(apply(T, u), v)
    rhs = inner(u, apply(adjoint(T), v))
    assert lhs == rhs


@given(st.lists(atoms, max_size=4), st.lists(atoms, max_size=4), exps)
def test_composition_applies_in_order(w1, w2, a):
    A, B = build(w1), build(w2)
    e = basis_vector(("h", a, 0))
    assert apply(A @ B, e) == apply(A, apply(B, e))


def test_irrational_rotation_is_not_exact():
    sig = SpaceSignature(1, 1, 0)
    assert rot(sig, Phase.rational(1, 8)).exact
    assert not rot(sig, Phase.from_angle(1.0)).exact
    assert not (shift(sig, 1) @ rot(sig, Phase.from_angle(1.0))).exact
