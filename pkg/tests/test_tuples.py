import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwold.bcl import BCLTuple, extract_bcl1, tuples_equivalent, weyl_pair
from qwold.core import Phase, QMatrix, TruncationWindow, phase_pow
from qwold.fixtures import example, random_bcl_tuple
from qwold.opalg import SpaceSignature, densify, equal_on_window, rot, scale, shift
from qwold.tuples import (
    BilateralWindow,
    TupleError,
    TupleModel,
    complement_check,
    delta_i,
    extend_to_unitaries,
    extract_tuple_bcl,
    model_operators,
    relation_checks,
    tuple_model_from_pair,
    tuple_model_from_unitaries,
    v_complement,
)

q8 = Phase.rational(1, 8)


def weyl_triple(q, r, exact=True):
    C, S = weyl_pair(q, r, exact)
    CS = np.dot(C, S)
    qb = q.conj()
    Q = QMatrix([[Phase.one(), q, q], [qb, Phase.one(), qb], [qb, q, Phase.one()]])
    return [C, S, CS], Q


def test_weyl_triple_relations():
    q = Phase.rational(1, 5)
    Ws, Q = weyl_triple(q, 5, exact=False)
    for i in range(3):
        for j in range(3):
            np.testing.assert_allclose(Ws[i] @ Ws[j], Q(i + 1, j + 1).value * Ws[j] @ Ws[i], atol=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_rotated_shift_tuple_phase_law(d):
    # V_i V_j z^m picks up q^{(d-j)|m| + (d-i)(|m|+1)}; swapping gives the ratio q^{j-i}
    spec = example("tuple-d", q8, d=d)
    w = TruncationWindow(10 if d < 4 else 8, 1)
    for c in relation_checks(spec.ops, spec.Q, w):
        assert c.passed and c.residual == 0
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            assert spec.Q(i, j) == phase_pow(q8, j - i)


def test_complement_relation_is_exact():
    spec = example("tuple-d", q8, d=3)
    for i in (1, 2, 3):
        c = complement_check(spec.ops, spec.Q, i, TruncationWindow(7, 1))
        assert c.passed and c.residual == 0


def test_v_complement_skips_index():
    sig = SpaceSignature(3, 1, 0)
    ops = [shift(sig, j) for j in (1, 2, 3)]
    c = equal_on_window(v_complement(ops, 2), shift(sig, 1) @ shift(sig, 3), TruncationWindow(6, 1))
    assert c.passed and c.residual == 0
    with pytest.raises(IndexError):
        v_complement(ops, 4)
    with pytest.raises(TupleError):
        v_complement(ops[:1], 1)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_delta_maps_on_rotated_shift_triple(i):
    spec = example("tuple-d", q8, d=3)
    Vs = [densify(V, TruncationWindow(8, 1)) for V in spec.ops]
    dm = delta_i(Vs, i)
    assert dm.passed, [(c.name, c.residual) for c in dm.checks]


def test_pair_tuple_extraction_matches_pair_extraction():
    V1, V2 = example("rqmz-mz", q8).dense(16)
    model = extract_tuple_bcl([V1, V2], QMatrix.pair(q8))
    assert model.passed, [(c.name, c.residual) for c in model.checks if not c.passed]
    e = extract_bcl1(V1, V2, q8)
    assert tuples_equivalent(model.per_index[0], e.tuple) is not None
    assert tuples_equivalent(model.coherent[0], e.tuple) is not None


def test_pair_as_two_tuple_matches_extraction_of_second_index():
    t = example("rqmz-mz", q8).tuple
    model = tuple_model_from_pair(t)
    V1, V2 = example("rqmz-mz", q8).dense(16)
    coh = extract_tuple_bcl([V1, V2], QMatrix.pair(q8)).coherent
    assert tuples_equivalent(model.coherent[1], coh[1], tol=1e-8) is not None


def test_rotated_shift_triple_extraction():
    spec = example("tuple-d", q8, d=3)
    model = extract_tuple_bcl(spec.ops, spec.Q, TruncationWindow(8, 1))
    bad = [(c.name, c.residual) for c in model.checks if not c.passed]
    assert not bad
    assert model.ku_dim == 0 and model.fiber_dims[0] > 0


def test_weyl_triple_has_no_shift_part():
    q = Phase.rational(1, 3)
    Ws, Q = weyl_triple(q, 3, exact=False)
    sig = SpaceSignature(0, 0, 3)
    from qwold.opalg import ku_map

    ops = [ku_map(sig, W) for W in Ws]
    model = extract_tuple_bcl(ops, Q, TruncationWindow(6, 1))
    assert model.passed
    assert model.fiber_dim == 0 and model.ku_dim == 3
    assert model.w_relation_residual() < 1e-13


def test_tuple_extraction_rejects_wrong_q_size():
    spec = example("tuple-d", q8, d=3)
    with pytest.raises(TupleError):
        extract_tuple_bcl(spec.ops, QMatrix.pair(q8), TruncationWindow(6, 1))


def test_pair_model_operators_reproduce_pair_model():
    from qwold.bcl import build_model

    t = random_bcl_tuple(2, 0, 5, q8, exact=True)
    Xs = model_operators(tuple_model_from_pair(t))
    w = TruncationWindow(6, 1)
    X1, X2 = build_model(t)
    # both operate on H^2 (x) F; second index expands the phase into the unitary
    for A, B in ((Xs[0], X1), (Xs[1], X2)):
        c = equal_on_window(A, B, w)
        assert c.passed and c.residual == 0


def _plain_shift_model():
    one = Phase.one()
    t = BCLTuple(one, np.eye(1, dtype=complex), np.eye(1, dtype=complex), np.zeros((0, 0)), np.zeros((0, 0)))
    return TupleModel(1, QMatrix([[one]]), [t], [t.W1], [1], [t])


def test_extension_of_plain_shift_is_bilateral_shift():
    ext = extend_to_unitaries(_plain_shift_model(), BilateralWindow(4, 6))
    assert ext.passed
    Y = ext.operators[0]
    expected = np.eye(10, k=-1)
    np.testing.assert_allclose(np.asarray(Y.matrix, dtype=complex), expected)


def test_extension_of_rq_mz_pair():
    t = example("rq-mz", q8).tuple
    ext = extend_to_unitaries(tuple_model_from_pair(t), BilateralWindow(4, 6))
    assert ext.passed, [(c.name, c.residual) for c in ext.checks if not c.passed]
    Y1 = np.asarray(ext.operators[0].matrix, dtype=complex)
    np.testing.assert_allclose(Y1, np.diag([q8.value**n for n in range(-4, 6)]), atol=1e-14)


def test_exact_extension_of_random_pair_model():
    t = random_bcl_tuple(2, 0, 7, Phase.rational(1, 6), exact=True)
    ext = extend_to_unitaries(tuple_model_from_pair(t), BilateralWindow(3, 4))
    assert ext.passed
    assert all(c.residual == 0 for c in ext.checks if c.name != "extension_minimality")


def test_extension_of_weyl_triple_is_exact():
    q = Phase.rational(1, 3)
    Ws, Q = weyl_triple(q, 3)
    ext = extend_to_unitaries(tuple_model_from_unitaries(Ws, Q), BilateralWindow(2, 4))
    assert ext.passed
    assert all(c.residual == 0 for c in ext.checks if c.name != "extension_minimality")


def test_extension_needs_room_for_the_product():
    with pytest.raises(TupleError):
        extend_to_unitaries(tuple_model_from_pair(example("rq-mz", q8).tuple), BilateralWindow(2, 2))


@settings(max_examples=8)
@given(st.integers(0, 10_000), st.integers(1, 2))
def test_extension_of_random_numeric_pair_models(seed, n):
    q = Phase.rational(seed % 10, 10)
    t = random_bcl_tuple(n, 0, seed, q, exact=False)
    ext = extend_to_unitaries(tuple_model_from_pair(t), BilateralWindow(3, 5), tol=1e-10)
    assert ext.passed
