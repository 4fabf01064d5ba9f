import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwold import exact as ex
from qwold.bcl import (
    BCLTuple,
    InvalidTuple,
    NoUnimodularQ,
    as_bcl1,
    bcl1_to_bcl2,
    build_model,
    extract_bcl1,
    infer_q,
    model_matrices,
    offdiagonal_blocks,
    conjugated_bcl2,
    snap_phase,
    tuples_equivalent,
    weyl_pair,
)
from qwold.core import Phase, TruncationWindow
from qwold.cyclotomic import Cyclo
from qwold.fixtures import example, random_bcl_tuple
from qwold.opalg import equal_on_window

q8 = Phase.rational(1, 8)


@pytest.mark.parametrize("name", ["rq-mz", "rqmz-mz"])
def test_extraction_recovers_disc_examples(name):
    spec = example(name, q8)
    V1, V2 = spec.dense(16)
    e = extract_bcl1(V1, V2)
    assert e.passed, [(c.name, c.residual) for c in e.checks if not c.passed]
    assert e.full_fiber
    assert e.tuple.q == q8
    assert tuples_equivalent(e.tuple, spec.tuple) is not None


def test_rqmz_mz_tuple_values():
    t = example("rqmz-mz", q8).tuple
    assert t.exact
    np.testing.assert_allclose(t.P.astype(complex), [[1, 0], [0, 0]])
    np.testing.assert_allclose(t.U.astype(complex), [[0, q8.value], [1, 0]], atol=1e-15)
    # its model reproduces the tuple under extraction
    V1, V2 = model_matrices(t, 16)
    e = extract_bcl1(V1, V2, q8)
    assert e.passed and tuples_equivalent(e.tuple, t) is not None


def test_ku_only_weyl_pair_extraction():
    q = Phase.rational(1, 3)
    t = BCLTuple(q, np.zeros((0, 0)), np.zeros((0, 0)), *weyl_pair(q, 3, exact=False))
    V1, V2 = model_matrices(t, 4)
    e = extract_bcl1(V1, V2, q)
    assert e.passed
    assert e.tuple.fiber_dim == 0 and e.tuple.ku_dim == 3
    assert tuples_equivalent(e.tuple, t) is not None


def test_inequivalent_tuples_are_told_apart():
    a = BCLTuple(q8, np.diag([1, 0]).astype(complex), np.eye(2, dtype=complex), np.zeros((0, 0)), np.zeros((0, 0)))
    b = BCLTuple(q8, np.diag([1, 1]).astype(complex), np.eye(2, dtype=complex), np.zeros((0, 0)), np.zeros((0, 0)))
    assert tuples_equivalent(a, b) is None
    assert tuples_equivalent(a, a) is not None


@settings(max_examples=12)
@given(st.integers(0, 10_000), st.integers(1, 3), st.sampled_from([0, 2]))
def test_extraction_round_trip_random(seed, n, k):
    q = Phase.rational(1, 2) if k else Phase.rational(seed % 12, 12)
    t = random_bcl_tuple(n, k, seed, q, exact=False)
    V1, V2 = model_matrices(t, 14)
    e = extract_bcl1(V1, V2, q)
    assert e.passed
    if e.full_fiber:
        assert tuples_equivalent(e.tuple, t, tol=1e-7) is not None


def test_conjugated_bcl2_gives_same_model():
    t = random_bcl_tuple(3, 0, 4, q8, exact=True)
    for other in (conjugated_bcl2(t), as_bcl1(conjugated_bcl2(t))):
        w = TruncationWindow(6, 1)
        for A, B in zip(build_model(t), build_model(other)):
            c = equal_on_window(A, B, w)
            assert c.passed and c.residual == 0 and c.detail["exact"]


def test_bcl2_flavor_models_q_commute():
    t = bcl1_to_bcl2(random_bcl_tuple(2, 0, 1, q8, exact=False))
    V1, V2 = model_matrices(t, 10)
    e = extract_bcl1(V1, V2, q8)
    assert e.passed


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        (dict(P=np.diag([1, 0.5])), "projection"),
        (dict(U=np.diag([1, 2.0])), "unitary"),
        (dict(P=np.eye(3)), "same size"),
    ],
)
def test_validate_rejects(kwargs, msg):
    base = dict(q=q8, P=np.diag([1.0, 0]), U=np.eye(2), W1=np.zeros((0, 0)), W2=np.zeros((0, 0)))
    base.update(kwargs)
    with pytest.raises(InvalidTuple, match=msg):
        BCLTuple(**base).validate()


def test_validate_rejects_wrong_order_weyl_pair():
    C, S = weyl_pair(Phase.rational(1, 2), 2, exact=False)
    t = BCLTuple(Phase.rational(1, 4), np.zeros((0, 0)), np.zeros((0, 0)), C, S)
    with pytest.raises(InvalidTuple):
        t.validate()


def test_weyl_pair_needs_order_dividing_dimension():
    with pytest.raises(InvalidTuple):
        weyl_pair(Phase.rational(1, 3), 4)
    q = Phase.rational(1, 4)
    C, S = weyl_pair(q, 8, exact=False)
    np.testing.assert_allclose(C @ S, q.value * S @ C, atol=1e-15)
    Ce, Se = weyl_pair(q, 4)
    assert ex.equal(ex.mul(Ce, Se), ex.mul(Se, Ce) * Cyclo.root(q.turn))


@pytest.mark.parametrize("p, r", [(1, 8), (3, 7), (0, 1), (5, 12), (63, 64)])
def test_snap_phase(p, r):
    z = np.exp(2j * np.pi * p / r) * (1 + 1e-12)
    assert snap_phase(z) == Phase.rational(p, r)


def test_snap_phase_keeps_irrational_angles():
    ph = snap_phase(np.exp(1j))
    assert not ph.exact and abs(ph.value - np.exp(1j)) < 1e-15


def test_infer_q_on_bidisk():
    V1, V2 = example("bidisk", Phase.rational(2, 5)).dense(8)
    q, res = infer_q(V1, V2)
    assert q == Phase.rational(2, 5) and res < 1e-14


def test_no_unimodular_q():
    V1, V2 = example("no-q-2x2").dense(4)
    with pytest.raises(NoUnimodularQ):
        infer_q(V1, V2)
    with pytest.raises(NoUnimodularQ):
        extract_bcl1(V1, V2, q8)


def test_json_round_trip():
    t = random_bcl_tuple(2, 2, 9, Phase.rational(1, 2), exact=False)
    s = json.dumps(t.to_json())
    t2 = BCLTuple.from_json(json.loads(s))
    assert t2.q == t.q and t2.flavor == t.flavor
    for a, b in ((t.P, t2.P), (t.U, t2.U), (t.W1, t2.W1), (t.W2, t2.W2)):
        np.testing.assert_array_equal(np.asarray(a, dtype=complex), b)


def test_json_rejects_dimension_mismatch():
    obj = random_bcl_tuple(2, 0, 1, q8, exact=False).to_json()
    obj["fiberDim"] = 3
    with pytest.raises(InvalidTuple):
        BCLTuple.from_json(obj)


def test_no_intertwiner_between_shift_and_unitary_parts():
    C, S = weyl_pair(Phase.rational(1, 2), 2, exact=False)
    assert offdiagonal_blocks(C, S, fiber_dim=2, N=10) == (0, 0)
