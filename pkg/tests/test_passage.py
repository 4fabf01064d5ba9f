import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwold.bcl import BCLTuple, build_model, model_matrices
from qwold.core import Phase, TruncationWindow
from qwold.fixtures import example, random_bcl_tuple, random_shift_pair, slocinski_fixtures
from qwold.opalg import SpaceSignature, densify, identity, rot, shift
from qwold.passage import (
    HypothesisFailure,
    abstract_passage_check,
    mixed_commutator_identity,
    from_q_commutative,
    is_doubly_q,
    pup_perp,
    round_trip,
    rq_lazy,
    rq_operator,
    slocinski_normal_form,
    to_q_commutative,
)

q8 = Phase.rational(1, 8)
bidisk = SpaceSignature(2, 1, 0)
disc = SpaceSignature(1, 1, 0)


def _diag_on_window(R, cap):
    idx = np.flatnonzero(R.safe_mask(cap))
    return idx, R.matrix[np.ix_(idx, idx)]


@pytest.mark.parametrize("q", [q8, Phase.rational(2, 5), Phase.from_angle(1.0)])
def test_rq_on_bidisk_is_min_degree_phase(q):
    # D_{V*} for V = M_z1 M_z2 projects onto monomials with a zero exponent,
    # so r_q is diagonal with entry q^min(a, b) on z1^a z2^b
    N = 10
    w = TruncationWindow(N, 1)
    R = rq_operator(densify(shift(bidisk, 1), w), densify(shift(bidisk, 2), w), q)
    idx, M = _diag_on_window(R, N - 2)
    want = np.array([q.value ** min(R.basis[i][1]) for i in idx])
    np.testing.assert_allclose(M, np.diag(want), atol=1e-13)


def test_rq_is_identity_at_q_one():
    V1, V2 = example("bidisk", Phase.one()).dense(8)
    R = rq_operator(V1, V2, Phase.one())
    idx, M = _diag_on_window(R, 6)
    np.testing.assert_allclose(M, np.eye(idx.size), atol=1e-14)


def test_rq_for_shift_times_identity():
    w = TruncationWindow(12, 1)
    V1, V2 = densify(shift(disc, 1), w), densify(identity(disc), w)
    R = rq_operator(V1, V2, q8)
    idx, M = _diag_on_window(R, 11)
    np.testing.assert_allclose(M, np.diag([q8.value**n for n in range(idx.size)]), atol=1e-14)


def test_rq_lazy_matches_dense():
    V1l, V2l = rot(bidisk, q8) @ shift(bidisk, 1), shift(bidisk, 2)
    w = TruncationWindow(8, 1)
    R = rq_operator(densify(V1l, w), densify(V2l, w), q8)
    L = densify(rq_lazy(V1l, V2l, q8, 8), w)
    idx = np.flatnonzero(R.safe_mask(6))
    np.testing.assert_allclose(L.matrix[np.ix_(idx, idx)], R.matrix[np.ix_(idx, idx)], atol=1e-13)


@pytest.mark.parametrize("q", [q8, Phase.rational(3, 7), Phase.from_angle(0.3)])
def test_passage_from_commuting_bidisk(q):
    V1, V2 = example("bidisk", Phase.one()).dense(10)
    cert = to_q_commutative(V1, V2, q)
    assert cert.passed, cert.to_json()
    back = from_q_commutative(*cert.pair, q)
    assert back.passed
    assert round_trip(V1, V2, q).passed


def test_passage_from_q_commutative_bidisk():
    V1, V2 = example("bidisk", q8).dense(10)
    cert = from_q_commutative(V1, V2, q8)
    assert cert.passed


def test_passage_rejects_unitary_part():
    q = Phase.rational(1, 2)
    t = random_bcl_tuple(1, 2, 0, q, exact=False)
    V1, V2 = model_matrices(t, 8)
    with pytest.raises(HypothesisFailure):
        rq_operator(V1, V2, q)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(1, 2))
def test_round_trip_on_random_shift_models(seed, n):
    (V1l, V2l), _ = random_shift_pair(n, seed, Phase.one())
    w = TruncationWindow(12, 1)
    V1, V2 = densify(V1l, w), densify(V2l, w)
    assert round_trip(V1, V2, Phase.rational(seed % 9, 9)).passed


def test_abstract_check_with_rq():
    V1, V2 = example("bidisk", Phase.one()).dense(10)
    R = rq_operator(V1, V2, q8)
    checks = {c.name: c for c in abstract_passage_check(V1, V2, R, q8)}
    assert checks["abstract_hypothesis"].passed
    assert checks["abstract_biconditional"].passed
    assert checks["pair_commutative"].passed and checks["transformed_q_commutative"].passed


def test_abstract_check_non_commuting_pair_stays_non_q_commuting():
    V1, V2 = example("bidisk", Phase.rational(1, 5)).dense(10)
    R = rq_operator(V1, V2, q8)
    checks = {c.name: c for c in abstract_passage_check(V1, V2, R, q8)}
    assert checks["abstract_biconditional"].passed
    assert not checks["pair_commutative"].passed and not checks["transformed_q_commutative"].passed


@settings(max_examples=10)
@given(st.integers(1, 15))
def test_abstract_hypothesis_fails_for_identity(k):
    q = Phase.rational(k, 16)
    V1, V2 = example("bidisk", Phase.one()).dense(8)
    I = V1.like(np.eye(V1.matrix.shape[0], dtype=complex), band=0)
    checks = abstract_passage_check(V1, V2, I, q)
    assert len(checks) == 2 and not checks[0].passed


@pytest.mark.parametrize(
    "name, doubly, witness",
    [("rq-mz", True, None), ("rqmz-mz", False, "1"), ("bidisk", True, None), ("bidisk-restricted", False, "z1")],
)
def test_doubly_verdicts(name, doubly, witness):
    spec = example(name, q8)
    V1, V2 = spec.dense(12)
    v = is_doubly_q((V1, V2), q8)
    assert v.doubly is doubly and v.witness == witness
    assert v.agree
    assert spec.expected["doublyQ"] is doubly


def test_doubly_tuple_route_on_examples():
    assert is_doubly_q(example("rq-mz", q8).tuple).doubly
    t = example("rqmz-mz", q8).tuple
    assert not is_doubly_q(t).doubly and abs(pup_perp(t) - 1) < 1e-15


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.booleans())
def test_doubly_routes_agree_on_random_models(seed, doubly):
    q = Phase.rational(seed % 7, 7)
    (V1l, V2l), t = random_shift_pair(2, seed, q, doubly=doubly)
    w = TruncationWindow(12, 1)
    v = is_doubly_q((densify(V1l, w), densify(V2l, w)), q)
    assert v.agree
    assert is_doubly_q(t).doubly == v.doubly
    if doubly:
        assert v.doubly


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_unitary_first_factor_is_doubly(seed):
    # P = 0 makes V1 = R_q (x) U unitary on the shift part
    q = Phase.rational(seed % 5, 5)
    t = random_bcl_tuple(2, 0, seed, q, exact=False, rank=0)
    V1, V2 = model_matrices(t, 10)
    assert is_doubly_q((V1, V2), q).doubly


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_passage_preserves_doubly_commutativity(seed):
    (V1l, V2l), _ = random_shift_pair(2, seed, Phase.one(), doubly=True)
    w = TruncationWindow(12, 1)
    V1, V2 = densify(V1l, w), densify(V2l, w)
    W1, W2 = to_q_commutative(V1, V2, q8).pair
    assert is_doubly_q((W1, W2), q8).doubly


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("exact", [True, False])
def test_mixed_commutator_identity(seed, exact):
    t = random_bcl_tuple(2, 0, seed, Phase.one(), exact=exact)
    c = mixed_commutator_identity(t, build_model(t), TruncationWindow(6, 1))
    assert c.passed


def test_slocinski_on_fixtures():
    for label, q, V1, V2 in slocinski_fixtures(10):
        res = slocinski_normal_form(V1, V2, q)
        assert res.passed, (label, [(c.name, c.residual) for c in res.checks])


def test_slocinski_rejects_non_doubly_pair():
    V1, V2 = example("bidisk-restricted", q8).dense(10)
    with pytest.raises(HypothesisFailure):
        slocinski_normal_form(V1, V2, q8)


def test_slocinski_phases_are_min_degree_powers():
    for label, q, V1, V2 in slocinski_fixtures(10):
        res = slocinski_normal_form(V1, V2, q)
        for k in res.trusted:
            a, b = res.monomial_basis[k]
            assert abs(res.s_q[k, k] - q.value ** min(a, b)) < 1e-12, label
        assert res.off_diagonal < 1e-12


def test_slocinski_identification_is_identity_on_passage_outputs():
    for label, q, V1, V2 in slocinski_fixtures(10):
        if not label.startswith("passage"):
            continue
        res = slocinski_normal_form(V1, V2, q)
        idx = V1.index()
        cols = res.tau_s.conj().T
        for k in res.trusted:
            a, b = res.monomial_basis[k]
            e = np.zeros(cols.shape[0], dtype=complex)
            e[idx[("h", (a, b), 0)]] = 1
            np.testing.assert_allclose(cols[:, k], e, atol=1e-12)
