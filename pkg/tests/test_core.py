import cmath
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qwold.core import Phase, QMatrix, TruncationWindow, monomial_text, monomials, phase_pow, qi_product, total_degree, xy_sequences

turns = st.fractions(min_value=0, max_value=1, max_denominator=64)


def test_xy_sequences_small_values():
    # x_n = n(n-1)/2, y_n = n(n+1)/2 by direct summation
    for n in range(1, 30):
        x, y = xy_sequences(n)
        assert x == sum(range(n))
        assert y == sum(range(n + 1))


def test_phase_parse_and_text_round_trip():
    q = Phase.parse("3/8")
    assert q.turn == Fraction(3, 8)
    assert Phase.parse(q.text()) == q
    r = Phase.parse("rad:0.25")
    assert not r.exact and abs(r.value - cmath.exp(0.25j)) < 1e-15


def test_phase_quarter_turns_are_exact_complex():
    assert Phase.rational(1, 4).value == 1j
    assert Phase.rational(1, 2).value == -1


@given(turns, turns)
def test_phase_product_matches_complex_product(a, b):
    p, q = Phase(turn=a), Phase(turn=b)
    assert abs((p * q).value - p.value * q.value) < 1e-12
    assert (p * p.conj()).is_one()


@given(turns, st.integers(-20, 20))
def test_phase_pow_matches_repeated_product(a, k):
    q = Phase(turn=a)
    out = Phase.one()
    for _ in range(abs(k)):
        out = out * (q if k >= 0 else q.conj())
    assert phase_pow(q, k) == out


def test_order_of_rational_phase():
    assert Phase.rational(2, 8).order == 4
    assert Phase.one().order == 1
    assert Phase.from_angle(1.0).order is None


def test_monomials_graded_lex_order():
    assert monomials(2, 3)[:6] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    ms = monomials(3, 4)
    assert len(ms) == 4**3
    degs = [total_degree(m) for m in ms]
    assert degs == sorted(degs)


def test_monomial_text():
    assert monomial_text((0, 0)) == "1"
    assert monomial_text((1, 0)) == "z1"
    assert monomial_text((1, 2)) == "z1 z2^2"
    assert monomial_text((3,)) == "z^3"


def test_qmatrix_pair_and_validation():
    q = Phase.rational(1, 8)
    Q = QMatrix.pair(q)
    assert Q(1, 2) == q and Q(2, 1) == q.conj()
    with pytest.raises(ValueError):
        QMatrix([[Phase.one(), q], [q, Phase.one()]])
    with pytest.raises(ValueError):
        QMatrix([[q, q], [q.conj(), Phase.one()]])


def test_power_convention_and_qi_product():
    q = Phase.rational(1, 8)
    Q = QMatrix.power_convention(q, 3)
    assert Q(1, 3) == phase_pow(q, 2)
    # q_i = prod_j q(i, j) = q^(sum_j (j - i))
    for i in (1, 2, 3):
        assert qi_product(Q, i) == phase_pow(q, sum(j - i for j in (1, 2, 3)))
    assert qi_product(Q, 2).is_one()
    with pytest.raises(IndexError):
        qi_product(Q, 4)


def test_qmatrix_json_round_trip():
    Q = QMatrix.power_convention(Phase.rational(1, 6), 4)
    Q2 = QMatrix.from_json(Q.to_json())
    assert Q2.entries == Q.entries


def test_truncation_window_safe_cap():
    w = TruncationWindow(10, 2)
    assert w.safe_cap == 8
    assert w.with_band(3).safe_cap == 7


def test_xy_sequences_reject_zero():
    with pytest.raises(ValueError):
        xy_sequences(0)
