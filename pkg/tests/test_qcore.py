"""Products, series, and the shared summation engine.

Finite q-products are checked against an in-file Fraction oracle and hand
literals. The infinite product is checked against a 40-digit value recomputed
here from scratch with exact Fraction arithmetic, plus the shift law
(x; q)_inf = (1 - x)(xq; q)_inf. phi_series is cross-checked against the
independent O(n^2) direct summation that shares no code with the recurrence.
"""

import random
from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr, mpq

from qpi.errors import DomainError, NonConvergenceError, PoleError
from qpi.precision import to_bigreal, working_precision
from qpi.qcore import (
    PhiSeriesSpec,
    phi_series,
    phi_series_direct,
    pochhammer,
    qpoch_finite,
    qpoch_infinite,
    qpoch_multi,
    qpoch_product,
    sum_terms_raw,
)


def _qpoch_fraction(x, q, n):
    """Independent (x; q)_n oracle on Fraction arithmetic."""
    p = Fraction(1)
    xq = Fraction(x)
    for _ in range(n):
        p *= 1 - xq
        xq *= Fraction(q)
    return p


def _rational_draw(rng, lo=-4, hi=4, den=9):
    d = rng.randint(1, den)
    n = rng.randint(lo * d, hi * d)
    return Fraction(n, d)


# ---------------------------------------------------------------------------
# finite products
# ---------------------------------------------------------------------------

def test_pochhammer_rising_factorial():
    assert pochhammer(3, 4) == mpq(360)
    assert pochhammer(mpq(1, 2), 3) == mpq(15, 8)
    assert pochhammer(mpq(-2), 2) == mpq(2)
    assert pochhammer(5, 0) == 1
    with pytest.raises(DomainError):
        pochhammer(1, -1)


def test_qpoch_finite_hand_values():
    # (1/2; 1/2)_3 = (1/2)(3/4)(7/8)
    assert qpoch_finite(mpq(1, 2), mpq(1, 2), 3) == mpq(21, 64)
    assert qpoch_finite(mpq(2, 3), mpq(1, 5), 0) == 1
    # x q^1 = 1 makes the second factor vanish; that is a value, not an error
    assert qpoch_finite(2, mpq(1, 2), 2) == 0
    with pytest.raises(DomainError):
        qpoch_finite(mpq(1, 2), mpq(1, 2), -1)


def test_qpoch_finite_matches_fraction_oracle():
    rng = random.Random(20260825)
    for _ in range(200):
        x = _rational_draw(rng)
        q = _rational_draw(rng, lo=-2, hi=2)
        n = rng.randint(0, 12)
        got = qpoch_finite(mpq(x), mpq(q), n)
        want = _qpoch_fraction(x, q, n)
        assert got == mpq(want.numerator, want.denominator)


def test_qpoch_finite_inexact_path_tags_precision():
    x = to_bigreal("1/3", 50)
    got = qpoch_finite(x, mpq(1, 2), 4)
    assert got.precision_digits == 50
    want = _qpoch_fraction(Fraction(1, 3), Fraction(1, 2), 4)
    with working_precision(60):
        assert abs(got.value - mpq(want.numerator, want.denominator)) < mpfr("1e-45")


def test_qpoch_splitting_law_exact():
    # (x; q)_{m+n} = (x; q)_m (x q^m; q)_n, checked in exact arithmetic
    rng = random.Random(7741)
    for _ in range(100):
        x = mpq(_rational_draw(rng))
        q = mpq(_rational_draw(rng, lo=-2, hi=2))
        m = rng.randint(0, 15)
        n = rng.randint(0, 15)
        whole = qpoch_finite(x, q, m + n)
        split = qpoch_finite(x, q, m) * qpoch_finite(x * q ** m, q, n)
        assert whole == split


def test_qpoch_multi_is_the_product_of_factors():
    xs = (mpq(1, 2), mpq(1, 3), mpq(2, 5))
    q = mpq(1, 4)
    want = mpq(1)
    for x in xs:
        want *= qpoch_finite(x, q, 6)
    assert qpoch_multi(xs, q, 6) == want
    assert qpoch_multi((), q, 6) == 1


# ---------------------------------------------------------------------------
# infinite products
# ---------------------------------------------------------------------------

# first 40 significant digits of (1/2; 1/2)_inf, from the Fraction oracle below
_HALF_INF_DIGITS = "2887880950866024212788997219292307800889"


def _half_inf_scaled(ndigits, factors=200):
    """(1/2; 1/2)_inf rounded to ndigits significant digits, as an integer."""
    p = _qpoch_fraction(Fraction(1, 2), Fraction(1, 2), factors)
    return (p.numerator * 10 ** (ndigits + 1) // p.denominator + 5) // 10


def test_qpoch_infinite_frozen_half_value():
    assert str(_half_inf_scaled(40)) == _HALF_INF_DIGITS
    r = qpoch_infinite(mpq(1, 2), mpq(1, 2), 40)
    assert r.value.to_decimal(40) == "2.887880950866024212788997219292307800889e-01"
    assert 150 < r.terms_used < 200
    with working_precision(60):
        assert r.bound.combined < mpfr("1e-45")


def test_qpoch_infinite_shift_law():
    # (x; q)_inf = (1 - x)(xq; q)_inf with x = q = 1/2
    a = qpoch_infinite(mpq(1, 4), mpq(1, 2), 40).value
    b = qpoch_infinite(mpq(1, 2), mpq(1, 2), 40).value
    with working_precision(55):
        assert abs(a.value - 2 * b.value) < mpfr("1e-38")


def test_qpoch_infinite_rejects_bad_base():
    for q in (0, 1, mpq(3, 2), mpq(-1, 2)):
        with pytest.raises(DomainError):
            qpoch_infinite(mpq(1, 3), q, 30)


def test_qpoch_infinite_pole():
    with pytest.raises(PoleError):
        qpoch_infinite(1, mpq(1, 2), 30)
    # x q^1 = 1 is a pole one step in
    with pytest.raises(PoleError):
        qpoch_infinite(2, mpq(1, 2), 30)


def test_qpoch_product_mixed_bases():
    r = qpoch_product(((mpq(1, 3), mpq(1, 2), 1), (mpq(1, 5), mpq(1, 4), -2)), 40)
    a = qpoch_infinite(mpq(1, 3), mpq(1, 2), 40).value
    b = qpoch_infinite(mpq(1, 5), mpq(1, 4), 40).value
    with working_precision(55):
        want = a.value / b.value ** 2
        assert abs(r.value.value - want) < mpfr("1e-38")
        assert r.bound.combined < mpfr("1e-42")


def test_qpoch_product_skips_zero_powers_and_flags_poles():
    r = qpoch_product(((mpq(1, 3), mpq(1, 2), 0),), 30)
    assert r.value.value == 1
    assert r.terms_used == 0
    with pytest.raises(PoleError):
        qpoch_product(((1, mpq(1, 2), 1),), 30)


# ---------------------------------------------------------------------------
# summation engine
# ---------------------------------------------------------------------------

def test_sum_terms_raw_terminating_generator():
    with working_precision(50):
        s, bound, n = sum_terms_raw(iter([mpfr(1), mpfr("0.5"), mpfr("0.25")]), 30)
        assert s == mpfr("1.75")
        assert bound == 0
        assert n == 3


def test_sum_terms_raw_zero_series_terminates():
    def zeros():
        while True:
            yield mpfr(0)

    with working_precision(50):
        s, bound, n = sum_terms_raw(zeros(), 30)
        assert s == 0
        assert bound == 0
        assert n == 3


def test_sum_terms_raw_nonconvergence_reports_progress():
    def ones():
        while True:
            yield mpfr(1)

    with working_precision(50):
        with pytest.raises(NonConvergenceError) as err:
            sum_terms_raw(ones(), 30, max_terms=50)
    assert err.value.terms == 50
    assert err.value.last_ratio == 1.0


def _geometric(ratio, digits):
    t = mpfr(1)
    r = mpfr(ratio)
    # run well past the stopping threshold; the engine stops on its own
    for _ in range(20 * digits):
        yield t
        t *= r


def test_sum_terms_raw_bound_is_sound():
    # 1/k! has decreasing term ratios, so the geometric estimate taken at the
    # worst recent ratio strictly dominates the true tail
    def inv_factorials():
        t = mpfr(1)
        k = 0
        while True:
            yield t
            k += 1
            t /= k

    with working_precision(60):
        e_ref = gmpy2.exp(mpfr(1))
    with working_precision(45):
        s, bound, _ = sum_terms_raw(inv_factorials(), 30)
        err = abs(s - e_ref)
        assert err <= bound
        assert bound < mpfr("1e-28")


def test_sum_terms_raw_geometric_bound_is_tight():
    # for a truly geometric series the estimate equals the tail up to rounding
    with working_precision(45):
        s, bound, n = sum_terms_raw(_geometric(mpq(1, 3), 30), 30)
        tail = mpq(1, 3) ** n * mpq(3, 2)
        assert abs(bound - tail) < tail / 1000


def test_sum_terms_raw_ratio_hint_inflates_the_bound():
    with working_precision(45):
        _, plain, _ = sum_terms_raw(_geometric(mpq(1, 3), 30), 30)
        _, hinted, _ = sum_terms_raw(_geometric(mpq(1, 3), 30), 30,
                                     ratio_hint=mpq(9, 10))
        assert hinted > plain


# ---------------------------------------------------------------------------
# basic hypergeometric series
# ---------------------------------------------------------------------------

def test_phi_excess_counts_parameters():
    assert PhiSeriesSpec((mpq(1, 2), mpq(1, 3)), (mpq(1, 5),),
                         mpq(1, 2), mpq(1, 3)).excess() == 0
    assert PhiSeriesSpec((mpq(1, 2), mpq(1, 3)), (mpq(1, 5), mpq(1, 7)),
                         mpq(1, 2), mpq(1, 3)).excess() == 1
    assert PhiSeriesSpec((mpq(1, 2),) * 8, (mpq(1, 3),) * 7,
                         mpq(1, 2), mpq(1, 3)).excess() == 0


def test_phi_series_matches_direct_summation():
    spec = PhiSeriesSpec((mpq(1, 2), mpq(1, 3)), (mpq(1, 5),),
                         mpq(1, 2), mpq(1, 3))
    fast = phi_series(spec, 40)
    slow = phi_series_direct(spec, 40, 200)
    with working_precision(55):
        assert abs(fast.value.value - slow.value) < mpfr("1e-38")
        assert fast.bound.combined < mpfr("1e-38")


def test_phi_series_excess_factor_matches_direct():
    # one more lower parameter than upper switches on the (-1)^k q^(k(k-1)/2) factor
    spec = PhiSeriesSpec((mpq(1, 2), mpq(1, 3)), (mpq(1, 5), mpq(1, 7)),
                         mpq(1, 2), mpq(2, 3))
    fast = phi_series(spec, 40)
    slow = phi_series_direct(spec, 40, 200)
    with working_precision(55):
        assert abs(fast.value.value - slow.value) < mpfr("1e-38")


def test_phi_series_rejects_bad_base():
    spec = PhiSeriesSpec((mpq(1, 2),), (mpq(1, 5),), mpq(5, 4), mpq(1, 3))
    with pytest.raises(DomainError):
        phi_series(spec, 30)
