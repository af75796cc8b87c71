"""Substrate tests: rationals, digit-tagged reals, the guarded evaluator.

The frozen decimal literals here were produced by independent integer-only
oracles (pure long division, Fraction products); each test that uses one
recomputes the oracle locally so a library regression cannot drift both
sides at once.
"""

import fractions

import gmpy2
import pytest
from gmpy2 import mpfr, mpq

from qpi.errors import DomainError, EscalationError
from qpi.precision import (
    BigReal,
    DEFAULT_GUARD,
    ErrorBound,
    MIN_DIGITS,
    as_rational,
    bits_for,
    decimal_str,
    eval_with_guard,
    pi_value,
    to_bigreal,
    working_precision,
)

# 41 digits of 416/729 by integer long division, frozen
_416_729_DIGITS = "05706447187928669410150891632373113854595"


def _long_division_digits(num, den, count):
    out = []
    n = num
    for _ in range(count):
        out.append(n // den)
        n = (n % den) * 10
    return "".join(str(d) for d in out)


def test_long_division_oracle_is_what_we_froze():
    assert _long_division_digits(416, 729, 41) == _416_729_DIGITS


def test_to_bigreal_matches_long_division_oracle():
    value = to_bigreal("416/729", 40)
    expected = "5.706447187928669410150891632373113854595e-01"
    assert value.to_decimal(40) == expected
    assert expected[0] + expected[2:41] in _416_729_DIGITS


def test_as_rational_accepts_exact_forms():
    assert as_rational("3/4") == mpq(3, 4)
    assert as_rational("0.25") == mpq(1, 4)
    assert as_rational(fractions.Fraction(7, 5)) == mpq(7, 5)
    assert as_rational(3) == mpq(3)
    assert as_rational(mpq(-2, 9)) == mpq(-2, 9)


def test_as_rational_rejects_floats_and_junk():
    with pytest.raises(DomainError):
        as_rational(0.1)
    with pytest.raises(DomainError):
        as_rational("not-a-number")
    with pytest.raises(DomainError):
        as_rational(object())


def test_bits_for_covers_decimal_digits():
    for digits in (20, 40, 60, 100):
        bits = bits_for(digits)
        assert mpfr(2) ** bits > mpfr(10) ** digits


def test_working_precision_restores_ambient_context():
    before = gmpy2.get_context().precision
    with working_precision(300):
        assert gmpy2.get_context().precision == bits_for(300)
    assert gmpy2.get_context().precision == before


def test_bigreal_binops_widen_to_the_larger_operand():
    # ops run at the wider operand's precision so the op itself adds no loss
    a = to_bigreal("1/3", 60)
    b = to_bigreal("1/7", 25)
    assert (a + b).precision_digits == 60
    assert (b * a).precision_digits == 60
    assert abs(-a).precision_digits == 60


def test_bigreal_negation_keeps_full_precision():
    # unary ops must not round through the 53-bit ambient context
    a = to_bigreal("416/729", 60)
    with working_precision(80):
        gap = abs(mpfr((-(-a)).value) - mpfr(a.value))
        assert gap == 0
        assert float(abs(a.value)) > 0.5


def test_bigreal_floors_at_min_digits():
    assert to_bigreal("1/3", 1).precision_digits == MIN_DIGITS


def test_error_bound_combines_components():
    bound = ErrorBound(mpfr("1e-50"), mpfr("2e-50"))
    assert bound.combined == mpfr("3e-50")
    assert ErrorBound.zero().combined == 0
    assert ErrorBound.truncation_only(mpfr("-1e-9")).truncation == mpfr("1e-9")


def test_decimal_str_format():
    assert decimal_str(mpfr(0), 10) == "0"
    assert decimal_str(to_bigreal("1/4", 30), 4) == "2.500e-01"
    assert decimal_str(to_bigreal("-1/4", 30), 4) == "-2.500e-01"


def _geometric_half(working_digits):
    """sum_k (1/2)^k with an explicit geometric tail bound."""
    with working_precision(working_digits):
        total = mpfr(0)
        term = mpfr(1)
        eps = mpfr(10) ** (-(working_digits + 5))
        while abs(term) > eps:
            total += term
            term /= 2
        return total, ErrorBound.truncation_only(abs(term) * 2)


def test_eval_with_guard_geometric_series():
    value, bound = eval_with_guard(_geometric_half, 40)
    with working_precision(60):
        assert abs(mpfr(value.value) - 2) < mpfr("1e-40")
    assert value.precision_digits == 40
    assert bound.combined < mpfr("1e-38")


def test_eval_with_guard_raises_on_precision_sensitive_value():
    def unstable(working_digits):
        # value moves with the working precision: the two runs cannot agree
        return to_bigreal(1, working_digits) + to_bigreal(
            f"1/{10 ** (working_digits - 30)}", working_digits), None

    with pytest.raises(EscalationError) as err:
        eval_with_guard(unstable, 40, guard=DEFAULT_GUARD)
    assert err.value.digits == 40


def test_eval_with_guard_reports_rounding_floor():
    value, bound = eval_with_guard(_geometric_half, 40)
    with working_precision(80):
        floor = abs(mpfr(value.value)) * mpfr(10) ** (-(40 + DEFAULT_GUARD))
        assert mpfr(bound.rounding) >= floor


def test_pi_value_against_frozen_digits():
    frozen = "3.141592653589793238462643383279502884197"
    assert pi_value(40).to_decimal(40)[:len(frozen)] == frozen


def test_bigreal_comparisons_are_exact():
    a = to_bigreal("1/3", 40)
    b = to_bigreal("1/3", 60)
    assert a != b            # different roundings of 1/3
    assert to_bigreal("1/2", 40) == to_bigreal("1/2", 60)
    assert to_bigreal("1/3", 40) < to_bigreal("2/3", 40)
