"""Arbitrary-precision substrate: exact rationals, tagged reals, guarded evaluation.

Numbers live in two layers.

 * Rational is gmpy2.mpq. Anything that can be exact stays exact: parameter
   points, terminating sums, the finite telescoping identity.
 * BigReal wraps a gmpy2.mpfr together with the decimal precision it is
   claimed good to. The tag travels through arithmetic (results carry the max
   of the operand tags) so downstream code can ask "how many digits is this
   worth" without re-deriving it from the mpfr exponent.

Precision requests are in decimal digits everywhere; bits_for converts to the
binary precision handed to gmpy2 (digits * log2(10), plus spare bits so that
decimal rounding never eats the last requested digit).

eval_with_guard is the accuracy contract used by every verifier: run the same
computation at digits+guard and digits+2*guard working precision and insist
the results agree to 10^-digits absolutely. Disagreement raises
EscalationError; callers retry with a doubled guard or give up and report
"inconclusive". This converts silent roundoff into a visible, checkable event.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import DomainError, EscalationError

MIN_DIGITS = 20
DEFAULT_DIGITS = 60
DEFAULT_GUARD = 20
_LOG2_10 = 3.321928094887362
_SPARE_BITS = 16

Rational = mpq


def as_rational(value):
    """Coerce value to an exact mpq.

    Accepts mpq, int, fractions.Fraction, and strings like "3/4" or "0.25".
    Floats are rejected on purpose: a float literal like 0.1 is not the
    rational the caller meant, and silently accepting it would poison exact
    paths. Use a string or Fraction instead.
    """
    if isinstance(value, mpq):
        return value
    if isinstance(value, (int, type(gmpy2.mpz(0)))):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        try:
            f = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse {value!r} as a rational") from exc
        return mpq(f.numerator, f.denominator)
    raise DomainError(
        f"cannot convert {type(value).__name__} to an exact rational; "
        "pass int, Fraction, mpq, or a string"
    )


def bits_for(digits):
    """Binary precision that comfortably holds `digits` decimal digits."""
    digits = max(int(digits), 1)
    return int(digits * _LOG2_10) + _SPARE_BITS


@contextlib.contextmanager
def _bit_precision(bits):
    old = gmpy2.get_context()
    gmpy2.set_context(gmpy2.context(precision=max(int(bits), 2)))
    try:
        yield
    finally:
        gmpy2.set_context(old)


@contextlib.contextmanager
def working_precision(digits):
    """Run the body with the gmpy2 context set to bits_for(digits)."""
    with _bit_precision(bits_for(digits)):
        yield


def _coerce_mpfr(value):
    """Convert to mpfr inside the current context. Floats refused, like as_rational."""
    if isinstance(value, BigReal):
        return value.value
    if isinstance(value, mpfr):
        return value
    if isinstance(value, float):
        raise DomainError("refusing float operand; use str/Fraction/mpq or BigReal")
    if isinstance(value, Fraction):
        value = mpq(value.numerator, value.denominator)
    return mpfr(value)


def decimal_str(value, digits):
    """Normalized scientific decimal string with `digits` significant digits.

    Format is [-]d.ddd...e[+-]xx, which round-trips through mpfr and is what
    the JSON report stores. Exact zero renders as "0".
    """
    x = value.value if isinstance(value, BigReal) else value
    with working_precision(max(int(digits), 2) + 2):
        x = _coerce_mpfr(x) if not isinstance(x, mpfr) else x
        if gmpy2.is_nan(x):
            return "nan"
        if x == 0:
            return "0"
        mant, exp, _ = gmpy2.digits(x, 10, int(digits))
    sign = "-" if mant.startswith("-") else ""
    mant = mant.lstrip("-")
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+03d}"


class BigReal:
    """An mpfr value tagged with the decimal digits it is claimed good to."""

    __slots__ = ("value", "precision_digits")

    def __init__(self, value, precision_digits):
        digits = max(int(precision_digits), MIN_DIGITS)
        if not isinstance(value, mpfr):
            with working_precision(digits):
                value = _coerce_mpfr(value)
        self.value = value
        self.precision_digits = digits

    # -- arithmetic ------------------------------------------------------

    def _binop(self, other, op, reflected=False):
        digits = self.precision_digits
        if isinstance(other, BigReal):
            digits = max(digits, other.precision_digits)
        try:
            with working_precision(digits):
                a = self.value
                b = _coerce_mpfr(other)
                if reflected:
                    a, b = b, a
                return BigReal(op(a, b), digits)
        except DomainError:
            return NotImplemented

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binop(other, lambda a, b: a + b, reflected=True)

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: a - b, reflected=True)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binop(other, lambda a, b: a * b, reflected=True)

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: a / b, reflected=True)

    def __pow__(self, other):
        return self._binop(other, lambda a, b: a ** b)

    def __neg__(self):
        # negate at the value's own bit width: the ambient context may be
        # narrower and gmpy2 rounds every operation, even unary minus
        with _bit_precision(self.value.precision):
            return BigReal(-self.value, self.precision_digits)

    def __abs__(self):
        with _bit_precision(self.value.precision):
            return BigReal(abs(self.value), self.precision_digits)

    # -- comparisons (exact on the underlying mpfr values) ---------------

    def _cmp_other(self, other):
        if isinstance(other, BigReal):
            return other.value
        if isinstance(other, (int, mpfr, mpq, Fraction)):
            if isinstance(other, Fraction):
                return mpq(other.numerator, other.denominator)
            return other
        if isinstance(other, float):
            return mpfr(other)  # comparison only; no rounding happens
        return None

    def __eq__(self, other):
        val = self._cmp_other(other)
        return NotImplemented if val is None else self.value == val

    def __lt__(self, other):
        val = self._cmp_other(other)
        return NotImplemented if val is None else self.value < val

    def __le__(self, other):
        val = self._cmp_other(other)
        return NotImplemented if val is None else self.value <= val

    def __gt__(self, other):
        val = self._cmp_other(other)
        return NotImplemented if val is None else self.value > val

    def __ge__(self, other):
        val = self._cmp_other(other)
        return NotImplemented if val is None else self.value >= val

    def __hash__(self):
        return hash(self.value)

    def __float__(self):
        return float(self.value)

    def __bool__(self):
        return self.value != 0

    def to_decimal(self, digits=None):
        return decimal_str(self.value, digits or self.precision_digits)

    def __repr__(self):
        shown = decimal_str(self.value, min(self.precision_digits, 24))
        return f"BigReal({shown}, digits={self.precision_digits})"

    __str__ = __repr__


def to_bigreal(value, digits):
    """Round an exact rational (or int/str/Fraction) to a BigReal at `digits`."""
    rat = as_rational(value)
    with working_precision(digits):
        return BigReal(mpfr(rat), digits)


@dataclass(frozen=True)
class ErrorBound:
    """Split error estimate: what truncation cost, what roundoff could cost."""

    truncation: mpfr
    rounding: mpfr

    @property
    def combined(self):
        return self.truncation + self.rounding

    @classmethod
    def zero(cls):
        return cls(mpfr(0), mpfr(0))

    @classmethod
    def truncation_only(cls, magnitude):
        return cls(mpfr(abs(magnitude)), mpfr(0))

    def __repr__(self):
        return (
            f"ErrorBound(truncation={decimal_str(self.truncation, 3)}, "
            f"rounding={decimal_str(self.rounding, 3)})"
        )


def eval_with_guard(compute, digits, guard=DEFAULT_GUARD):
    """Evaluate compute(digits) twice with stacked guard digits and cross-check.

    compute(working_digits) must return (value, trunc_bound) where value is a
    BigReal or mpfr and trunc_bound an ErrorBound, mpfr, or None. The two runs
    use digits+guard and digits+2*guard working precision. If the values
    disagree by more than 10^-digits (absolute), raises EscalationError:
    either the guard is too small for the conditioning or the computation is
    unstable, and the caller decides whether to retry bigger.

    Returns (BigReal tagged with `digits`, ErrorBound) on agreement; the
    rounding component of the bound is the observed disagreement plus one
    part in 10^(digits+guard) of the value.
    """
    v1, _ = compute(digits + guard)
    v2, b2 = compute(digits + 2 * guard)
    x1 = v1.value if isinstance(v1, BigReal) else v1
    x2 = v2.value if isinstance(v2, BigReal) else v2
    with working_precision(digits + 2 * guard + 10):
        if not isinstance(x1, mpfr):
            x1 = _coerce_mpfr(x1)
        if not isinstance(x2, mpfr):
            x2 = _coerce_mpfr(x2)
        gap = abs(x1 - x2)
        tol = mpfr(10) ** (-digits)
        if gap > tol:
            raise EscalationError(
                f"guarded runs disagree by {decimal_str(gap, 3)} "
                f"(> 1e-{digits}) at guard {guard}",
                digits=digits,
                guard=guard,
                disagreement=gap,
            )
        if isinstance(b2, ErrorBound):
            trunc = mpfr(b2.truncation)
        elif b2 is None:
            trunc = mpfr(0)
        else:
            trunc = mpfr(abs(b2))
        rounding = gap + abs(x2) * mpfr(10) ** (-(digits + guard))
        bound = ErrorBound(trunc, rounding)
    return BigReal(x2, digits), bound


def pi_value(digits):
    """pi rounded to `digits` decimal digits."""
    with working_precision(digits):
        return BigReal(gmpy2.const_pi(), digits)


def sqrt_value(value, digits):
    """Square root of a nonnegative rational/BigReal at `digits` digits."""
    with working_precision(digits):
        x = value.value if isinstance(value, BigReal) else mpfr(as_rational(value))
        if x < 0:
            raise DomainError("sqrt_value needs a nonnegative argument")
        return BigReal(gmpy2.sqrt(x), digits)


def sin_value(value, digits):
    """Sine of a BigReal/rational (radians) at `digits` digits."""
    with working_precision(digits + 5):
        x = value.value if isinstance(value, BigReal) else mpfr(as_rational(value))
        return BigReal(gmpy2.sin(x), digits)
