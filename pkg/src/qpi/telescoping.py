"""Telescoping sums built from ratios of q-shifted factorials.

The whole module revolves around one sequence,

    tau_k = prod_i (q x_i; q)_k / (q y_i; q)_k,      tau_0 = 1,

for equal-length parameter lists xs, ys and a base 0 < q < 1. Its backward
difference telescopes, and the difference has a closed form whose sum from
k = 0 to n is an exact rational identity (finite_sum_identity). Letting
n -> infinity gives the series-vs-product identity handled by
infinite_identity, and two families of specializations (corollary_a,
corollary_b) that degenerate to classical sine-product formulas as q -> 1.

tau_{-1} is defined as prod(1 - y_i) / prod(1 - x_i): exactly the value that
makes sum_{k=0..n} nabla tau_k = tau_n - tau_{-1} reproduce the displayed
closed form of the finite identity.

Everything with rational inputs is computed in exact mpq arithmetic. The
infinite forms run through the shared series engine; the summand is expanded
through CoefficientVector (a polynomial in q^k with coefficients
delta_j = (-1)^j (e_j(xs) - e_j(ys)), e_j elementary symmetric), which kills
the catastrophic cancellation of subtracting two near-1 products and hands
the engine an explicit geometric ratio hint of q.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpfr, mpq

from .errors import DomainError, PoleError
from .precision import BigReal, ErrorBound, as_rational, working_precision
from .qcore import (
    ENGINE_GUARD,
    SeriesResult,
    qpoch_finite,
    qpoch_product,
    require_q,
    sum_terms_raw,
)

_POWER_SCAN = 64  # exponent range for exact "is this a power of q" checks


def _is_power_of_q(value, q, exponents):
    value = as_rational(value)
    for m in exponents:
        if value == q ** m:
            return True
    return False


@dataclass(frozen=True)
class TelescopeSpec:
    """Parameter lists xs, ys (equal length >= 1) and base q, all exact."""

    xs: tuple
    ys: tuple
    q: object

    def __post_init__(self):
        xs = tuple(as_rational(x) for x in self.xs)
        ys = tuple(as_rational(y) for y in self.ys)
        q = require_q(self.q)
        if len(xs) != len(ys) or not xs:
            raise DomainError("xs and ys must have the same positive length")
        for y in ys:
            # (q y; q)_k vanishes iff y = q^(-m-1) for some m >= 0
            if _is_power_of_q(y, q, range(-_POWER_SCAN, 0)):
                raise PoleError(f"y = {y} lies on the pole set q^(-m-1)")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "q", q)

    @property
    def s(self):
        return len(self.xs)


# ---------------------------------------------------------------------------
# exact finite forms
# ---------------------------------------------------------------------------

def tau(spec, k):
    """tau_k as an exact rational; k >= -1."""
    if k < -1:
        raise DomainError("tau defined for k >= -1")
    if k == -1:
        px = mpq(1)
        py = mpq(1)
        for x in spec.xs:
            px *= 1 - x
        for y in spec.ys:
            py *= 1 - y
        if px == 0:
            raise PoleError("tau_{-1} undefined: some x_i = 1")
        return py / px
    num = mpq(1)
    den = mpq(1)
    for x in spec.xs:
        num *= qpoch_finite(spec.q * x, spec.q, k)
    for y in spec.ys:
        den *= qpoch_finite(spec.q * y, spec.q, k)
    return num / den


def _brace(spec, k):
    """prod(1 - q^k x_i) - prod(1 - q^k y_i), exact."""
    u = spec.q ** k
    bx = mpq(1)
    by = mpq(1)
    for x in spec.xs:
        bx *= 1 - u * x
    for y in spec.ys:
        by *= 1 - u * y
    return bx - by


def _coeff(spec, k):
    """prod(x_i; q)_k / prod(q y_i; q)_k, exact."""
    num = mpq(1)
    den = mpq(1)
    for x in spec.xs:
        num *= qpoch_finite(x, spec.q, k)
    for y in spec.ys:
        den *= qpoch_finite(spec.q * y, spec.q, k)
    return num / den


def nabla_check(spec, k):
    """Exact residual between nabla tau_k computed two ways; must be 0.

    Direct: tau_k - tau_{k-1}. Closed form: coefficient * brace / prod(1-x_i)
    with the coefficient and brace as in the finite sum identity. Raises
    PoleError when some x_i = 1 (both routes divide by prod(1 - x_i) there).
    """
    if k < 0:
        raise DomainError("nabla_check needs k >= 0")
    direct = tau(spec, k) - tau(spec, k - 1)
    px = mpq(1)
    for x in spec.xs:
        px *= 1 - x
    if px == 0:
        raise PoleError("closed form divides by prod(1 - x_i) = 0")
    closed = _coeff(spec, k) * _brace(spec, k) / px
    return direct - closed


def finite_sum_identity(spec, n):
    """Both sides of the order-n telescoped sum, exactly.

    Returns (lhs_sum, rhs_closed, residual) where
      lhs = sum_{k=0..n} prod(x;q)_k/prod(qy;q)_k * brace_k
      rhs = prod(x;q)_{n+1}/prod(qy;q)_n - prod(1 - y_i)
    and residual = lhs - rhs is exactly 0 whenever the arithmetic is right.
    """
    if n < 0:
        raise DomainError("finite_sum_identity needs n >= 0")
    lhs = mpq(0)
    for k in range(n + 1):
        lhs += _coeff(spec, k) * _brace(spec, k)
    num = mpq(1)
    den = mpq(1)
    py = mpq(1)
    for x in spec.xs:
        num *= qpoch_finite(x, spec.q, n + 1)
    for y in spec.ys:
        den *= qpoch_finite(spec.q * y, spec.q, n)
        py *= 1 - y
    rhs = num / den - py
    return lhs, rhs, lhs - rhs


@dataclass(frozen=True)
class CoefficientVector:
    """Coefficients of prod(1-t x_i) - prod(1-t y_i) as a polynomial in t.

    deltas[j-1] multiplies t^j; there is no constant term. Built from the
    elementary symmetric polynomials: delta_j = (-1)^j (e_j(xs) - e_j(ys)).
    """

    deltas: tuple

    @classmethod
    def from_spec(cls, spec):
        ex = _elementary_symmetric(spec.xs)
        ey = _elementary_symmetric(spec.ys)
        deltas = tuple(
            (-1) ** j * (ex[j] - ey[j]) for j in range(1, spec.s + 1)
        )
        return cls(deltas)

    def polynomial_residuals(self, spec, ts=None):
        """Exact residuals of the defining identity at s+1 points (all 0).

        The two sides are degree-s polynomials in t, so agreement at s+1
        distinct rational points proves the identity; default points are
        t = 1 .. s+1.
        """
        if ts is None:
            ts = range(1, spec.s + 2)
        out = []
        for t in ts:
            t = as_rational(t)
            bx = mpq(1)
            by = mpq(1)
            for x in spec.xs:
                bx *= 1 - t * x
            for y in spec.ys:
                by *= 1 - t * y
            poly = mpq(0)
            tp = t
            for d in self.deltas:
                poly += d * tp
                tp *= t
            out.append((bx - by) - poly)
        return out


def _elementary_symmetric(values):
    """[e_0, e_1, ..., e_s] of the given rationals, exact."""
    es = [mpq(1)] + [mpq(0)] * len(values)
    for i, v in enumerate(values, start=1):
        for j in range(i, 0, -1):
            es[j] += v * es[j - 1]
    return es


# ---------------------------------------------------------------------------
# infinite form
# ---------------------------------------------------------------------------

def _series_terms(xs, ys, q, deltas):
    """Summand generator, delta route: C_k * sum_j delta_j (q^k)^j.

    C_k = prod(x;q)_k / prod(qy;q)_k advances by one new factor per list per
    step. Expanding the brace through the deltas avoids subtracting two
    products that both tend to 1, so each term is computed without
    cancellation and the q^k factor is explicit.
    """
    one = mpfr(1)
    c = one
    u = one  # q^k
    while True:
        brace = mpfr(0)
        up = u
        for d in deltas:
            brace += d * up
            up *= u
        yield c * brace
        num = one
        den = one
        uq = u * q
        for x in xs:
            num *= one - x * u
        for y in ys:
            den *= one - y * uq
        c = c * num / den
        u = uq


def _series_terms_direct(xs, ys, q):
    """Summand generator, brace route: C_k * (prod(1-q^k x) - prod(1-q^k y)).

    The independent path kept for cross-checking the delta expansion.
    """
    one = mpfr(1)
    c = one
    u = one
    while True:
        bx = one
        by = one
        for x in xs:
            bx *= one - x * u
        for y in ys:
            by *= one - y * u
        yield c * (bx - by)
        num = one
        den = one
        uq = u * q
        for x in xs:
            num *= one - x * u
        for y in ys:
            den *= one - y * uq
        c = c * num / den
        u = uq


def series_side(spec, digits, route="delta"):
    """LHS of the infinite identity as a SeriesResult."""
    with working_precision(digits + ENGINE_GUARD + 5):
        xs = [mpfr(x) for x in spec.xs]
        ys = [mpfr(y) for y in spec.ys]
        qv = mpfr(spec.q)
        if route == "delta":
            deltas = [mpfr(d) for d in CoefficientVector.from_spec(spec).deltas]
            gen = _series_terms(xs, ys, qv, deltas)
        elif route == "direct":
            gen = _series_terms_direct(xs, ys, qv)
        else:
            raise DomainError(f"unknown route {route!r}")
        val, bound, n = sum_terms_raw(gen, digits, ratio_hint=spec.q)
        return SeriesResult(BigReal(val, digits), n, ErrorBound.truncation_only(bound))


def product_side(spec, digits):
    """RHS of the infinite identity: prod(x;q)_inf/prod(qy;q)_inf - prod(1-y).

    Evaluated in the aligned form prod(1-x_i) * prod(qx;q)_inf/prod(qy;q)_inf
    minus prod(1-y_i): peeling the leading factor off each x-product puts
    numerator and denominator on the same index grid, so every x_i = y_j pair
    cancels exactly before anything floats. With xs = ys nothing is left to
    evaluate and the side is a literal rational zero, matching the series
    side's identically-zero summand.
    """
    net = {}
    for x in spec.xs:
        key = spec.q * x
        net[key] = net.get(key, 0) + 1
    for y in spec.ys:
        key = spec.q * y
        net[key] = net.get(key, 0) - 1
    lead = mpq(1)
    py = mpq(1)
    for x in spec.xs:
        lead *= 1 - x
    for y in spec.ys:
        py *= 1 - y
    factors = [(x, spec.q, p) for x, p in net.items() if p]
    if not factors:
        return SeriesResult(BigReal(lead - py, digits), 0, ErrorBound.zero())
    r = qpoch_product(factors, digits)
    bound = ErrorBound.truncation_only(abs(lead) * r.bound.truncation)
    return SeriesResult(r.value * lead - py, r.terms_used, bound)


def infinite_identity(spec, digits=60, tolerance="1e-40"):
    """Verify the n -> infinity form of the telescoped sum at one spec.

    Rejects x_i in {q^-m : m >= 0} (that includes x_i = 1): there the
    x-side infinite product vanishes and the identity only survives as a
    formal limit, which this module does not evaluate.
    """
    for x in spec.xs:
        if _is_power_of_q(x, spec.q, range(-_POWER_SCAN, 1)):
            raise DomainError(f"x = {x} lies on the degenerate set q^(-m)")
    from .catalog import verify_pair

    point = {f"x{i+1}": x for i, x in enumerate(spec.xs)}
    point.update({f"y{i+1}": y for i, y in enumerate(spec.ys)})
    point["q"] = spec.q
    return verify_pair(
        "thm-aa",
        "telescoping",
        point,
        lambda d: series_side(spec, d),
        lambda d: product_side(spec, d),
        digits=digits,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# corollary families (braces evaluated directly, on purpose: these are the
# independent route that the delta-expansion consistency tests compare against)
# ---------------------------------------------------------------------------

def _require_off_power_grid(xs, q):
    for x in xs:
        x = as_rational(x)
        if x == 0:
            raise DomainError("x_i = 0 not allowed")
        if _is_power_of_q(x, q, range(-_POWER_SCAN, _POWER_SCAN + 1)):
            raise DomainError(f"x = {x} lies on the pole set q^m")


def _cor_a_terms(xs, q, m):
    one = mpfr(1)
    num = one  # prod (x;q)_k (q/x;q)_k
    den = one  # [(q;q)_k (q^2;q)_k]^m
    u = one    # q^k
    while True:
        uq = u * q
        bx = one
        for x in xs:
            bx *= (one - u * x) * (one - uq / x)
        by = ((one - u) * (one - uq)) ** m
        yield num / den * (bx - by)
        for x in xs:
            num *= (one - u * x) * (one - uq / x)
        den *= ((one - uq) * (one - uq * q)) ** m
        u = uq


def _cor_a_inputs(xs, q):
    q = require_q(q)
    xs = [as_rational(x) for x in xs]
    _require_off_power_grid(xs, q)
    return xs, q


def _cor_a_series(xs, q, digits):
    with working_precision(digits + ENGINE_GUARD + 5):
        gen = _cor_a_terms([mpfr(x) for x in xs], mpfr(q), len(xs))
        val, bound, n = sum_terms_raw(gen, digits, ratio_hint=q)
        return SeriesResult(BigReal(val, digits), n, ErrorBound.truncation_only(bound))


def _cor_a_product(xs, q, digits):
    m = len(xs)
    factors = []
    for x in xs:
        factors += [(x, q, 1), (q / x, q, 1)]
    factors += [(q, q, -m), (q * q, q, -m)]
    return qpoch_product(factors, digits)


def corollary_a_sides(xs, q, digits):
    """Series and product sides of the first corollary family.

    Series: sum_k prod(x,q/x;q)_k/((q;q)_k(q^2;q)_k)^m *
            {prod(1-q^k x)(1-q^(k+1)/x) - ((1-q^k)(1-q^(k+1)))^m}
    Product: prod(x,q/x;q)_inf / ((q;q)_inf (q^2;q)_inf)^m
    """
    xs, q = _cor_a_inputs(xs, q)
    return _cor_a_series(xs, q, digits), _cor_a_product(xs, q, digits)


def corollary_a_series(xs, q, digits):
    """Series side of the first corollary family on its own."""
    xs, q = _cor_a_inputs(xs, q)
    return _cor_a_series(xs, q, digits)


def corollary_a_product(xs, q, digits):
    """Product side of the first corollary family on its own."""
    xs, q = _cor_a_inputs(xs, q)
    return _cor_a_product(xs, q, digits)


def corollary_a(xs, q, digits=60, tolerance="1e-40"):
    from .catalog import verify_pair

    xs, q = _cor_a_inputs(xs, q)
    point = {f"x{i+1}": x for i, x in enumerate(xs)}
    point["q"] = q
    return verify_pair(
        "corollary-a",
        "telescoping",
        point,
        lambda d: _cor_a_series(xs, q, d),
        lambda d: _cor_a_product(xs, q, d),
        digits=digits,
        tolerance=tolerance,
    )


def substituted_spec_a(xs, q):
    """The TelescopeSpec whose infinite_identity equals corollary_a(xs, q)."""
    xs = [as_rational(x) for x in xs]
    q = require_q(q)
    full_x = tuple(xs) + tuple(q / x for x in xs)
    full_y = (mpq(1),) * len(xs) + (q,) * len(xs)
    return TelescopeSpec(full_x, full_y, q)


def _cor_b_terms(xs, q, m):
    one = mpfr(1)
    a = one  # (q;q)_k^(2m)
    b = one  # prod (x;q)_(k+1) (q/x;q)_(k+2)
    for x in xs:
        b *= (one - x) * (one - q / x) * (one - q * q / x)
    u = one
    while True:
        uq = u * q
        bx = (one - uq) ** (2 * m)
        by = one
        for x in xs:
            by *= (one - u * x) * (one - uq * q / x)
        yield a / b * (bx - by)
        a *= (one - uq) ** (2 * m)
        for x in xs:
            b *= (one - uq * x) * (one - uq * q * q / x)
        u = uq


def _cor_b_series(xs, q, digits):
    lead = mpq(1)
    for x in xs:
        lead /= 1 - q / x
    with working_precision(digits + ENGINE_GUARD + 5):
        gen = _cor_b_terms([mpfr(x) for x in xs], mpfr(q), len(xs))
        val, bound, n = sum_terms_raw(gen, digits, ratio_hint=q)
        return SeriesResult(
            BigReal(val, digits) + lead, n, ErrorBound.truncation_only(bound)
        )


def _cor_b_product(xs, q, digits):
    factors = [(q, q, 2 * len(xs))]
    for x in xs:
        factors += [(x, q, -1), (q / x, q, -1)]
    return qpoch_product(factors, digits)


def corollary_b_sides(xs, q, digits):
    """Series and product sides of the second corollary family.

    Series: 1/prod(1-q/x) + sum_k (q;q)_k^(2m)/prod((x;q)_(k+1)(q/x;q)_(k+2))
            * {(1-q^(k+1))^(2m) - prod(1-q^k x)(1-q^(k+2)/x)}
    Product: (q;q)_inf^(2m) / prod(x,q/x;q)_inf
    """
    xs, q = _cor_a_inputs(xs, q)
    return _cor_b_series(xs, q, digits), _cor_b_product(xs, q, digits)


def corollary_b_series(xs, q, digits):
    """Series side of the second corollary family on its own."""
    xs, q = _cor_a_inputs(xs, q)
    return _cor_b_series(xs, q, digits)


def corollary_b_product(xs, q, digits):
    """Product side of the second corollary family on its own."""
    xs, q = _cor_a_inputs(xs, q)
    return _cor_b_product(xs, q, digits)


def corollary_b(xs, q, digits=60, tolerance="1e-40"):
    from .catalog import verify_pair

    xs, q = _cor_a_inputs(xs, q)
    point = {f"x{i+1}": x for i, x in enumerate(xs)}
    point["q"] = q
    return verify_pair(
        "corollary-b",
        "telescoping",
        point,
        lambda d: _cor_b_series(xs, q, d),
        lambda d: _cor_b_product(xs, q, d),
        digits=digits,
        tolerance=tolerance,
    )
