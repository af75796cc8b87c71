"""q-shifted factorials, rising factorials, and basic hypergeometric series.

Conventions used throughout:

 * (x; q)_n   = prod_{i=0..n-1} (1 - x q^i), with (x; q)_0 = 1.
 * (x; q)_inf = prod_{i>=0} (1 - x q^i), requires 0 < q < 1.
 * (x)_n      = x (x+1) ... (x+n-1), the rising factorial.
 * phi(upper; lower; q, z) = sum_k  prod(upper; q)_k / ((q; q)_k prod(lower; q)_k)
                             * [(-1)^k q^(k(k-1)/2)]^(1 + #lower - #upper) * z^k.

Exactness policy: if every input is rational the finite products return mpq
and are exact. Anything inexact flows through mpfr under an explicit working
precision and comes back as a BigReal inside a SeriesResult that also carries
the number of terms (or factors) consumed and a certified truncation bound.

The one summation engine, sum_terms_raw, is shared by every series in the
package: it stops once three consecutive terms are below 10^-(digits+10)
relative to the running sum and the recent term ratios are below 1, then
bounds the tail by the geometric estimate |t_K| rho / (1 - rho) with rho the
worst of the last three observed ratios and any caller-supplied analytic
ratio hint.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import DomainError, NonConvergenceError, PoleError
from .precision import (
    BigReal,
    ErrorBound,
    as_rational,
    working_precision,
)

ENGINE_GUARD = 10
DEFAULT_MAX_TERMS = 500_000
_MAX_INF_FACTORS = 2_000_000


def require_q(q):
    """Validate a series base: exact rational with 0 < q < 1."""
    q = as_rational(q)
    if not 0 < q < 1:
        raise DomainError(f"base q must satisfy 0 < q < 1, got {q}")
    return q


def _is_exact(value):
    return isinstance(value, (int, mpq)) or type(value).__name__ in ("mpz", "Fraction")


def _to_ctx_mpfr(value):
    """Value to mpfr in the current context; BigReal unwraps, rationals convert."""
    if isinstance(value, BigReal):
        return value.value
    if isinstance(value, mpfr):
        return value
    return mpfr(as_rational(value))


@dataclass(frozen=True)
class SeriesResult:
    """A computed value plus how it was earned: term count and tail bound."""

    value: BigReal
    terms_used: int
    bound: ErrorBound


# ---------------------------------------------------------------------------
# rising factorial and finite q-products
# ---------------------------------------------------------------------------

def pochhammer(x, n):
    """Rising factorial (x)_n as an exact mpq. n must be a nonnegative int."""
    if n < 0:
        raise DomainError("pochhammer needs n >= 0")
    x = as_rational(x)
    p = mpq(1)
    for i in range(n):
        p *= x + i
    return p


def qpoch_finite(x, q, n):
    """(x; q)_n. Exact mpq when x and q are rational; BigReal otherwise.

    For the inexact path the result carries the max precision tag of the
    BigReal inputs (or MIN_DIGITS if only raw mpfr values are passed).
    """
    if n < 0:
        raise DomainError("qpoch_finite needs n >= 0; no negative-index support")
    if _is_exact(x) and _is_exact(q):
        x = as_rational(x)
        q = as_rational(q)
        p = mpq(1)
        xq = x
        for _ in range(n):
            p *= 1 - xq
            xq *= q
        return p
    digits = max(
        (v.precision_digits for v in (x, q) if isinstance(v, BigReal)),
        default=20,
    )
    with working_precision(digits + 5):
        xv = _to_ctx_mpfr(x)
        qv = _to_ctx_mpfr(q)
        p = mpfr(1)
        for _ in range(n):
            p *= 1 - xv
            xv *= qv
        return BigReal(p, digits)


def qpoch_multi(xs, q, n):
    """prod_i (x_i; q)_n, multiplying qpoch_finite over the sequence xs."""
    p = None
    for x in xs:
        f = qpoch_finite(x, q, n)
        p = f if p is None else p * f
    return p if p is not None else mpq(1)


# ---------------------------------------------------------------------------
# infinite q-products with certified truncation bounds
# ---------------------------------------------------------------------------

def _raw_qpoch_infinite(x, q, digits):
    """(x; q)_inf in the current context. Returns (value, tail_bound, factors).

    Multiplies factors until |x| q^n <= 10^-(digits+10) * (1 - q). The dropped
    tail satisfies |log prod_{i>=n}(1 - x q^i)| <= r / ((1-q)(1-r)) with
    r = |x| q^n, so the bound |value| * expm1(that) is certified, not a guess.
    """
    one = mpfr(1)
    if x == 0:
        return one, mpfr(0), 0
    lim = mpfr(10) ** (-(digits + ENGINE_GUARD)) * (one - q)
    p = one
    xq = mpfr(x)
    n = 0
    while abs(xq) > lim:
        f = one - xq
        if f == 0:
            raise PoleError(f"(x; q)_inf hits a zero factor: x q^{n} = 1")
        p *= f
        xq *= q
        n += 1
        if n > _MAX_INF_FACTORS:
            raise NonConvergenceError(
                f"(x; q)_inf needed more than {_MAX_INF_FACTORS} factors "
                f"(q too close to 1 for {digits} digits?)",
                terms=n,
            )
    r = abs(xq)
    bound = abs(p) * gmpy2.expm1(r / ((one - q) * (one - r)))
    return p, bound, n


def qpoch_infinite(x, q, digits):
    """(x; q)_inf as a SeriesResult; x rational or BigReal, q rational in (0,1)."""
    q = require_q(q)
    with working_precision(digits + ENGINE_GUARD + 5):
        p, bound, n = _raw_qpoch_infinite(_to_ctx_mpfr(x), mpfr(q), digits)
        return SeriesResult(BigReal(p, digits), n, ErrorBound.truncation_only(bound))


def qpoch_product(factors, digits):
    """prod_i (x_i; base_i)_inf ** power_i as a SeriesResult.

    factors is a sequence of (x, base, power) with integer power (negative
    for denominators). Bases are validated independently so mixed-base
    products like (a; q)_inf / (b; q^2)_inf work directly. The bound combines
    the per-factor relative bounds through log1p/expm1, keeping it certified.
    """
    with working_precision(digits + ENGINE_GUARD + 5):
        value = mpfr(1)
        log_rel = mpfr(0)
        nfactors = 0
        for x, base, power in factors:
            base = require_q(base)
            power = int(power)
            if power == 0:
                continue
            p, bmag, n = _raw_qpoch_infinite(_to_ctx_mpfr(x), mpfr(base), digits)
            nfactors += n
            if p == 0 or abs(p) <= bmag:
                raise PoleError("infinite product factor indistinguishable from 0")
            value *= p ** power
            log_rel += abs(power) * gmpy2.log1p(bmag / (abs(p) - bmag))
        bound = abs(value) * gmpy2.expm1(log_rel)
        return SeriesResult(BigReal(value, digits), nfactors, ErrorBound.truncation_only(bound))


# ---------------------------------------------------------------------------
# series summation engine
# ---------------------------------------------------------------------------

def sum_terms_raw(terms, digits, ratio_hint=None, min_terms=0,
                  max_terms=DEFAULT_MAX_TERMS):
    """Sum a term generator in the current context. Returns (value, bound, count).

    Stopping rule: three consecutive terms with |t_k| <= 10^-(digits+10) *
    max(|S_k|, 10^-digits), and the tail ratio rho = max(last three observed
    |t_k/t_{k-1}|, ratio_hint) must be below 1. The floor term in the max
    keeps identically-zero series (legitimate degenerate draws) terminating.
    Tail bound: |t_K| rho / (1 - rho). A generator that simply runs out of
    terms is a terminating sum and gets a zero bound.
    """
    eps = mpfr(10) ** (-(digits + ENGINE_GUARD))
    floor = mpfr(10) ** (-digits)
    hint = None if ratio_hint is None else mpfr(ratio_hint)
    s = mpfr(0)
    prev_abs = None
    recent = deque(maxlen=3)
    small = 0
    count = 0
    at = mpfr(0)
    for t in terms:
        count += 1
        s += t
        at = abs(t)
        if prev_abs is not None and prev_abs > 0:
            recent.append(at / prev_abs)
        prev_abs = at
        if at <= eps * max(abs(s), floor):
            small += 1
        else:
            small = 0
        if small >= 3 and count >= min_terms:
            rho = max(recent, default=mpfr(0))
            if hint is not None and hint > rho:
                rho = hint
            if rho < 1:
                return s, at * rho / (1 - rho), count
        if count >= max_terms:
            raise NonConvergenceError(
                f"series did not meet the stopping rule within {max_terms} terms",
                terms=count,
                last_ratio=float(max(recent, default=mpfr(0))),
            )
    return s, mpfr(0), count


# ---------------------------------------------------------------------------
# basic hypergeometric series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhiSeriesSpec:
    """Parameters of phi(upper; lower; q, z). Values rational or BigReal."""

    upper: tuple
    lower: tuple
    q: object
    z: object

    def excess(self):
        """Exponent on the (-1)^k q^(k(k-1)/2) factor: 1 + #lower - #upper."""
        return 1 + len(self.lower) - len(self.upper)


def _phi_terms(upper, lower, q, z, excess):
    one = mpfr(1)
    t = one
    u = one  # q^k
    while True:
        yield t
        num = z
        for a in upper:
            num *= one - a * u
        den = one - q * u
        for b in lower:
            den *= one - b * u
        if den == 0:
            raise PoleError("phi series denominator parameter hits q^-k")
        if excess:
            num *= (-u) ** excess
        t = t * num / den
        u *= q


def phi_series(spec, digits, ratio_hint=None, max_terms=DEFAULT_MAX_TERMS):
    """Evaluate a PhiSeriesSpec by the term-ratio recurrence."""
    q = require_q(spec.q)
    with working_precision(digits + ENGINE_GUARD + 5):
        up = [_to_ctx_mpfr(a) for a in spec.upper]
        low = [_to_ctx_mpfr(b) for b in spec.lower]
        zv = _to_ctx_mpfr(spec.z)
        gen = _phi_terms(up, low, mpfr(q), zv, spec.excess())
        val, bound, n = sum_terms_raw(gen, digits, ratio_hint=ratio_hint,
                                      max_terms=max_terms)
        return SeriesResult(BigReal(val, digits), n, ErrorBound.truncation_only(bound))


def phi_series_direct(spec, digits, terms):
    """Partial sum of a PhiSeriesSpec built term-by-term from scratch.

    Each term multiplies out its finite q-products independently (O(terms^2)
    work), sharing nothing with the ratio recurrence. Exists as the
    cross-check oracle for phi_series; returns the bare partial sum.
    """
    q = require_q(spec.q)
    with working_precision(digits + ENGINE_GUARD + 5):
        up = [_to_ctx_mpfr(a) for a in spec.upper]
        low = [_to_ctx_mpfr(b) for b in spec.lower]
        zv = _to_ctx_mpfr(spec.z)
        qv = mpfr(q)
        e = spec.excess()
        one = mpfr(1)

        def finite(x, k):
            p = one
            xq = x
            for _ in range(k):
                p *= one - xq
                xq *= qv
            return p

        s = mpfr(0)
        for k in range(terms):
            num = one
            for a in up:
                num *= finite(a, k)
            den = finite(qv, k)
            for b in low:
                den *= finite(b, k)
            t = num / den * zv ** k
            if e:
                t *= ((-1) ** k * qv ** (k * (k - 1) // 2)) ** e
            s += t
        return BigReal(s, digits)
