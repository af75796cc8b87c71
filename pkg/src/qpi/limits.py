"""Classical pi-series and the q->1 bridge.

Two jobs live here. First, the classical side: eleven fixed series whose sums
are closed forms in pi (zeta values, central-binomial ratios, Ramanujan-style
linear series, and two sine-product families with free parameters x, y). Each
one is summed to N terms with a tail estimate whose kind is chosen per series:

 * alternating     first omitted term bounds the remainder outright
 * integral        monotone terms ~ 1/k^p; the integral test brackets the
                   tail, we take the midpoint and report the half-width
 * geometric       term ratio provably below rho < 1; remainder is a
                   geometric series from the first omitted term
 * p-series        terms ~ C/k^2; the tail is estimated as N * t_N (exact for
                   C/k(k+1), off by O(1/N) relatively here) and that same
                   quantity is reported as the bound

Second, the bridge: each q-series in the catalog degenerates to one of the
classical sums as q -> 1 after scaling by (1-q)^a. Running the series at q
close to 1 is hopeless (term counts blow up like 1/(1-q)), so q walks the
geometric ladder q_j = 1 - h0 * 2^-j and Richardson extrapolation in
h = 1 - q removes the polynomial error terms. The per-level change of the
extrapolant is the stability diagnostic; if it grows three levels running the
probe refuses to report a value.

The normalization exponents shipped in SHIPPED_PROBES are not arbitrary: each
one is what makes lim (1-q)^a * t_k(q) finite and nonzero per term, and the
resulting term-by-term limit is one of the classical sums above (PROBE_ORACLES
records which one, with the constant relating them). Tests confirm both the
oracle identity and that exponent a +- 1 destroys the limit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import DomainError, InstabilityError
from .precision import (
    BigReal,
    ErrorBound,
    as_rational,
    decimal_str,
    working_precision,
)
from .qcore import SeriesResult

_PAD = 10
# the deepest ladder level (q = 1 - 2^-16) needs ~3.1M terms for the
# slowest shipped series; leave real headroom above that
_PROBE_MAX_TERMS = 5_000_000


def _require_open_unit(value, name):
    x = as_rational(value)
    if not 0 < x < 1:
        raise DomainError(f"{name} must lie strictly between 0 and 1, got {x}")
    return x


# ---------------------------------------------------------------------------
# classical series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicalSeriesSpec:
    """One classical series: terms, tail policy, and closed-form target."""

    id: str
    description: str
    params: tuple = ()
    tail: str = "geometric"
    tail_rho: object = None     # geometric only: proven ratio bound
    tail_power: int = 0         # integral only: terms are 1/k^power
    default_terms: int = 200
    default_point: dict = field(default_factory=dict)
    digits: int = 40
    tolerance: str = "1e-30"


_CLASSICAL_LIST = (
    ClassicalSeriesSpec(
        id="pi-a",
        description="sum_{k>=1} 1/k^2 = pi^2/6",
        tail="integral", tail_power=2,
        default_terms=100_000, tolerance="1e-5",
    ),
    ClassicalSeriesSpec(
        id="pi-b",
        description="sum_{k>=0} (-1)^k/(2k+1)^3 = pi^3/32",
        tail="alternating",
        default_terms=10_000, tolerance="1e-12",
    ),
    ClassicalSeriesSpec(
        id="pi-c",
        description="sum_{k>=1} 1/k^4 = pi^4/90",
        tail="integral", tail_power=4,
        default_terms=10_000, tolerance="1e-12",
    ),
    ClassicalSeriesSpec(
        id="weisstein-a",
        description="sum_{k>=0} k!/((3/2)_k 2^k) = pi/2",
        tail="geometric", tail_rho=mpq(1, 2),
        default_terms=150, tolerance="1e-30",
    ),
    ClassicalSeriesSpec(
        id="weisstein-b",
        description="sum_{k>=0} k!/((3/2)_k 4^k) = 2 pi/(3 sqrt(3))",
        tail="geometric", tail_rho=mpq(1, 4),
        default_terms=200, tolerance="1e-30",
    ),
    ClassicalSeriesSpec(
        id="guillera-a",
        description="sum_{k>=0} (3k+2) k!^3/((3/2)_k^3 4^k) = pi^2/4",
        tail="geometric", tail_rho=mpq(27, 100),
        default_terms=200, tolerance="1e-30",
    ),
    ClassicalSeriesSpec(
        id="wei-a",
        description=("sum_{k>=0} (x)_k(1-x)_k(y)_k(1-y)_k/(k!^2 (k+1)!^2)"
                     " * {(k^2+k)(x+y-x^2-y^2) + xy(1-x)(1-y)}"
                     " = sin(pi x) sin(pi y)/pi^2"),
        params=("x", "y"), tail="p-series",
        default_terms=100_000,
        default_point={"x": mpq(1, 2), "y": mpq(1, 2)},
        tolerance="1e-5",
    ),
    ClassicalSeriesSpec(
        id="wei-b",
        description=("1/((1-x)(1-y)) + sum_{k>=0} k!^4/((x)_{k+1}(1-x)_{k+2}"
                     "(y)_{k+1}(1-y)_{k+2}) * {(k^2+2k)((1-x)^2+(1-y)^2)"
                     " + 1 - xy(2-x)(2-y)} = pi^2/(sin(pi x) sin(pi y))"),
        params=("x", "y"), tail="p-series",
        default_terms=100_000,
        default_point={"x": mpq(1, 2), "y": mpq(1, 2)},
        tolerance="1e-5",
    ),
    ClassicalSeriesSpec(
        id="guillera-b",
        description=("sum_{k>=0} (1/2)_k^4/(k!^2 (k+1)!^2)"
                     " * (k^2 + k + 1/8) = 2/pi^2"),
        tail="p-series",
        default_terms=100_000, tolerance="1e-5",
    ),
    ClassicalSeriesSpec(
        id="ramanujan-a",
        description="sum_{k>=0} (6k+1) (1/2)_k^3/(k!^3 4^k) = 4/pi",
        tail="geometric", tail_rho=mpq(1, 4),
        default_terms=200, tolerance="1e-30",
    ),
    ClassicalSeriesSpec(
        id="ramanujan-b",
        description="sum_{k>=0} (-1)^k (6k+1) (1/2)_k^3/(k!^3 8^k) = 2 sqrt(2)/pi",
        tail="alternating",
        default_terms=200, tolerance="1e-30",
    ),
)

CLASSICAL = {spec.id: spec for spec in _CLASSICAL_LIST}


def _term_stream(cid, point):
    """Yield the terms of a classical series under the active mpfr context.

    Generators run lazily, so every mpfr conversion happens while the caller's
    working_precision block is active. State is carried by term ratios, all of
    which are rational in k and the parameters.
    """
    one = mpfr(1)
    if cid == "pi-a":
        k = 1
        while True:
            yield one / mpfr(k * k)
            k += 1
    elif cid == "pi-b":
        k, sign = 0, 1
        while True:
            m = 2 * k + 1
            yield mpfr(sign) / mpfr(m * m * m)
            sign, k = -sign, k + 1
    elif cid == "pi-c":
        k = 1
        while True:
            kk = k * k
            yield one / mpfr(kk * kk)
            k += 1
    elif cid in ("weisstein-a", "weisstein-b"):
        d = 2 if cid == "weisstein-a" else 4
        t, k = one, 0
        while True:
            yield t
            t *= mpfr(2 * k + 2) / mpfr((2 * k + 3) * d)
            k += 1
    elif cid == "guillera-a":
        r, k = one, 0
        while True:
            yield mpfr(3 * k + 2) * r
            r *= mpfr((2 * k + 2) ** 3) / mpfr((2 * k + 3) ** 3 * 4)
            k += 1
    elif cid == "guillera-b":
        r, k = one, 0
        eighth = one / 8
        while True:
            yield r * (mpfr(k * k + k) + eighth)
            r *= mpfr((2 * k + 1) ** 4) / mpfr(16 * (k + 1) ** 2 * (k + 2) ** 2)
            k += 1
    elif cid in ("ramanujan-a", "ramanujan-b"):
        d = 4 if cid == "ramanujan-a" else 8
        r, k, sign = one, 0, 1
        while True:
            yield mpfr(sign * (6 * k + 1)) * r
            if cid == "ramanujan-b":
                sign = -sign
            r *= mpfr((2 * k + 1) ** 3) / mpfr((2 * k + 2) ** 3 * d)
            k += 1
    elif cid == "wei-a":
        x, y = mpfr(point["x"]), mpfr(point["y"])
        lin = x + y - x * x - y * y
        con = x * y * (one - x) * (one - y)
        r, k = one, 0
        while True:
            yield r * (mpfr(k * k + k) * lin + con)
            r *= ((x + k) * (one - x + k) * (y + k) * (one - y + k)
                  / mpfr((k + 1) ** 2 * (k + 2) ** 2))
            k += 1
    elif cid == "wei-b":
        x, y = mpfr(point["x"]), mpfr(point["y"])
        yield one / ((one - x) * (one - y))
        lin = (one - x) ** 2 + (one - y) ** 2
        con = one - x * y * (2 - x) * (2 - y)
        r = one / (x * (one - x) * (2 - x) * y * (one - y) * (2 - y))
        j = 0
        while True:
            yield r * (mpfr(j * j + 2 * j) * lin + con)
            r *= (mpfr((j + 1) ** 4)
                  / ((x + j + 1) * (3 - x + j) * (y + j + 1) * (3 - y + j)))
            j += 1
    else:
        raise DomainError(f"unknown classical series {cid!r}")


def _resolve_classical(spec_or_id):
    if isinstance(spec_or_id, ClassicalSeriesSpec):
        return spec_or_id
    try:
        return CLASSICAL[spec_or_id]
    except KeyError:
        raise DomainError(f"unknown classical series {spec_or_id!r}") from None


def _classical_point(spec, point):
    merged = dict(spec.default_point)
    if point:
        for key, value in point.items():
            if key not in spec.params:
                raise DomainError(
                    f"{spec.id} takes parameters {spec.params or '()'}, not {key!r}")
            merged[key] = _require_open_unit(value, key)
    return merged


def _tail_estimate(spec, partial, nxt, n_terms):
    """Turn a partial sum and the first omitted term into (value, bound)."""
    if spec.tail == "alternating":
        return partial, abs(nxt)
    if spec.tail == "geometric":
        # nxt is the first omitted term, so the tail it heads is
        # |nxt| (1 + rho + rho^2 + ...), not just the part after it
        rho = mpfr(spec.tail_rho)
        return partial, abs(nxt) / (1 - rho)
    if spec.tail == "integral":
        p = spec.tail_power
        hi = mpfr(1) / (mpfr(p - 1) * mpfr(n_terms) ** (p - 1))
        lo = mpfr(1) / (mpfr(p - 1) * mpfr(n_terms + 1) ** (p - 1))
        return partial + (hi + lo) / 2, (hi - lo) / 2
    if spec.tail == "p-series":
        correction = mpfr(n_terms) * abs(nxt)
        return partial + correction, correction
    raise DomainError(f"unknown tail kind {spec.tail!r}")


def classical_sum(spec_or_id, n_terms=None, digits=40, point=None):
    """Partial sum of a classical series with its tail estimate applied.

    Returns a SeriesResult whose value is the tail-corrected partial sum (for
    the alternating and geometric kinds the bare partial sum) and whose bound
    covers the distance to the true sum.
    """
    spec = _resolve_classical(spec_or_id)
    n = spec.default_terms if n_terms is None else int(n_terms)
    if n < 1:
        raise DomainError("n_terms must be at least 1")
    pt = _classical_point(spec, point)
    with working_precision(digits + _PAD):
        gen = _term_stream(spec.id, pt)
        partial = mpfr(0)
        for _ in range(n):
            partial += next(gen)
        nxt = next(gen)
        value, bound = _tail_estimate(spec, partial, nxt, n)
        return SeriesResult(BigReal(value, digits), n,
                            ErrorBound.truncation_only(bound))


def classical_target(spec_or_id, digits=40, point=None):
    """Closed-form value of a classical series as a BigReal."""
    spec = _resolve_classical(spec_or_id)
    pt = _classical_point(spec, point)
    with working_precision(digits + _PAD):
        pi = gmpy2.const_pi()
        cid = spec.id
        if cid == "pi-a":
            v = pi * pi / 6
        elif cid == "pi-b":
            v = pi ** 3 / 32
        elif cid == "pi-c":
            v = pi ** 4 / 90
        elif cid == "weisstein-a":
            v = pi / 2
        elif cid == "weisstein-b":
            v = 2 * pi / (3 * gmpy2.sqrt(mpfr(3)))
        elif cid == "guillera-a":
            v = pi * pi / 4
        elif cid == "wei-a":
            v = (gmpy2.sin(pi * mpfr(pt["x"])) * gmpy2.sin(pi * mpfr(pt["y"]))
                 / (pi * pi))
        elif cid == "wei-b":
            v = (pi * pi
                 / (gmpy2.sin(pi * mpfr(pt["x"])) * gmpy2.sin(pi * mpfr(pt["y"]))))
        elif cid == "guillera-b":
            v = 2 / (pi * pi)
        elif cid == "ramanujan-a":
            v = 4 / pi
        elif cid == "ramanujan-b":
            v = 2 * gmpy2.sqrt(mpfr(2)) / pi
        else:
            raise DomainError(f"unknown classical series {cid!r}")
        return BigReal(v, digits)


# ---------------------------------------------------------------------------
# sine products with any number of parameters
# ---------------------------------------------------------------------------

def _sine_terms(xs, form):
    """Terms of the m-parameter sine-product series (or its reciprocal)."""
    one = mpfr(1)
    vals = [mpfr(x) for x in xs]
    m = len(vals)
    if form == "product":
        r, k = one, 0
        while True:
            brace = -mpfr(k * k + k) ** m
            prod = one
            for x in vals:
                prod *= (k + x) * (k + 1 - x)
            yield r * (prod + brace)
            ratio = one / mpfr(((k + 1) * (k + 2)) ** m)
            for x in vals:
                ratio *= (x + k) * (one - x + k)
            r *= ratio
            k += 1
    elif form == "reciprocal":
        lead = one
        r = one
        for x in vals:
            lead /= (one - x)
            r /= x * (one - x) * (2 - x)
        yield lead
        j = 0
        while True:
            brace = mpfr(j + 1) ** (2 * m)
            prod = one
            for x in vals:
                prod *= (j + x) * (j + 2 - x)
            yield r * (brace - prod)
            ratio = mpfr((j + 1) ** (2 * m))
            for x in vals:
                ratio /= (x + j + 1) * (3 - x + j)
            r *= ratio
            j += 1
    else:
        raise DomainError(f"form must be 'product' or 'reciprocal', not {form!r}")


def sine_product_sum(xs, form="product", n_terms=100_000, digits=40):
    """Tail-corrected partial sum of the m-parameter sine-product series."""
    vals = tuple(_require_open_unit(x, "x") for x in xs)
    if not vals:
        raise DomainError("at least one parameter is required")
    with working_precision(digits + _PAD):
        gen = _sine_terms(vals, form)
        partial = mpfr(0)
        for _ in range(n_terms):
            partial += next(gen)
        nxt = next(gen)
        correction = mpfr(n_terms) * abs(nxt)
        return SeriesResult(BigReal(partial + correction, digits), n_terms,
                            ErrorBound.truncation_only(correction))


def sine_product_target(xs, form="product", digits=40):
    """prod_i sin(pi x_i)/pi^m, or its reciprocal."""
    vals = tuple(_require_open_unit(x, "x") for x in xs)
    with working_precision(digits + _PAD):
        pi = gmpy2.const_pi()
        v = mpfr(1)
        for x in vals:
            v *= gmpy2.sin(pi * mpfr(x)) / pi
        if form == "reciprocal":
            v = 1 / v
        elif form != "product":
            raise DomainError(f"form must be 'product' or 'reciprocal', not {form!r}")
        return BigReal(v, digits)


def sine_product_limit(xs, digits=40, form="product", n_terms=100_000):
    """Verify the m-parameter sine-product series against its closed form.

    Returns a VerificationReport. The point records the parameters as
    x1..xm; the id encodes the variant.
    """
    from .catalog import verify_pair

    vals = tuple(_require_open_unit(x, "x") for x in xs)
    point = {f"x{i + 1}": x for i, x in enumerate(vals)}

    def lhs(d):
        return sine_product_sum(vals, form=form, n_terms=n_terms, digits=d)

    def rhs(d):
        return SeriesResult(sine_product_target(vals, form=form, digits=d),
                            0, ErrorBound.zero())

    anchor = ("sum over k of prod_i (x_i)_k (1-x_i)_k / (k!^m (k+1)!^m)"
              " * {prod_i (k+x_i)(k+1-x_i) - k^m (k+1)^m}"
              " = prod_i sin(pi x_i) / pi^m")
    if form == "reciprocal":
        anchor = ("1/prod_i(1-x_i) + sum over k of k!^(2m) /"
                  " prod_i((x_i)_{k+1} (1-x_i)_{k+2})"
                  " * {(k+1)^(2m) - prod_i (k+x_i)(k+2-x_i)}"
                  " = pi^m / prod_i sin(pi x_i)")
    return verify_pair(
        f"sine-{form}", "classical", point, lhs, rhs,
        digits=digits, tolerance="1e-5", anchor=anchor,
    )


# ---------------------------------------------------------------------------
# q -> 1 extrapolation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitProbe:
    """Recipe for extracting lim_{q->1} (1-q)^exponent * LHS(q)."""

    identity_id: str
    exponent: int
    order: int = 6
    level_lo: int = 4
    level_hi: int = 12
    h_zero: mpq = mpq(1, 16)

    def __post_init__(self):
        if self.exponent < 0:
            raise DomainError("normalization exponent must be >= 0")
        if self.level_hi - self.level_lo < self.order + 2:
            raise DomainError(
                "need at least order+2 ladder levels for a stable extrapolation")
        if not 0 < self.h_zero < 1:
            raise DomainError("h_zero must lie in (0,1)")

    def q_at(self, level):
        q = 1 - self.h_zero * mpq(2) ** (-int(level))
        if not 0 < q < 1:
            raise DomainError(f"ladder level {level} leaves (0,1)")
        return q

    def levels(self):
        return range(self.level_lo, self.level_hi + 1)


SHIPPED_PROBES = {
    "sun": LimitProbe("sun", 3),
    "thm-b": LimitProbe("thm-b", 2),
    "thm-c": LimitProbe("thm-c", 1),
    "thm-d": LimitProbe("thm-d", 1),
    "thm-e": LimitProbe("thm-e", 0),
    "q-ramanujan-a": LimitProbe("q-ramanujan-a", 0),
    "q-ramanujan-b": LimitProbe("q-ramanujan-b", 0),
}

# Classical series reached term-by-term by each probe: id -> (classical id,
# constant multiple). The probe target equals constant * classical target.
# thm-b's term limit is (1/2) * sum 1/(2k+1)^2, which is 3/8 of zeta(2).
PROBE_ORACLES = {
    "sun": ("pi-b", mpq(2)),
    "thm-b": ("pi-a", mpq(3, 8)),
    "thm-c": ("weisstein-a", mpq(1)),
    "thm-d": ("weisstein-b", mpq(1)),
    "thm-e": ("guillera-a", mpq(1, 2)),
    "q-ramanujan-a": ("ramanujan-a", mpq(1)),
    "q-ramanujan-b": ("ramanujan-b", mpq(1)),
}


def get_probe(probe_id):
    """The shipped LimitProbe for an identity id."""
    if isinstance(probe_id, LimitProbe):
        return probe_id
    try:
        return SHIPPED_PROBES[probe_id]
    except KeyError:
        raise DomainError(f"no shipped probe named {probe_id!r}") from None


def probe_target(probe_id, digits=40):
    """Closed-form limit value for a shipped probe."""
    cid, factor = PROBE_ORACLES[probe_id]
    with working_precision(digits + _PAD):
        base = classical_target(cid, digits + _PAD)
        return BigReal(mpfr(factor) * base.value, digits)


@dataclass(frozen=True)
class ProbeResult:
    probe: LimitProbe
    value: BigReal
    target: BigReal
    abs_error: BigReal
    diagnostic: BigReal
    diagnostics: tuple
    scaled_values: tuple
    exponent: int
    digits: int
    wall_ms: float


def _richardson(values, order):
    """Richardson table for step ratio 2; returns per-level extrapolants.

    Column m cancels the h^m error term. Each level's reported value is the
    deepest available column, capped at `order`.
    """
    rows = []
    best = []
    for i, v in enumerate(values):
        row = [v]
        if rows:
            prev = rows[-1]
            depth = min(i, order, len(prev))
            for m in range(1, depth + 1):
                w = mpfr(2 ** m)
                row.append((w * row[m - 1] - prev[m - 1]) / (w - 1))
        rows.append(row)
        best.append(row[-1])
    return best


def q_to_1_limit(probe, digits=40, exponent=None, max_terms=_PROBE_MAX_TERMS):
    """Extrapolate (1-q)^a * LHS(q) along the ladder q_j = 1 - h0 2^-j.

    `probe` is a LimitProbe or the id of a shipped one. `exponent` overrides
    the probe's normalization (used by the negative controls). Raises
    InstabilityError when the level-to-level diagnostic grows three levels
    running and sits above 1e-12: that is what a wrong exponent looks like.
    """
    from .catalog import eval_side

    if isinstance(probe, str):
        try:
            probe = SHIPPED_PROBES[probe]
        except KeyError:
            raise DomainError(f"no shipped probe named {probe!r}") from None
    a = probe.exponent if exponent is None else int(exponent)
    started = time.perf_counter()

    scaled = []
    for j in probe.levels():
        qj = probe.q_at(j)
        side = eval_side(probe.identity_id, "lhs", {"q": qj}, digits,
                         max_terms=max_terms)
        with working_precision(digits + _PAD):
            h = mpfr(1 - qj)
            scaled.append(h ** a * side.value.value)

    with working_precision(digits + _PAD):
        best = _richardson(scaled, probe.order)
        diffs = [abs(best[i] - best[i - 1]) for i in range(1, len(best))]
        growing = (len(diffs) >= 3
                   and diffs[-1] > diffs[-2] > diffs[-3]
                   and diffs[-1] > mpfr("1e-12"))
        if growing:
            raise InstabilityError(
                "extrapolation diagnostic grew over the last three levels",
                diagnostics=tuple(decimal_str(d, 3) for d in diffs),
            )
        target = probe_target(probe.identity_id, digits)
        value = best[-1]
        err = abs(value - target.value)
        wall_ms = (time.perf_counter() - started) * 1000.0
        return ProbeResult(
            probe=probe,
            value=BigReal(value, digits),
            target=target,
            abs_error=BigReal(err, digits),
            diagnostic=BigReal(diffs[-1], digits),
            diagnostics=tuple(BigReal(d, digits) for d in diffs),
            scaled_values=tuple(BigReal(v, digits) for v in scaled),
            exponent=a,
            digits=digits,
            wall_ms=wall_ms,
        )
