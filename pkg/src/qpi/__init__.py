"""High-precision verification of q-series identities and their pi-limits.

The package is organized bottom-up:

  precision    digit-tagged reals on gmpy2/MPFR, error bounds, and the
               guarded-evaluation protocol
  qcore        q-shifted factorials, infinite products with certified
               truncation bounds, basic hypergeometric series
  telescoping  the master telescoped identity, exact finite checks, and
               the two corollary families
  catalog      the identity registry plus the verification drivers
  limits       classical pi-series with tail bounds and the Richardson
               ladder that carries q -> 1
  cli          the qpi command (list / verify / limit / report)
"""

__version__ = "1.0.0"

from .errors import (
    DomainError,
    EscalationError,
    InstabilityError,
    NonConvergenceError,
    PoleError,
    QpiError,
    UsageError,
)
from .precision import (
    BigReal,
    DEFAULT_DIGITS,
    DEFAULT_GUARD,
    ErrorBound,
    MIN_DIGITS,
    Rational,
    as_rational,
    decimal_str,
    eval_with_guard,
    pi_value,
    working_precision,
)
from .qcore import (
    DEFAULT_MAX_TERMS,
    PhiSeriesSpec,
    SeriesResult,
    phi_series,
    phi_series_direct,
    qpoch_finite,
    qpoch_infinite,
    qpoch_product,
    sum_terms_raw,
)
from .telescoping import (
    CoefficientVector,
    TelescopeSpec,
    corollary_a,
    corollary_b,
    finite_sum_identity,
    infinite_identity,
    nabla_check,
    product_side,
    series_side,
    tau,
)
from .catalog import (
    FAMILIES,
    IdentityRecord,
    VerificationReport,
    corrupted_copy,
    eval_side,
    get_record,
    list_identities,
    verify_all,
    verify_identity,
    verify_pair,
)
from .limits import (
    CLASSICAL,
    LimitProbe,
    ProbeResult,
    SHIPPED_PROBES,
    classical_sum,
    classical_target,
    get_probe,
    probe_target,
    q_to_1_limit,
    sine_product_limit,
    sine_product_sum,
    sine_product_target,
)

__all__ = [name for name in dir() if not name.startswith("_")]
