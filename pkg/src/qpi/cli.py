"""Command-line harness: list, verify, limit, report.

Exit codes keep four outcomes apart and never conflate them:

    0   everything selected passed (display-sensitivity counts as an
        accepted, documented outcome, not a failure)
    1   at least one verification failed, or a limit probe missed or
        went unstable
    2   usage or domain error (bad flag, unknown id, parameter outside
        its range, unwritable output path)
    3   at least one report came back inconclusive (precision escalation
        exhausted) and nothing outright failed

Reports are JSON, schema version 1. All numeric payloads are decimal
strings rendered from the high-precision values, never binary floats;
parameter points are exact fraction strings. Two runs with the same
configuration produce byte-identical documents apart from the generated_at
timestamp and the wall_ms timings.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import json
import os
import sys
import time
from dataclasses import dataclass

from gmpy2 import mpfr

from . import __version__, catalog, limits
from .errors import (
    DomainError,
    InstabilityError,
    QpiError,
    UsageError,
)
from .precision import (
    DEFAULT_DIGITS,
    MIN_DIGITS,
    as_rational,
    decimal_str,
    working_precision,
)

SCHEMA_VERSION = 1
_ENV_DIGITS = "QPI_DIGITS"
_PROBE_TOLERANCE = "1e-6"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Validated knobs for one CLI invocation."""

    digits: int | None = None          # None: each record uses its own
    tolerance: str | None = None       # None: each record uses its own
    q_grid: tuple = catalog.DEFAULT_Q_GRID
    workers: int = 1
    out: str | None = None
    format_version: int = SCHEMA_VERSION

    def as_dict(self):
        return {
            "digits": self.digits,
            "tolerance": self.tolerance,
            "q_grid": [str(g) for g in self.q_grid],
            "workers": self.workers,
            "format_version": self.format_version,
        }


def _env_digits():
    raw = os.environ.get(_ENV_DIGITS)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{_ENV_DIGITS} must be an integer, got {raw!r}")
    if value < MIN_DIGITS:
        raise UsageError(f"{_ENV_DIGITS} must be at least {MIN_DIGITS}")
    return value


def _build_config(args):
    digits = getattr(args, "digits", None)
    if digits is None:
        digits = _env_digits()
    if digits is not None and digits < MIN_DIGITS:
        raise UsageError(f"--digits must be at least {MIN_DIGITS}")
    tolerance = getattr(args, "tol", None)
    if tolerance is not None:
        check_digits = digits if digits is not None else DEFAULT_DIGITS
        with working_precision(check_digits + 20):
            try:
                tol_val = mpfr(tolerance)
            except ValueError:
                raise UsageError(f"cannot parse tolerance {tolerance!r}")
            floor = mpfr(10) ** (10 - check_digits)
            if not tol_val > 0:
                raise UsageError("tolerance must be positive")
            if tol_val < floor:
                raise UsageError(
                    f"tolerance {tolerance} is below the trustworthy floor "
                    f"1e-{check_digits - 10} for {check_digits} digits")
    grid = catalog.DEFAULT_Q_GRID
    raw_grid = getattr(args, "q_grid", None)
    if raw_grid:
        grid = tuple(_parse_rational(g, "--q-grid") for g in raw_grid.split(","))
        for g in grid:
            if not 0 < g < 1:
                raise UsageError(f"q-grid value {g} outside (0,1)")
    workers = getattr(args, "workers", 1) or 1
    if workers < 1:
        raise UsageError("--workers must be at least 1")
    return RunConfig(digits=digits, tolerance=tolerance, q_grid=grid,
                     workers=workers, out=getattr(args, "out", None))


def _parse_rational(text, flag):
    try:
        return as_rational(text)
    except DomainError:
        raise UsageError(f"{flag} expects a rational like 1/2 or 0.25, "
                         f"got {text!r}")


def _parse_point(text):
    point = {}
    for chunk in text.split(","):
        if "=" not in chunk:
            raise UsageError(
                f"--point expects name=value pairs, got {chunk!r}")
        name, _, raw = chunk.partition("=")
        point[name.strip()] = raw.strip()
    return point


# ---------------------------------------------------------------------------
# task execution (worker-safe: arguments and results are plain types)
# ---------------------------------------------------------------------------

def _verify_task(task):
    rid, point_items, digits, tolerance = task
    report = catalog.verify_identity(
        rid, dict(point_items), digits=digits, tolerance=tolerance)
    return report.as_dict()


def _probe_dict(result, wall_ms):
    probe = result.probe
    return {
        "id": probe.identity_id,
        "exponent": result.exponent,
        "levels": f"{probe.level_lo}:{probe.level_hi}",
        "value": result.value.to_decimal(result.digits),
        "target": result.target.to_decimal(result.digits),
        "abs_error": result.abs_error.to_decimal(6),
        "diagnostic": result.diagnostic.to_decimal(6),
        "digits": result.digits,
        "pass": bool(result.abs_error <= mpfr(_PROBE_TOLERANCE)),
        "wall_ms": round(wall_ms, 3),
    }


def _probe_task(task):
    pid, digits = task
    started = time.perf_counter()
    try:
        result = limits.q_to_1_limit(pid, digits=digits)
    except InstabilityError as exc:
        return {"id": pid, "pass": False, "error": str(exc)}
    return _probe_dict(result, (time.perf_counter() - started) * 1000.0)


def _run_tasks(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _point_items(point):
    return tuple((k, str(v)) for k, v in point.items())


def _verify_tasks_for(records, config):
    tasks = []
    for record in records:
        if record.param_names() == ("q",):
            points = tuple({"q": g} for g in config.q_grid)
        else:
            points = record.default_points
        for pt in points:
            tasks.append((record.id, _point_items(pt),
                          config.digits, config.tolerance))
    return tasks


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_list(args):
    family = args.family
    records = catalog.list_identities(family)
    headers = ("id", "family", "anchor", "parameters")
    rows = []
    for r in records:
        anchor = r.anchor if len(r.anchor) <= 60 else r.anchor[:57] + "..."
        rows.append((r.id, r.family, anchor, " ".join(r.param_names()) or "-"))
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    print("  ".join("-" * widths[i] for i in range(len(headers))))
    for row in rows:
        print("  ".join(row[i].ljust(widths[i]) for i in range(len(headers))))
    return 0


def _exit_for(statuses):
    if any(s == "fail" for s in statuses):
        return 1
    if any(s == "inconclusive" for s in statuses):
        return 3
    return 0


def _emit_json(payload):
    print(json.dumps(payload, indent=2))


def _json_document(config, results, probes=None):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "generated_at": datetime.datetime.now(datetime.timezone.utc)
        .isoformat(timespec="seconds"),
        "config": config.as_dict(),
        "results": results,
    }
    if probes is not None:
        doc["limit_probes"] = probes
    return doc


def cmd_verify(args):
    config = _build_config(args)
    if args.identity is None and not args.all:
        raise UsageError("name an identity or pass --all")
    if args.identity is not None and args.all:
        raise UsageError("--all does not take an identity name")

    if args.all:
        records = catalog.list_identities(args.family)
        tasks = _verify_tasks_for(records, config)
        results = _run_tasks(_verify_task, tasks, config.workers)
    else:
        record = catalog.get_record(args.identity)
        override = {}
        if args.point:
            override.update(_parse_point(args.point))
        if args.q is not None:
            if "q" not in record.param_names():
                raise UsageError(f"{record.id} has no parameter q")
            override["q"] = _parse_rational(args.q, "--q")
        if override:
            missing = [n for n in record.param_names() if n not in override]
            base = dict(record.default_points[0])
            points = ({**base, **override},) if missing else (override,)
        else:
            points = record.default_points
        results = [
            _verify_task((record.id, _point_items(pt),
                          config.digits, config.tolerance))
            for pt in points
        ]

    statuses = [r["status"] for r in results]
    if args.json:
        _emit_json(_json_document(config, results))
    else:
        for r in results:
            point = " ".join(f"{k}={v}" for k, v in r["point"].items())
            residual = r["residual"] if r["residual"] is not None else "-"
            print(f"{r['status']:20s} {r['id']:24s} [{point}] "
                  f"residual={residual}")
        counts = {s: statuses.count(s) for s in sorted(set(statuses))}
        print("summary:", ", ".join(f"{v} {k}" for k, v in counts.items()))
    return _exit_for(statuses)


def cmd_limit(args):
    config = _build_config(args)
    probe = limits.get_probe(args.identity)
    if args.levels:
        lo, _, hi = args.levels.partition(":")
        try:
            probe = limits.LimitProbe(
                identity_id=probe.identity_id, exponent=probe.exponent,
                level_lo=int(lo), level_hi=int(hi))
        except (ValueError, DomainError) as exc:
            raise UsageError(f"bad --levels {args.levels!r}: {exc}")
    digits = config.digits if config.digits is not None else 40
    shipped_exponent = probe.exponent
    exponent = shipped_exponent if args.exponent is None else args.exponent
    if exponent < 0:
        raise UsageError("--exponent must be a nonnegative integer")

    started = time.perf_counter()
    try:
        result = limits.q_to_1_limit(probe, digits=digits, exponent=exponent)
    except InstabilityError as exc:
        payload = {"id": probe.identity_id, "exponent": exponent,
                   "pass": False, "error": str(exc)}
        if args.json:
            _emit_json(_json_document(config, [], [payload]))
        else:
            print(f"unstable: {exc}")
        return 1
    wall_ms = (time.perf_counter() - started) * 1000.0

    entry = _probe_dict(result, wall_ms)
    on_target = entry["pass"]
    degenerate = False
    if exponent != shipped_exponent:
        # a wrong normalization exponent has no stored target; the honest
        # outcomes are a vanishing extrapolant (exponent too high) or the
        # instability above (too low)
        with working_precision(digits + 10):
            degenerate = abs(mpfr(result.value.value)) < mpfr("1e-8")
        entry["pass"] = not degenerate
        entry["target"] = None
        entry["abs_error"] = None

    if args.json:
        _emit_json(_json_document(config, [], [entry]))
    else:
        print(f"{probe.identity_id}: (1-q)^{exponent} * series  ->  "
              f"{result.value.to_decimal(min(digits, 30))}")
        if entry["target"] is not None:
            print(f"  target     {result.target.to_decimal(min(digits, 30))}")
            print(f"  abs error  {entry['abs_error']}")
        print(f"  diagnostic {entry['diagnostic']}  (levels "
              f"{probe.level_lo}..{probe.level_hi}, digits {digits})")
        if degenerate:
            print("  extrapolant is numerically zero: the exponent "
                  "over-normalizes this series")
    if exponent == shipped_exponent:
        return 0 if on_target else 1
    return 1 if degenerate else 0


def cmd_report(args):
    config = _build_config(args)
    records = catalog.list_identities(args.family)
    tasks = _verify_tasks_for(records, config)
    results = _run_tasks(_verify_task, tasks, config.workers)

    probes = None
    if not args.no_probes:
        probe_digits = config.digits if config.digits is not None else 40
        probe_tasks = [(pid, probe_digits) for pid in sorted(limits.SHIPPED_PROBES)]
        probes = _run_tasks(_probe_task, probe_tasks, config.workers)

    doc = _json_document(config, results, probes)
    out = config.out or "qpi-report.json"
    try:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise UsageError(f"cannot write report to {out!r}: {exc}")
    statuses = [r["status"] for r in results]
    if probes:
        statuses.extend("pass" if p["pass"] else "fail" for p in probes)
    code = _exit_for(statuses)
    print(f"wrote {out}: {len(results)} verifications"
          + (f", {len(probes)} limit probes" if probes else "")
          + f", exit {code}")
    return code


# ---------------------------------------------------------------------------
# argument surface
# ---------------------------------------------------------------------------

def _add_common(p, digits_default=None):
    p.add_argument("--digits", type=int, default=digits_default,
                   help="working decimal digits (default: per record)")
    p.add_argument("--json", action="store_true",
                   help="emit a JSON document instead of plain text")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qpi",
        description="verify q-series identities and their classical limits",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="show the identity registry")
    p.add_argument("--family", default=None,
                   help="one of: " + ", ".join(catalog.FAMILIES))
    p.set_defaults(fn=cmd_list)

    p = sub.add_parser("verify", help="check identities numerically")
    p.add_argument("identity", nargs="?", default=None)
    p.add_argument("--all", action="store_true",
                   help="verify the whole registry")
    p.add_argument("--family", default=None,
                   help="with --all: restrict to one family")
    p.add_argument("--q", default=None, help="value of q, e.g. 1/2")
    p.add_argument("--point", default=None,
                   help="full parameter point, e.g. a=1/2,b=1/3,q=2/5")
    p.add_argument("--tol", default=None,
                   help="override the acceptance tolerance, e.g. 1e-40")
    p.add_argument("--q-grid", default=None,
                   help="comma-separated q values for q-only records")
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("limit", help="extrapolate a series to q = 1")
    p.add_argument("identity")
    p.add_argument("--exponent", type=int, default=None,
                   help="normalization exponent (default: the shipped one)")
    p.add_argument("--levels", default=None,
                   help="refinement range as lo:hi (default 4:12)")
    _add_common(p)
    p.set_defaults(fn=cmd_limit)

    p = sub.add_parser("report", help="write the full JSON report")
    p.add_argument("--out", default=None,
                   help="output path (default qpi-report.json)")
    p.add_argument("--family", default=None,
                   help="restrict verifications to one family")
    p.add_argument("--no-probes", action="store_true",
                   help="skip the q -> 1 limit probes")
    p.add_argument("--q-grid", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tol", dest="tol", default=None)
    p.add_argument("--digits", type=int, default=None)
    p.set_defaults(fn=cmd_report, json=False)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 2
    except QpiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
