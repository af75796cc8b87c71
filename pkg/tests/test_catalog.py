"""Registry shape, guarded verification, and per-family spot checks.

The q-series families carry their own cross-checks (independent left and
right evaluators per record), so the tests here pin the registry layout,
the exact records, the bound discipline, and the failure paths: a corrupted
right-hand side must fail, a precision-chasing side must land inconclusive,
and the one display-sensitive record must report itself reproducibly.
"""

import json
import random

import pytest
from gmpy2 import mpfr, mpq

from qpi.catalog import (
    FAMILIES,
    corrupted_copy,
    eval_side,
    get_record,
    list_identities,
    verify_all,
    verify_identity,
    verify_pair,
)
from qpi.errors import DomainError
from qpi.precision import BigReal, ErrorBound, working_precision
from qpi.qcore import SeriesResult

_Q_MAIN = ("q-ramanujan-a", "q-ramanujan-b", "sun", "thm-b", "thm-c", "thm-d",
           "thm-e")
_PROOF_CHAIN = ("2phi2-sum", "5phi4-special", "8phi7-sum", "8phi7-transform",
                "chu-cubic-limit", "chu-cubic-terminating", "chu-quadratic",
                "chu-quadratic-limit", "chu-quadratic-special", "gr-cubic",
                "thm-b-bridge")
_TELESCOPING = ("q-guillera-b", "q-wei-a", "q-wei-b", "thm-aa")
_CLASSICAL = ("guillera-a", "guillera-b", "pi-a", "pi-b", "pi-c",
              "ramanujan-a", "ramanujan-b", "wei-a", "wei-b", "weisstein-a",
              "weisstein-b")


# ---------------------------------------------------------------------------
# registry layout
# ---------------------------------------------------------------------------

def test_registry_families_and_ids():
    assert FAMILIES == ("classical", "q-main", "q-proof-chain", "telescoping")
    recs = list_identities()
    assert len(recs) == 33
    by_family = {}
    for r in recs:
        by_family.setdefault(r.family, []).append(r.id)
    assert tuple(sorted(by_family["q-main"])) == _Q_MAIN
    assert tuple(sorted(by_family["q-proof-chain"])) == _PROOF_CHAIN
    assert tuple(sorted(by_family["telescoping"])) == _TELESCOPING
    assert tuple(sorted(by_family["classical"])) == _CLASSICAL


def test_list_identities_filters_and_rejects_unknown_family():
    assert [r.id for r in list_identities("q-main")] == sorted(_Q_MAIN)
    assert len(list_identities("all")) == 33
    with pytest.raises(DomainError):
        list_identities("nosuch")


def test_get_record_unknown_id():
    with pytest.raises(DomainError):
        get_record("nosuch")


def test_every_record_has_usable_default_points():
    for rec in list_identities():
        assert rec.default_points
        for point in rec.default_points:
            assert set(point) == set(rec.param_names())


def test_proof_chain_points_stay_on_the_small_rational_palette():
    allowed = {mpq(1, 3), mpq(2, 5), mpq(1, 2), mpq(3, 5)}
    for rec in list_identities("q-proof-chain"):
        for point in rec.default_points:
            for name, value in point.items():
                if name in ("q", "n"):
                    continue
                assert abs(mpq(value)) in allowed, (rec.id, name, value)


# ---------------------------------------------------------------------------
# eval_side
# ---------------------------------------------------------------------------

def test_eval_side_sun_sides_agree_to_fifty_digits():
    lhs = eval_side("sun", "lhs", {"q": mpq(1, 2)}, digits=60)
    rhs = eval_side("sun", "rhs", {"q": mpq(1, 2)}, digits=60)
    with working_precision(75):
        assert abs(lhs.value.value - rhs.value.value) < mpfr("1e-50")


def test_eval_side_q_zero_degenerates_to_one():
    # only the series side admits q = 0; every summand past k = 0 vanishes
    r = eval_side("thm-d", "lhs", {"q": mpq(0)})
    assert r.value.value == 1
    with pytest.raises(DomainError):
        eval_side("thm-d", "rhs", {"q": mpq(0)})
    with pytest.raises(DomainError):
        eval_side("8phi7-sum", "lhs",
                  {"a": mpq(1, 2), "c": mpq(-1, 2), "d": mpq(3, 5), "q": mpq(0)})


def test_eval_side_validation():
    with pytest.raises(DomainError):
        eval_side("sun", "middle", {"q": mpq(1, 2)})
    with pytest.raises(DomainError):
        eval_side("nosuch", "lhs", {"q": mpq(1, 2)})
    with pytest.raises(DomainError):
        eval_side("sun", "lhs", {})
    with pytest.raises(DomainError):
        eval_side("sun", "lhs", {"q": mpq(1, 2), "extra": 1})


# ---------------------------------------------------------------------------
# exact records
# ---------------------------------------------------------------------------

def test_terminating_cubic_is_exact():
    rep = verify_identity(
        "chu-cubic-terminating",
        {"a": mpq(1, 2), "b": mpq(1, 3), "q": mpq(2, 5), "n": 6},
    )
    assert rep.exact
    assert rep.status == "pass"
    assert rep.tolerance == "0"
    assert rep.residual == 0


def test_terminating_quadratic_is_exact():
    rep = verify_identity(
        "chu-quadratic",
        {"a": mpq(3, 5), "u": mpq(1, 3), "v": mpq(2, 5), "q": mpq(1, 2), "n": 5},
    )
    assert rep.exact
    assert rep.residual == 0


def test_terminating_records_reject_bad_depth():
    base = {"a": mpq(1, 2), "b": mpq(1, 3), "q": mpq(2, 5)}
    with pytest.raises(DomainError):
        verify_identity("chu-cubic-terminating", dict(base, n=0))
    with pytest.raises(DomainError):
        verify_identity("chu-cubic-terminating", dict(base, n=500))
    with pytest.raises(DomainError):
        verify_identity("chu-cubic-terminating", dict(base, n=mpq(3, 2)))


# ---------------------------------------------------------------------------
# guarded verification
# ---------------------------------------------------------------------------

def test_verify_first_wz_pair_tight_tolerance():
    rep = verify_identity("q-ramanujan-a", {"q": mpq(1, 2)}, digits=60,
                          tolerance="1e-50")
    assert rep.passed
    assert rep.digits == 60


def test_verify_thm_e_at_eighty_digits():
    rep = verify_identity("thm-e", {"q": mpq(3, 4)}, digits=80,
                          tolerance="1e-60")
    assert rep.passed


def test_verify_uses_first_default_point_when_none_given():
    rep = verify_identity("sun")
    assert rep.point == {"q": mpq(1, 4)}
    assert rep.passed


def test_qmain_bounds_stay_under_the_guard_budget():
    for rid in _Q_MAIN:
        rep = verify_identity(rid, {"q": mpq(1, 2)})
        assert rep.passed, rid
        with working_precision(30):
            assert rep.bound.combined < mpfr("1e-55"), rid


def test_bridge_record_connects_the_two_series():
    for q in (mpq(1, 2), mpq(3, 4)):
        rep = verify_identity("thm-b-bridge", {"q": q})
        assert rep.passed, q


def test_quadratic_limit_meets_its_special_point():
    # the limit record evaluated on the substituted parameter set must agree
    # with the standalone special-point record, side by side
    q = mpq(1, 2)
    sub = {"a": q ** 3, "u": q ** 2, "v": q ** 2, "q": q}
    for side in ("lhs", "rhs"):
        a = eval_side("chu-quadratic-limit", side, sub, digits=60)
        b = eval_side("chu-quadratic-special", side, {"q": q}, digits=60)
        with working_precision(75):
            assert abs(a.value.value - b.value.value) < mpfr("1e-55"), side


def test_domain_guards_on_proof_chain_records():
    # quadratic family collapses when a = q
    with pytest.raises(DomainError):
        verify_identity(
            "chu-quadratic",
            {"a": mpq(1, 3), "u": mpq(1, 2), "v": mpq(2, 5), "q": mpq(1, 3),
             "n": 4},
        )
    # transformation record requires both arguments inside the unit disc
    with pytest.raises(DomainError):
        verify_identity(
            "8phi7-transform",
            {"a": mpq(3, 5), "b": mpq(1, 3), "c": mpq(1, 3), "d": mpq(1, 3),
             "e": mpq(1, 3), "f": mpq(1, 3), "q": mpq(3, 5)},
        )


def test_gr_cubic_reports_display_sensitivity_reproducibly():
    first = verify_identity("gr-cubic")
    second = verify_identity("gr-cubic")
    assert first.status == "display-sensitivity"
    assert second.status == "display-sensitivity"
    assert len(first.notes) == 2
    assert first.notes == second.notes
    assert first.as_dict()["residual"] == second.as_dict()["residual"]


def test_inconclusive_when_a_side_chases_its_precision():
    # a side whose value moves with the working precision can never clear the
    # doubled-guard cross-check; the ladder must give up, not report pass
    def jittery(d):
        return SeriesResult(BigReal(mpfr(d), d), 1, ErrorBound.zero())

    def steady(d):
        return SeriesResult(BigReal(mpfr(1), d), 1, ErrorBound.zero())

    rep = verify_pair("jitter-probe", "q-main", {"q": mpq(1, 2)},
                      jittery, steady, digits=30, tolerance="1e-20")
    assert rep.status == "inconclusive"
    assert not rep.passed
    assert rep.notes


# ---------------------------------------------------------------------------
# verify_all
# ---------------------------------------------------------------------------

def test_verify_all_subset_is_sorted_and_gridded():
    reports = verify_all(ids=["thm-c", "sun"])
    assert [r.id for r in reports] == ["sun"] * 3 + ["thm-c"] * 3
    assert [r.point["q"] for r in reports[:3]] == [mpq(1, 4), mpq(1, 2),
                                                   mpq(3, 4)]
    assert all(r.passed for r in reports)


def test_verify_all_policy_tolerance():
    reports = verify_all(digits=30, tolerance="1e-5")
    for rep in reports:
        assert rep.status in ("pass", "display-sensitivity"), rep.id


def test_verify_all_custom_q_grid():
    reports = verify_all(ids=["thm-d"], q_grid=(mpq(1, 5), mpq(2, 5)))
    assert [r.point["q"] for r in reports] == [mpq(1, 5), mpq(2, 5)]


def test_corrupted_rhs_fails_and_clean_records_do_not():
    registry = {rid: get_record(rid) for rid in ("thm-c", "weisstein-a")}
    bad = corrupted_copy("sun")
    registry[bad.id] = bad
    reports = verify_all(registry=registry)
    statuses = {}
    for rep in reports:
        statuses.setdefault(rep.id, set()).add(rep.status)
    assert statuses["sun"] == {"fail"}
    assert statuses["thm-c"] == {"pass"}
    assert statuses["weisstein-a"] == {"pass"}


def test_corrupted_exact_pair_fails_too():
    bad = corrupted_copy("chu-cubic-terminating")
    reports = verify_all(registry={bad.id: bad})
    assert reports
    assert all(r.status == "fail" for r in reports)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

def test_report_as_dict_round_trips_through_json():
    rep = verify_identity("thm-c", {"q": mpq(1, 2)})
    d = rep.as_dict()
    assert d["pass"] is True
    assert d["status"] == "pass"
    assert d["id"] == "thm-c"
    assert d["point"] == {"q": "1/2"}
    assert isinstance(d["terms"], int)
    again = json.loads(json.dumps(d))
    assert again == d
