"""CLI surface: argument handling, exit codes, JSON documents.

The exit code contract is the load-bearing part: 0 all-accepted, 1 failed
verification or missed probe, 2 usage or domain problem, 3 inconclusive
with nothing failed. Tests call main() directly with argv lists and parse
captured stdout; the report tests write into tmp_path.
"""

import json

import pytest

from qpi.cli import _exit_for, main


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def _strip_volatile(doc):
    doc = dict(doc)
    doc.pop("generated_at", None)
    doc["results"] = [
        {k: v for k, v in r.items() if k != "wall_ms"} for r in doc["results"]
    ]
    if doc.get("limit_probes"):
        doc["limit_probes"] = [
            {k: v for k, v in p.items() if k != "wall_ms"}
            for p in doc["limit_probes"]
        ]
    return doc


# ---------------------------------------------------------------------------
# exit code policy
# ---------------------------------------------------------------------------

def test_exit_for_never_conflates_outcomes():
    assert _exit_for([]) == 0
    assert _exit_for(["pass", "pass"]) == 0
    assert _exit_for(["pass", "display-sensitivity"]) == 0
    assert _exit_for(["pass", "inconclusive"]) == 3
    assert _exit_for(["fail", "inconclusive"]) == 1
    assert _exit_for(["pass", "fail"]) == 1


def test_argparse_usage_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


# ---------------------------------------------------------------------------
# list
# ---------------------------------------------------------------------------

def test_list_family_table(capsys):
    assert main(["list", "--family", "q-main"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 + 7  # header, rule, seven records
    assert lines[0].split()[:2] == ["id", "family"]
    for line in lines[2:]:
        assert line.split()[1] == "q-main"


def test_list_whole_registry(capsys):
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 + 33


def test_list_unknown_family(capsys):
    assert main(["list", "--family", "nosuch"]) == 2
    assert "domain error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def test_verify_single_identity_json(capsys):
    assert main(["verify", "sun", "--q", "1/2", "--json"]) == 0
    doc = _json_out(capsys)
    assert doc["schema_version"] == 1
    assert len(doc["results"]) == 1
    r = doc["results"][0]
    assert r["pass"] is True
    assert r["point"] == {"q": "1/2"}
    assert float(r["residual"]) < 1e-50


def test_verify_rejects_q_outside_domain(capsys):
    assert main(["verify", "sun", "--q", "2"]) == 2
    capsys.readouterr()


def test_verify_unknown_identity(capsys):
    assert main(["verify", "nosuch"]) == 2
    capsys.readouterr()


def test_verify_argument_conflicts(capsys):
    assert main(["verify", "sun", "--all"]) == 2
    assert main(["verify"]) == 2
    capsys.readouterr()


def test_verify_q_flag_needs_a_q_parameter(capsys):
    assert main(["verify", "pi-a", "--q", "1/2"]) == 2
    capsys.readouterr()


def test_verify_point_merges_onto_defaults(capsys):
    code = main(["verify", "8phi7-sum", "--point", "a=1/2,c=-1/2,d=3/5",
                 "--q", "3/5", "--json"])
    assert code == 0
    doc = _json_out(capsys)
    assert len(doc["results"]) == 1
    assert doc["results"][0]["point"]["q"] == "3/5"


def test_verify_tolerance_floor(capsys):
    assert main(["verify", "sun", "--q", "1/2", "--digits", "30",
                 "--tol", "1e-50"]) == 2
    assert "floor" in capsys.readouterr().err


def test_verify_family_all_plain_output(capsys):
    assert main(["verify", "--all", "--family", "telescoping"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[-1].startswith("summary:")
    assert "thm-aa" in out


def test_verify_custom_q_grid(capsys):
    assert main(["verify", "--all", "--family", "q-main", "--q-grid",
                 "1/5", "--json"]) == 0
    doc = _json_out(capsys)
    assert len(doc["results"]) == 7
    assert {r["point"]["q"] for r in doc["results"]} == {"1/5"}
    assert main(["verify", "--all", "--q-grid", "3/2"]) == 2
    capsys.readouterr()


def test_verify_env_digits(monkeypatch, capsys):
    monkeypatch.setenv("QPI_DIGITS", "25")
    assert main(["verify", "thm-d", "--q", "1/2", "--json"]) == 0
    doc = _json_out(capsys)
    assert doc["results"][0]["digits"] == 25
    assert doc["config"]["digits"] == 25

    monkeypatch.setenv("QPI_DIGITS", "abc")
    assert main(["verify", "thm-d", "--q", "1/2"]) == 2
    monkeypatch.setenv("QPI_DIGITS", "5")
    assert main(["verify", "thm-d", "--q", "1/2"]) == 2
    capsys.readouterr()


# ---------------------------------------------------------------------------
# limit
# ---------------------------------------------------------------------------

def test_limit_probe_on_target(capsys):
    assert main(["limit", "thm-e"]) == 0
    out = capsys.readouterr().out
    assert "target" in out
    assert "diagnostic" in out


def test_limit_json_document(capsys):
    assert main(["limit", "thm-e", "--json"]) == 0
    doc = _json_out(capsys)
    probe = doc["limit_probes"][0]
    assert probe["id"] == "thm-e"
    assert probe["pass"] is True
    assert float(probe["abs_error"]) < 1e-6


def test_limit_over_normalized_is_flagged(capsys):
    assert main(["limit", "thm-e", "--exponent", "1"]) == 1
    assert "numerically zero" in capsys.readouterr().out


def test_limit_under_normalized_is_unstable(capsys):
    assert main(["limit", "thm-c", "--exponent", "0"]) == 1
    assert "unstable" in capsys.readouterr().out


def test_limit_usage_errors(capsys):
    assert main(["limit", "nosuch"]) == 2
    assert main(["limit", "thm-e", "--exponent", "-2"]) == 2
    assert main(["limit", "thm-e", "--levels", "9:4"]) == 2
    capsys.readouterr()


def test_limit_custom_levels(capsys):
    assert main(["limit", "thm-e", "--levels", "3:11"]) == 0
    capsys.readouterr()


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def test_report_writes_a_stable_document(tmp_path, capsys):
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    for out in (first, second):
        code = main(["report", "--out", str(out), "--family", "q-main",
                     "--no-probes"])
        assert code == 0
        assert capsys.readouterr().out.startswith("wrote")

    with open(first, encoding="utf-8") as fh:
        doc_a = json.load(fh)
    with open(second, encoding="utf-8") as fh:
        doc_b = json.load(fh)
    assert doc_a["schema_version"] == 1
    assert len(doc_a["results"]) == 21  # seven records, three grid points
    assert all(r["pass"] for r in doc_a["results"])
    assert "limit_probes" not in doc_a
    assert _strip_volatile(doc_a) == _strip_volatile(doc_b)


def test_report_parallel_matches_serial(tmp_path, capsys):
    serial = tmp_path / "serial.json"
    parallel = tmp_path / "parallel.json"
    assert main(["report", "--out", str(serial), "--family", "telescoping",
                 "--no-probes"]) == 0
    assert main(["report", "--out", str(parallel), "--family", "telescoping",
                 "--no-probes", "--workers", "3"]) == 0
    capsys.readouterr()
    with open(serial, encoding="utf-8") as fh:
        doc_a = json.load(fh)
    with open(parallel, encoding="utf-8") as fh:
        doc_b = json.load(fh)
    a = _strip_volatile(doc_a)
    b = _strip_volatile(doc_b)
    a["config"].pop("workers")
    b["config"].pop("workers")
    assert a == b


def test_report_unwritable_path(tmp_path, capsys):
    target = tmp_path / "missing-dir" / "out.json"
    assert main(["report", "--out", str(target), "--family", "telescoping",
                 "--no-probes"]) == 2
    assert "cannot write" in capsys.readouterr().err
