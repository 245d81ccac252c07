import json
import random

import pytest

from autotamp import harness
from autotamp.llm import CallbackClient

from . import replay

SUITE = replay.manifest()["houseworld_suite"]


def suite(**kw):
    cases = [replay.case(cid) for cid in SUITE["cases"]]
    return harness.run_suite(cases, "autotamp", replay.client("houseworld_suite"), **kw)


def test_three_case_suite_with_one_adversarial_fixture():
    report = suite()
    assert report.summary["successes"] == 2 and report.summary["cases"] == 3
    assert [r["success"] for r in report.records] == [True, True, False]
    assert report.summary["groups"] == {"houseworld1/autotamp": {"cases": 3, "successes": 2}}


def test_timing_table_rows_and_percentiles():
    table = suite().summary["timings"]
    assert set(table) == {"total", "client", "planner"}
    for row in table.values():
        assert set(row) == {10, 50, 90} and row[10] <= row[50] <= row[90]


def test_nearest_rank_percentile():
    xs = [15, 20, 35, 40, 50]
    assert [harness.percentile(xs, q) for q in (5, 30, 40, 50, 100)] == [15, 20, 20, 35, 50]
    assert harness.percentile([3.0], 90) == 3.0
    assert harness.percentile([], 50) != harness.percentile([], 50)  # nan


def test_timeout_becomes_a_failed_record():
    c = replay.case("houseworld1-example")
    rec = harness.run_case(c, "autotamp", replay.client("semantic_approve_first"), timeout=0.0)
    assert rec["success"] is False and "time" in rec["message"]


def test_crashing_client_becomes_a_failed_record():
    c = replay.case("houseworld1-example")

    def boom(t):
        raise ZeroDivisionError("bad client")
    rec = harness.run_case(c, "autotamp", CallbackClient(boom))
    assert rec["success"] is False and "bad client" in rec["message"]


def test_success_is_recomputed_from_the_stored_trajectory():
    rec = suite().records[0]
    assert harness.verify_record(rec)
    forged = json.loads(json.dumps(rec))
    forged["trajectory"] = {"robot": [[3.75, 3.75, 0.0], [3.75, 3.75, 10.0]]}
    assert not harness.verify_record(forged)
    forged["trajectory"] = None
    assert not harness.verify_record(forged)
    lines = harness.format_table([forged, rec]).splitlines()
    assert lines[1].split()[1:3] == ["2", "1"]


def test_aggregates_do_not_depend_on_case_order():
    records = list(suite(timings=False).records)
    shuffled = records[:]
    random.Random(0).shuffle(shuffled)
    shuffled.reverse()
    assert harness.summarize(records) == harness.summarize(shuffled)


def test_reports_are_byte_reproducible_and_parallel_safe():
    a = suite(timings=False).to_jsonl()
    b = suite(timings=False, parallelism=3).to_jsonl()
    assert a == b
    assert [r["case_id"] for r in harness.read_jsonl(a)] == SUITE["cases"]


def test_table_text():
    text = harness.format_table(list(suite().records))
    assert "houseworld1/autotamp" in text and "66.7%" in text
    assert all(row in text for row in ("total", "client", "planner", "p10", "p50", "p90"))


def test_run_suite_rejects_bad_arguments():
    with pytest.raises(ValueError):
        harness.run_suite([], "oracle", replay.client("houseworld_suite"))
    with pytest.raises(ValueError):
        harness.run_suite([], "autotamp", replay.client("houseworld_suite"), parallelism=0)


def test_load_cases_file_accepts_object_or_list():
    d = replay.case("houseworld1-example").to_dict()
    assert len(harness.load_cases_file(json.dumps(d))) == 1
    assert len(harness.load_cases_file(json.dumps([d, d]))) == 2
