import json

import numpy as np
import pytest

from lorentzot.scenarios import SCENARIOS, UnknownScenarioError, accepted_options, run
from lorentzot.scenarios.report import Report, csv_table


def by_name(report):
    return {a.name: a for a in report.assertions}


@pytest.mark.parametrize("name", ["discontinuity", "unbounded-subdiff", "causal-compactness"])
def test_fast_scenarios_pass_by_default(name):
    report = run(name)
    assert report.passed, [a.to_json() for a in report.failures()]


def test_discontinuity_negative_control():
    report = run("discontinuity", a=0.0)
    failed = {a.name for a in report.failures()}
    assert "phi_at_x0_is_zero" in failed
    assert not report.passed
    assert any(line.startswith("FAIL discontinuity:phi_at_x0_is_zero") for line in report.summary_lines())


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_discontinuity_gap_across_exponents(p):
    report = run("discontinuity", p=p)
    assert report.passed
    gap = by_name(report)["discontinuity_gap"].value
    assert gap == pytest.approx(10.0 - 8 ** (p / 2), abs=1e-9)


def test_unbounded_subdiff_norms_grow():
    report = run("unbounded-subdiff")
    norms = [a.value for a in report.assertions if a.name.startswith("returned_norm_")]
    assert len(norms) == 5
    assert all(b > a for a, b in zip(norms, norms[1:]))


def test_lightcone_coarse_run():
    report = run("lightcone-coupling", n=100)
    assert report.passed
    checks = by_name(report)
    assert checks["strictly_timelike_coupling_exists"].value is True
    assert checks["cost_x0_y1"].value == pytest.approx(-1.62658, abs=1e-5)
    readings = report.records["readings_of_c_x1_y1"]
    assert readings["computed"] == pytest.approx(-(7 ** 0.5))
    assert readings["literal"] == pytest.approx(-2.0)


@pytest.mark.parametrize("n", [16, 64])
def test_causal_compactness_left_anchor(n):
    report = run("causal-compactness", n=n)
    assert report.passed
    counts = report.records["finite_counts"]
    assert counts["right"][0] == 0
    assert counts["left"][0] == counts["left"][1] > 0
    assert report.records["drawn_coupling_strictly_timelike"] is False
    assert report.records["strictly_timelike_coupling_exists"] is False


def test_causal_compactness_right_anchor_reaches_everything():
    report = run("causal-compactness", n=16, anchor_branch="right")
    assert report.passed
    assert "finite_everywhere_from_right_anchor" in by_name(report)


def test_duality_battery_small():
    report = run("duality-battery", trials=30, near_null=5, seed=3)
    assert report.passed
    assert report.records["failures"] == {k: 0 for k in report.records["failures"]}


def test_reports_are_byte_stable():
    assert run("discontinuity").dumps() == run("discontinuity").dumps()
    a = run("duality-battery", trials=12, near_null=3, seed=11)
    b = run("duality-battery", trials=12, near_null=3, seed=11)
    assert a.dumps() == b.dumps()


def test_report_json_is_strict_and_audit_ready():
    text = run("causal-compactness", n=16).dumps()
    data = json.loads(text, parse_constant=lambda c: pytest.fail(f"non-standard constant {c}"))
    for assertion in data["assertions"]:
        assert set(assertion) == {"name", "reference", "value", "expected", "tolerance", "passed"}
        assert assertion["reference"]


def test_report_write(tmp_path):
    report = run("causal-compactness", n=16, plots=True)
    written = report.write(tmp_path, plots=True)
    names = {p.name for p in written}
    assert {"report.json", "potential.csv", "coupling.svg"} <= names
    assert (tmp_path / "coupling.svg").read_text().startswith("<svg")
    assert json.loads((tmp_path / "report.json").read_text())["scenario"] == "causal-compactness"


def test_report_check_semantics():
    report = Report("demo", {})
    assert report.check("exact", "ref", 1.0, 1.0).passed
    assert not report.check("tolerance", "ref", 1.1, 1.0, 0.05).passed
    assert report.check("override", "ref", [1, 2], 3, passed=True).passed
    assert not report.passed
    assert [a.name for a in report.failures()] == ["tolerance"]
    assert report.to_json()["passed"] is False


def test_csv_table_formatting():
    text = csv_table(["a", "b"], [(1, np.inf), (0.5, "x")])
    assert text.splitlines()[0] == "a,b"
    assert len(text.splitlines()) == 3


def test_registry():
    assert set(SCENARIOS) == {"discontinuity", "unbounded-subdiff", "lightcone-coupling", "causal-compactness",
                              "duality-battery", "c11-interpolation"}
    assert "trials" in accepted_options("duality-battery")
    with pytest.raises(UnknownScenarioError):
        run("nosuch")
    # options a scenario does not take are ignored
    assert run("discontinuity", trials=5, seed=None).passed
