import json
import math

import numpy as np
import pytest

from latdiff import validate as va
from latdiff.core import InitialState
from latdiff.errors import InvalidParameter, NoSignChangeError


def test_identities_suite_passes():
    reports = va.run_suite("identities", jobs=1)
    assert len(reports) == 5 + 3 + 2 + 6
    assert all(r.passed for r in reports), [r.case_id for r in reports if not r.passed]
    assert [r.case_id for r in reports] == sorted(r.case_id for r in reports)


def test_small_propagation_suites_pass():
    grid = {"states": [InitialState.delta().to_dict(), InitialState.gaussian(3.0).to_dict()], "t_end": 4.0}
    for suite in ("closed_system", "hsr", "coherence_law"):
        reports = va.run_suite(suite, grid, jobs=1)
        assert reports and all(r.passed for r in reports)
        for r in reports:
            assert r.max_rel_err <= r.tolerance or r.max_abs_err <= va.ABS_FLOOR
            assert r.first_fail_index is None and r.error is None


def test_reports_are_deterministic():
    a = [r.to_dict() for r in va.run_suite("identities", jobs=1)]
    b = [r.to_dict() for r in va.run_suite("identities", jobs=1)]
    assert a == b


def test_unknown_grid_key_rejected():
    with pytest.raises(InvalidParameter):
        va.build_cases("hsr", {"bogus": 1})
    with pytest.raises(InvalidParameter):
        va.run_suite("nonsense")


def test_exception_recorded_as_failure():
    case = va.Case("bad", "diffusivity", {"state": {"kind": "gaussian", "w": -1.0}, "J": 1.0,
                                          "Gamma": 0.0, "t_end": 1.0})
    r = va.run_case(case)
    assert not r.passed and r.error and r.max_abs_err is None
    assert r.tolerance == va.TOL_DEFAULT


def test_failure_records_first_index():
    case = va.Case("x", "relation", {})
    t = np.linspace(0, 1, 5)
    r = va._compare(case, t, np.array([0, 0, 0.5, 1, 1.0]), np.ones(5), 1e-3, None)
    assert not r.passed
    assert r.first_fail_index == 0 and r.first_fail_time == 0.0
    assert r.max_abs_err == 1.0 and r.max_rel_err == 1.0


def test_write_report(tmp_path):
    reports = va.run_suite("identities", jobs=1)
    path = tmp_path / "r.json"
    va.write_report(reports, path)
    data = json.loads(path.read_text())
    assert len(data) == len(reports)
    keys = {"case_id", "max_abs_err", "max_rel_err", "tolerance", "passed", "grid",
            "first_fail_index", "first_fail_time", "error"}
    assert all(set(d) == keys for d in data)


def test_default_jobs(monkeypatch):
    monkeypatch.setenv("LATDIFF_JOBS", "3")
    assert va.default_jobs() == 3
    monkeypatch.delenv("LATDIFF_JOBS")
    assert va.default_jobs() >= 1


def test_parallel_matches_serial():
    grid = {"states": [InitialState.delta().to_dict(), InitialState.gaussian(1.0).to_dict()],
            "Gamma": [1.0], "t_end": 2.0}
    a = [r.to_dict() for r in va.run_suite("hsr", grid, jobs=1)]
    b = [r.to_dict() for r in va.run_suite("hsr", grid, jobs=2)]
    assert a == b


def test_critical_scan_standing():
    k = va.critical_scan("standing", 0.0, 2.0, [0.6, 1.0], xtol=1e-6)
    assert k == pytest.approx(math.pi / 4, abs=1e-4)


def test_critical_scan_without_sign_change():
    with pytest.raises(NoSignChangeError):
        va.critical_scan("standing", 0.0, 2.0, [0.1, 0.3])
    with pytest.raises(InvalidParameter):
        va.critical_scan("traveling", 0.0, 5.0, [0.1, 1.0])
    with pytest.raises(InvalidParameter):
        va.critical_scan("standing", 0.0, 2.0, [0.1])
