import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frdtorus.verify import (
    FAIL,
    NOT_RESOLVABLE,
    PASS,
    CheckResult,
    SuiteOptions,
    VerificationReport,
    continuity_check,
    piece_bound,
    piece_mass_bound,
    power_bound,
    remainder_bound,
    remainder_mass_bound,
    run_suite,
    scaling_collapse,
    threshold_bound,
)

# -- collapse ----------------------------------------------------------------


def test_constant_input_has_ratio_one():
    res = scaling_collapse({1: 2.0, 2: 2.0, 3: 2.0}, power_bound(3, 0.0))
    assert res.ratio == 1.0 and res.passed


@pytest.mark.parametrize("alpha", [1.25, 1.5, 1.75])
@pytest.mark.parametrize("p", [0, 1, 2])
def test_saturating_sequence_collapses(alpha, p):
    d, L, m2 = 2, 3, 1e-2
    b = piece_bound(d, L, alpha, m2, p)
    vals = {j: 0.7 / b.factor({"j": j}) for j in range(1, 6)}
    res = scaling_collapse(vals, b)
    assert res.ratio == pytest.approx(1.0, rel=1e-12)
    assert res.constants == pytest.approx([0.7] * 5, rel=1e-12)


@pytest.mark.parametrize(
    "bound,coords",
    [
        (piece_bound(3, 9, 1.5, 1e-3, 2), [{"j": j} for j in range(1, 6)]),
        (piece_mass_bound(2, 3, 1.25, 1e-2, 1), [{"j": j} for j in range(1, 6)]),
        (remainder_bound(2, 3, 1.5, 1), [{"N": N, "m2": m} for N in (2, 3) for m in (0.1, 1.0, 10.0)]),
        (threshold_bound(3, 3, 1.75, 0), [{"N": N} for N in (2, 3, 4)]),
        (remainder_mass_bound(2, 3, 1), [{"N": N, "m2": m} for N in (2, 3) for m in (0.1, 1.0)]),
    ],
)
def test_every_bound_saturates(bound, coords):
    items = [(c, 3.0 / bound.factor(c)) for c in coords]
    res = scaling_collapse(items, bound)
    assert res.ratio == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=3, max_size=8), st.floats(1.0, 50.0))
def test_ratio_is_max_over_min(vals, acc):
    res = scaling_collapse(dict(enumerate(vals)), power_bound(2, 0.0, acceptance=acc))
    assert res.ratio == pytest.approx(max(vals) / min(vals), rel=1e-14)
    assert res.ratio >= 1.0
    assert res.passed == (res.ratio <= acc)


def test_off_exponent_fails():
    vals = {j: 3.0 ** (-2 * j) for j in range(1, 6)}
    assert scaling_collapse(vals, power_bound(3, 2.0)).passed
    assert not scaling_collapse(vals, power_bound(3, 1.0)).passed


def test_collapse_needs_three_scales():
    with pytest.raises(ValueError):
        scaling_collapse({1: 1.0, 2: 1.0}, power_bound(3, 1.0))


def test_normalize_accepts_bare_scale():
    b = power_bound(3, 1.0)
    assert b.normalize(2.0, 2) == b.normalize(2.0, {"j": 2}) == 18.0


# -- continuity --------------------------------------------------------------


def test_continuity_equal_masses_single_point():
    assert continuity_check([0.5, 0.5], lambda m: np.ones(3), lambda m: np.ones(3), 1.5) == []


@pytest.mark.parametrize("alpha", [1.25, 1.5, 1.75])
def test_continuity_piece_saturates(alpha):
    # G = m^e with e = (2-a)/a: D(m) = e, c_fit = 1, difference = modulus
    e = (2 - alpha) / alpha
    res = continuity_check([0.3, 0.5, 1.2], lambda m: np.array([m**e]),
                           lambda m: np.array([e * m ** (e - 1)]), alpha)
    assert len(res) == 3 and all(r.status == PASS for r in res)
    for r in res:
        assert r.fit["c_fit"] == pytest.approx(1.0, rel=1e-13)
        assert r.fit["value"] == pytest.approx(1.0, rel=1e-12)


def test_continuity_detects_jump():
    res = continuity_check(
        [0.3, 0.5], lambda m: np.array([0.0 if m < 0.4 else 1.0]), lambda m: np.array([0.0]) + 1e-9, 1.5,
    )
    assert res[0].status == FAIL


def test_continuity_remainder_modulus():
    # G = 1/m: |G(a) - G(b)| = |a - b| / (a b), c_fit = max |G'| m^2 = 1
    res = continuity_check([0.2, 0.7, 3.0], lambda m: np.array([1 / m]), lambda m: np.array([-1 / m**2]),
                           1.5, "remainder")
    for r in res:
        assert r.fit["c_fit"] == pytest.approx(1.0, rel=1e-14)
        assert r.fit["value"] == pytest.approx(1.0, rel=1e-12)


def test_continuity_piece_alpha_range():
    with pytest.raises(ValueError):
        continuity_check([0.1, 0.2], lambda m: np.zeros(1), lambda m: np.zeros(1), 1.0)


# -- reports -----------------------------------------------------------------


@pytest.fixture(scope="module")
def small_report(dec_small):
    opts = SuiteOptions(scales=(1, 2, 3))
    return run_suite(dec_small, ["range", "psd", "reconstruct", "fourier"], opts)


def test_small_suite_statuses(small_report):
    by = {c.check_id: c for c in small_report.checks}
    assert by["range.exact.j0"].status == PASS
    assert by["range.exact.j1"].status == NOT_RESOLVABLE
    assert by["range.eps.j0"].status == PASS
    assert by["range.eps.j1"].status == NOT_RESOLVABLE
    assert by["reconstruct.defect"].status == PASS
    assert by["reconstruct.zero_momentum"].status == PASS
    assert by["psd.piece0"].status == by["psd.piece1"].status == by["psd.remainder"].status == PASS
    assert by["psd.total_positive"].status == PASS
    assert small_report.ok


def test_report_json_fields(small_report):
    doc = json.loads(small_report.to_json())
    assert set(doc) == {"parameters", "checks"}
    ids = [c["check_id"] for c in doc["checks"]]
    assert ids == sorted(ids)
    for c in doc["checks"]:
        assert set(c) == {"check_id", "status", "pass", "raw", "normalized", "fit", "reason"}
        assert c["pass"] in (True, False, None)


def test_report_deterministic(dec_small, small_report):
    again = run_suite(dec_small, ["range", "psd", "reconstruct", "fourier"], SuiteOptions(scales=(1, 2, 3)))
    assert again.to_json() == small_report.to_json()
    assert again.to_csv() == small_report.to_csv()


def test_report_csv(small_report):
    rows = list(csv.DictReader(io.StringIO(small_report.to_csv())))
    assert len(rows) == len(small_report.checks)
    assert list(rows[0]) == ["check_id", "status", "pass", "metric", "value", "threshold", "reason"]
    for r in rows:
        assert r["pass"] in ("true", "false", "")
        if r["value"] and r["value"] not in ("true", "false"):
            float(r["value"])
        assert not r["value"].startswith("'")


def test_report_write(tmp_path, small_report):
    small_report.write(tmp_path / "r" / "report.json")
    assert (tmp_path / "r" / "report.json").read_text() == small_report.to_json()
    assert (tmp_path / "r" / "report.csv").read_text() == small_report.to_csv()


def test_nonfinite_values_serialize():
    rep = VerificationReport({"x": math.inf})
    rep.add(CheckResult("a", FAIL, fit={"value": math.nan}))
    doc = json.loads(rep.to_json())
    assert doc["parameters"]["x"] == "inf" and doc["checks"][0]["fit"]["value"] == "nan"
    assert not rep.ok and rep.failures()[0].check_id == "a"


def test_unknown_suite(dec_small):
    with pytest.raises(ValueError):
        run_suite(dec_small, ["nope"])


def test_scaling_suite_on_window(dec_small):
    rep = run_suite(dec_small, ["scaling"], SuiteOptions(scales=(1, 2, 3)))
    ids = sorted(c.check_id for c in rep.checks)
    assert ids == ["scaling.piece.p0", "scaling.piece.p1", "scaling.piece.p2"]
    assert all(c.status in (PASS, FAIL) for c in rep.checks)


def test_scaling_too_few_scales(dec_small):
    rep = run_suite(dec_small, ["scaling"], SuiteOptions(scales=(1, 2)))
    assert rep.checks[0].status == NOT_RESOLVABLE
