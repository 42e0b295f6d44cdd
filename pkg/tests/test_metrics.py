import copy

import numpy as np
import pytest

from mgsim.metrics import compare_cases, dispersion, electrical_distances, relative_margin
from mgsim.scenario import load_scenario
from _builders import SHIPPED


def test_dispersion():
    assert dispersion([5.0, 5.0, 5.0]) == 0.0
    assert dispersion([0.0, 0.0]) == 0.0
    assert dispersion([99.0, 101.0]) == pytest.approx(0.02)
    assert dispersion([-1.0, 3.0]) == pytest.approx(2.0)


def test_relative_margin():
    assert relative_margin(1.0, 2.0) == 0.5
    assert relative_margin(2.0, 1.0) == -0.5
    assert relative_margin(0.0, 0.0) == 0.0


def _fake(fp="x", q=0.0, p=0.0, v=0.0):
    return {"fingerprint": fp, "Q_dispersion": q, "P_dispersion": p, "voltage_error_max": v}


GOOD = [_fake(q=0.0, p=0.001, v=10.0), _fake(q=1.0, p=0.4, v=5.0), _fake(q=2.0, p=1.0, v=0.01),
        _fake(q=2.5, p=0.0, v=0.02)]


def test_ordering_passes_on_expected_pattern():
    assert compare_cases(GOOD)["passed"]


def test_identical_summaries_fail_strictness():
    rep = compare_cases([GOOD[1]] * 4)
    assert not rep["passed"]


def test_margin_below_ten_percent_fails():
    bad = copy.deepcopy(GOOD)
    bad[3]["Q_dispersion"] = 2.1
    rep = compare_cases(bad)
    assert not rep["passed"]
    assert [c["check"] for c in rep["checks"] if not c["passed"]] == ["Q_dispersion case3 < case4"]


def test_wrong_length_and_mismatch():
    with pytest.raises(ValueError, match="expected 4"):
        compare_cases(GOOD[:3])
    other = copy.deepcopy(GOOD)
    other[2]["fingerprint"] = "y"
    with pytest.raises(ValueError, match="different"):
        compare_cases(other)


def test_electrical_distance_picks_local_cig():
    cfg = load_scenario(SHIPPED["case1"])
    net = cfg.network()
    d1 = electrical_distances(net, cfg.omega_s, 1)
    d4 = electrical_distances(net, cfg.omega_s, 4)
    assert int(np.argmin(d1)) == 0 and int(np.argmin(d4)) == 3
    assert np.all(np.diff(d1) > 0)
