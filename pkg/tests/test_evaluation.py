import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smimu.evaluation import (
    ComparisonTable,
    RmseReport,
    deltas,
    detection_accuracy,
    envelope_coverage,
    format_delta,
    rmse,
    write_json,
    write_rmse_csv,
)
from smimu.exceptions import EmptyPairing
from smimu.kinematics import dcm_from_euler, rodrigues


def test_rmse_examples():
    r = rmse(np.array([[1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0]]))
    assert r.roll == pytest.approx(np.sqrt(14 / 3)) and r.roll == pytest.approx(2.1602, abs=1e-4)
    a = np.random.default_rng(0).uniform(-90, 90, (20, 3))
    z = rmse(a, a)
    assert z.roll == z.pitch == z.yaw == 0.0
    with pytest.raises(EmptyPairing):
        rmse(np.zeros((0, 3)))


def test_rmse_wraps_yaw():
    r = rmse(np.array([[0, 0, 179.0]]), np.array([[0, 0, -179.0]]))
    assert r.yaw == pytest.approx(2.0)


def test_table_row_delta():
    d_abs, d_rel = deltas(4.53, 3.05)
    assert d_abs == pytest.approx(1.48)
    assert d_rel == pytest.approx(32.67, abs=0.01)
    assert format_delta(d_abs, d_rel) == "1.5 (32%)"
    assert deltas(2.0, 2.0) == (0.0, 0.0)
    rep = RmseReport(3.0, 3.1, 40.0, 10).against(4.53)
    assert rep.delta_rel == pytest.approx(100 * rep.delta_abs / 4.53, abs=1e-9)


@given(arrays(np.float64, (12, 3), elements=st.floats(-90, 90)), st.randoms())
def test_rmse_order_invariant(err, rnd):
    perm = list(range(12))
    rnd.shuffle(perm)
    a, b = rmse(err), rmse(err[perm])
    assert a.roll == pytest.approx(b.roll) and a.yaw == pytest.approx(b.yaw)
    assert min(a.roll, a.pitch, a.yaw) >= 0


def test_detection_examples():
    w = np.zeros((100, 3))
    w[40:70, 2] = 0.5
    truth = np.abs(w[:, 2]) > 0.02
    good = detection_accuracy(truth, w, 0.02)
    assert good.accuracy == 1.0 and good.total == 100
    assert detection_accuracy(~truth, w, 0.02).accuracy == 0.0
    flags = np.zeros((100, 3), bool)
    flags[35:70, 0] = True
    rep = detection_accuracy(flags, w)
    assert (rep.tp, rep.fp, rep.tn, rep.fn) == (30, 5, 65, 0)
    with pytest.raises(ValueError):
        detection_accuracy(truth[:50], w)


def test_comparison_table(tmp_path):
    results = {
        "car": {"gf_baseline": RmseReport(2.0, 2.0, 9, 10), "smimu": RmseReport(1.0, 1.0, 9, 10), "single_imu": RmseReport(2.0, 2.0, 1, 10)},
    }
    table = ComparisonTable.build(results, "gf_baseline")
    assert len(table) == 3 and table.modes() == ["gf_baseline", "smimu", "single_imu"]
    by = {r.label: r for r in table.rows}
    assert by["smimu"].delta_rel == pytest.approx(50.0)
    assert by["single_imu"].delta_rel == 0.0
    write_rmse_csv(tmp_path / "c.csv", table.rows)
    write_json(tmp_path / "c.json", {"rows": table.rows})
    assert (tmp_path / "c.csv").read_text().count("\n") == 4
    assert json.loads((tmp_path / "c.json").read_text())["rows"][1]["delta_abs"] == 1.0


def test_envelope_coverage_of_gaussian_errors():
    rng = np.random.default_rng(9)
    n, s = 20_000, 1e-3
    truth = dcm_from_euler(np.column_stack([np.zeros(n), np.zeros(n), rng.uniform(-3, 3, n)]))
    psi = s * rng.standard_normal((n, 3))
    est = np.array([rodrigues(p) for p in psi]) @ truth
    p = np.broadcast_to(s**2 * np.eye(3), (n, 3, 3))
    assert envelope_coverage(est, truth, p) == pytest.approx(0.6827, abs=0.01)
