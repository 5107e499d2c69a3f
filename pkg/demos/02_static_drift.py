"""
Ten minutes on a bench.

A gyro-free solver that integrates angular acceleration twice drifts
without bound. The symmetric array with a significance gate sees no
rotation and stays put. A single IMU with a consumer gyro sits in between.

Run with ``python demos/02_static_drift.py``. Takes a few seconds.
"""

import numpy as np

from smimu import RunConfig, estimate, prepare_input
from smimu.kinematics import attitude_error

base = RunConfig(simulate="static", duration=600.0, seed=3, plots=False)
data = prepare_input(base)

print(f"{'mode':12s} {'final error [deg]':>18s} {'roll RMSE':>10s} {'pitch RMSE':>11s}")
for mode in ("gf_baseline", "single_imu", "smimu"):
    res = estimate(base.replace(mode=mode), data)
    err = np.rad2deg(np.linalg.norm(attitude_error(res.dcm[-1], data.truth_dcm[-1])))
    print(f"{mode:12s} {err:18.3f} {res.rmse.roll:10.4f} {res.rmse.pitch:11.4f}")

# %%
# How often did the gate let noise through on a still array?
res = estimate(base, data)
print(f"\nsmimu: gate passed an axis on {res.gate_passed.any(axis=1).mean():.1%} of epochs")
print(f"       gravity updates on {res.updated.mean():.1%} of epochs")
