"""
Where the gate stops seeing rotation.

With accelerometers alone, rate shows up only through the centripetal term
|omega|^2 * rho, so small rates vanish into the noise. Below the floor the
gate zeroes the rate and any real rotation there goes uncorrected until
gravity can be used again. This is the weak spot of the method for slow,
accelerating platforms.

Run with ``python demos/03_detection_floor.py``.
"""

import numpy as np

from smimu import RunConfig, estimate, prepare_input

rates = [0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0]

for radius in (0.25, 0.5, 1.0):
    print(f"\ncube radius {radius} m")
    print(f"{'yaw rate':>9s} {'passed':>7s} {'yaw error [deg]':>16s}")
    for w in rates:
        profile = {"type": "piecewise", "segments": [
            {"duration": 2.0, "omega": [0, 0, 0]},
            {"duration": 18.0, "omega": [0, 0, w], "ramp": 1.0},
        ]}
        cfg = RunConfig(simulate=profile, duration=20.0, seed=0, plots=False,
                        array={"type": "cube", "radius": radius, "sigma_f": 0.012})
        data = prepare_input(cfg)
        res = estimate(cfg, data)
        late = res.t > 5.0
        passed = res.gate_passed[late, 2].mean()
        yaw_err = abs(res.euler_deg[-1, 2] - data.truth.angles[-1, 2])
        print(f"{w:9.2f} {passed:7.1%} {min(yaw_err, 360 - yaw_err):16.2f}")
