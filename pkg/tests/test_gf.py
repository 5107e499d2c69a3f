import numpy as np
import pytest

from smimu.exceptions import SingularNormalMatrix, TooFewImus
from smimu.geometry import ArrayGeometry, ImuPlacement, cube_array, octahedron_array, planar_array
from smimu.gf import GfSolver, run_gf_mechanization, solve_joint
from smimu.kinematics import GRAVITY, attitude_error, euler_from_dcm
from smimu.simulation import ImuFrameSample, make_trajectory, specific_force, synthesize

G_B = np.array([0, 0, GRAVITY])


def test_static_solve():
    geom = cube_array()
    f = specific_force(geom.rho, np.zeros(3), np.zeros(3), np.zeros(3), G_B)
    s = solve_joint(ImuFrameSample(0.0, f), geom, np.zeros(3))
    np.testing.assert_allclose(s.omega_dot, 0.0, atol=1e-14)
    np.testing.assert_allclose(s.lin, [0, 0, -GRAVITY], atol=1e-14)
    assert s.dof == 18


def test_spin_solve():
    geom = cube_array(0.5)
    w, wd = np.array([0, 0, 1.0]), np.array([0, 0, 2.0])
    f = specific_force(geom.rho, w, wd, np.zeros(3), G_B)
    s = solve_joint(f, geom, w)
    np.testing.assert_allclose(s.omega_dot, wd, atol=1e-10)
    np.testing.assert_allclose(s.lin, -G_B, atol=1e-10)
    assert s.residual_var < 1e-25


def test_generic_geometry_oracle(rng):
    for _ in range(20):
        geom = ArrayGeometry([ImuPlacement(k, rng.uniform(-1, 1, 3)) for k in range(7)])
        w, wd, a = rng.normal(size=(3, 3))
        f = specific_force(geom.rho, w, wd, a, G_B)
        s = solve_joint(f, geom, w)
        np.testing.assert_allclose(s.omega_dot, wd, atol=1e-9)
        np.testing.assert_allclose(s.lin, a - G_B, atol=1e-9)


def test_errors():
    with pytest.raises(TooFewImus):
        GfSolver(planar_array(0.5, n_pairs=2))
    line = ArrayGeometry([ImuPlacement(k, (0.1 * k - 0.3, 0, 0)) for k in range(6)])
    with pytest.raises(SingularNormalMatrix):
        GfSolver(line)


def test_cross_covariance():
    rng = np.random.default_rng(2)
    geom = ArrayGeometry([ImuPlacement(k, rng.uniform(-1, 1, 3)) for k in range(6)])
    f = specific_force(geom.rho, np.zeros(3), np.zeros(3), np.zeros(3), G_B) + 0.012 * rng.standard_normal((6, 3))
    s = solve_joint(f, geom, np.zeros(3))
    assert np.linalg.norm(s.cov[:3, 3:]) > 0
    assert np.all(np.linalg.eigvalsh(s.cov) > -1e-18)
    # a centered (symmetric) array decouples the blocks
    sym = GfSolver(octahedron_array())
    np.testing.assert_allclose(sym.normal_inv[:3, 3:], 0.0, atol=1e-15)


def test_mechanization_static_noise_free():
    geom = cube_array()
    traj = make_trajectory("static", 60.0, 100.0)
    sols = list(run_gf_mechanization(synthesize(traj, geom), geom, np.eye(3), np.zeros(3)))
    err = np.rad2deg(np.linalg.norm(attitude_error(np.array([s.dcm for s in sols]), traj.dcm), axis=1))
    assert err.max() < 1e-6


def test_mechanization_constant_yaw():
    geom = cube_array()
    traj = make_trajectory({"type": "constant_rate", "omega": [0, 0, 0.1]}, 10.01, 100.0)
    assert traj.t[-1] == pytest.approx(10.0)
    sols = list(run_gf_mechanization(synthesize(traj, geom), geom, np.eye(3), [0, 0, 0.1]))
    assert euler_from_dcm(sols[-1].dcm)[2] == pytest.approx(1.0, abs=1e-4)


def test_mechanization_noise_drift_superlinear():
    geom = cube_array(0.5, sigma_f=0.012)
    traj = make_trajectory("static", 40.0, 50.0)
    marks = [250, 500, 1000, 1999]
    errs = []
    for seed in range(10):
        sols = list(run_gf_mechanization(synthesize(traj, geom, True, seed), geom, np.eye(3), np.zeros(3)))
        dcm = np.array([sols[k].dcm for k in marks])
        errs.append(np.linalg.norm(attitude_error(dcm, traj.dcm[marks]), axis=1))
    med = np.median(errs, axis=0)
    assert np.all(np.diff(med) > 0)
    # integrated random walk: doubling the time more than doubles the error
    assert med[-1] / med[-2] > 2.0 and med[2] / med[0] > 4.0
