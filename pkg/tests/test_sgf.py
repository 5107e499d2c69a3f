import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smimu._loops import _branch_score
from smimu.exceptions import EmptyInput, NonConvergence, RankDeficient
from smimu.geometry import cube_array, octahedron_array, planar_array
from smimu.kinematics import GRAVITY, skew
from smimu.simulation import specific_force
from smimu.sgf import (
    estimate_gravity,
    resolve_sign,
    rotational_model,
    sgf_jacobian,
    solve_angular,
    solve_angular_arrays,
)
from smimu.symmetric import SymmetricPairMeasurement, decompose_sample

G_B = np.array([0, 0, GRAVITY])


def _pairs(geom, omega, omega_dot, accel=(0, 0, 0), noise=None):
    f = specific_force(geom.rho, np.asarray(omega, float), np.asarray(omega_dot, float), np.asarray(accel, float), G_B)
    if noise is not None:
        f = f + noise
    return decompose_sample(f, geom)


def _fd_jacobian(omega, rho, h=1e-6):
    x = np.concatenate([omega, np.zeros(3)])
    out = np.empty((3, 6))
    for i in range(6):
        e = np.zeros(6)
        e[i] = h
        out[:, i] = (rotational_model((x + e)[:3], (x + e)[3:], rho) - rotational_model((x - e)[:3], (x - e)[3:], rho)) / (2 * h)
    return out


def _pm(f_bar, sigma=0.012):
    return SymmetricPairMeasurement(0, np.array(f_bar, float), np.zeros(3), sigma, sigma)


def test_estimate_gravity_examples():
    pairs = [_pm([0, 0, -GRAVITY], 0.0085) for _ in range(4)]
    g = estimate_gravity(pairs)
    np.testing.assert_array_equal(g.g_b_hat, [0, 0, GRAVITY])
    assert g.var == pytest.approx(0.0085**2 / 4)
    g = estimate_gravity([_pm([0, 0, -9.8]), _pm([0, 0, -9.9])])
    assert g.g_b_hat[2] == pytest.approx(9.85)
    with pytest.raises(EmptyInput):
        estimate_gravity([])


def test_estimate_gravity_monte_carlo():
    rng = np.random.default_rng(11)
    s = 0.0085
    draws = -(np.array([0, 0, -GRAVITY]) + s * rng.standard_normal((100_000, 4, 3))).mean(axis=1)
    reported = estimate_gravity([_pm([0, 0, -GRAVITY], s)] * 4).var
    np.testing.assert_allclose(draws.var(axis=0), reported, rtol=0.05)


def test_jacobian_examples():
    rho = np.array([0.5, 0, 0])
    a = sgf_jacobian([0, 0, 0], rho)
    np.testing.assert_array_equal(a[:, :3], 0.0)
    np.testing.assert_array_equal(a[:, 3:], -skew(rho))
    np.testing.assert_allclose(sgf_jacobian([0, 0, 1.0], rho), _fd_jacobian(np.array([0, 0, 1.0]), rho), rtol=1e-5, atol=1e-9)


@given(arrays(np.float64, 3, elements=st.floats(-5, 5)), arrays(np.float64, 3, elements=st.floats(-1, 1)))
def test_jacobian_matches_finite_differences(omega, rho):
    a = sgf_jacobian(omega, rho)
    fd = _fd_jacobian(omega, rho)
    scale = max(np.abs(a).max(), 1e-3)
    assert np.abs(a - fd).max() / scale < 1e-5


def test_solve_zero_input():
    geom = cube_array()
    st_ = solve_angular(_pairs(geom, [0, 0, 0], [0, 0, 0]), np.zeros(3))
    assert st_.converged and st_.iterations == 1
    np.testing.assert_array_equal(st_.omega, 0.0)
    np.testing.assert_array_equal(st_.omega_dot, 0.0)
    assert st_.chi2 == 0.0


def test_solve_recovers_truth_and_mirror_branch():
    geom = cube_array(0.5)
    pairs = _pairs(geom, [0, 0, 1.0], [0, 0, 2.0])
    st_ = solve_angular(pairs, [0, 0, 0.9])
    assert st_.converged
    np.testing.assert_allclose(st_.omega, [0, 0, 1.0], atol=1e-8)
    np.testing.assert_allclose(st_.omega_dot, [0, 0, 2.0], atol=1e-8)
    neg = solve_angular(pairs, [0, 0, -0.9])
    np.testing.assert_allclose(neg.omega, [0, 0, -1.0], atol=1e-8)
    np.testing.assert_allclose(neg.omega_dot, [0, 0, 2.0], atol=1e-8)
    # both branches fit equally and share the rate covariance
    np.testing.assert_allclose(neg.p_omega, st_.p_omega, rtol=1e-6, atol=1e-30)


rates = arrays(np.float64, 3, elements=st.floats(-3, 3)).filter(lambda w: 0.2 <= np.linalg.norm(w) <= 5)


@given(rates, arrays(np.float64, 3, elements=st.floats(-4, 4)), arrays(np.float64, 3, elements=st.floats(-0.1, 0.1)))
def test_noise_free_oracle_equivalence(omega, omega_dot, perturb):
    geom = cube_array(0.5)
    init = omega * (1 + perturb)
    st_ = solve_angular(_pairs(geom, omega, omega_dot, accel=(0.3, -1, 2)), init, max_iter=50)
    np.testing.assert_allclose(st_.omega, omega, atol=1e-7)
    np.testing.assert_allclose(st_.omega_dot, omega_dot, atol=1e-7)


def test_dof_bookkeeping():
    assert solve_angular(_pairs(cube_array(), [0, 0, 1], [0, 0, 0]), [0, 0, 1]).dof == 3 * 8 // 2 - 6
    assert solve_angular(_pairs(octahedron_array(), [0, 0, 1], [0, 0, 0]), [0, 0, 1]).dof == 3


def test_exact_determined_uses_prior():
    geom = cube_array().subset([0, 1, 2, 3])
    from smimu.geometry import ArrayGeometry

    geom = ArrayGeometry.paired(geom.placements)
    st_ = solve_angular(_pairs(geom, [0.3, 0.2, 1.0], [0, 0, 0]), [0.3, 0.2, 1.0])
    assert st_.dof == 0 and st_.exact_determined and st_.sigma_v_sq == 1.0


def test_covariance_and_chi_square_monte_carlo():
    geom = cube_array(0.5, sigma_f=0.012)
    truth_w, truth_wd = np.array([0.6, -0.4, 1.0]), np.array([0.5, 0.2, -0.3])
    idx = geom.pair_indices()
    rho = geom.rho[idx[:, 0]]
    clean = specific_force(geom.rho, truth_w, truth_wd, np.zeros(3), G_B)
    rng = np.random.default_rng(5)
    sig = np.full(4, 0.012 / np.sqrt(2))
    est, covs, chi = [], [], []
    for _ in range(10_000):
        f = clean + 0.012 * rng.standard_normal(clean.shape)
        fbr = 0.5 * (f[idx[:, 0]] - f[idx[:, 1]])
        s = solve_angular_arrays(rho, fbr, sig, truth_w)
        est.append(s.omega)
        covs.append(s.p_omega)
        chi.append(s.chi2 / s.dof)
    emp = np.var(np.array(est), axis=0)
    rep = np.mean(covs, axis=0).diagonal()
    assert np.all(emp / rep < 1.5) and np.all(rep / emp < 1.5)
    assert 0.8 <= np.mean(chi) <= 1.2


def test_planar_solve_marks_unobservable_axes():
    geom = planar_array(0.5, n_pairs=3)
    pairs = _pairs(geom, [0, 0, 0.8], [0, 0, 0.5])
    st_ = solve_angular(pairs, [0, 0, 0.7])
    np.testing.assert_allclose(st_.omega[2], 0.8, atol=1e-8)
    np.testing.assert_allclose(st_.omega_dot[2], 0.5, atol=1e-6)
    assert np.isinf(st_.cov[3, 3]) and np.isinf(st_.cov[4, 4])
    assert np.isfinite(st_.cov[2, 2])


def test_strict_nonconvergence():
    pairs = _pairs(cube_array(), [0.4, 1.3, -0.9], [1, 0, 0])
    loose = solve_angular(pairs, [3.0, -2.0, 2.0], max_iter=1)
    assert not loose.converged and loose.iterations == 1
    with pytest.raises(NonConvergence):
        solve_angular(pairs, [3.0, -2.0, 2.0], max_iter=1, strict=True)


def test_rank_deficient_lever_arms():
    rho = np.array([[0.5, 0, 0], [0.3, 0, 0], [0.1, 0, 0]])
    with pytest.raises(RankDeficient):
        solve_angular_arrays(rho, np.zeros((3, 3)), 0.01, np.zeros(3))


def test_solve_needs_pairs():
    with pytest.raises(EmptyInput):
        solve_angular([], np.zeros(3))


def test_resolve_sign():
    np.testing.assert_array_equal(resolve_sign([0, 0, -0.3], [0, 0, 0.2], np.eye(3)), [0, 0, 0.3])
    # a noisy, poorly determined axis must not outvote a precise one
    p = np.diag([100.0, 100.0, 1e-4])
    np.testing.assert_array_equal(resolve_sign([-2.0, 0, 0.3], [2.0, 0, 0.2], p), [-2.0, 0, 0.3])
    np.testing.assert_array_equal(resolve_sign([1.0, 0, 0], [-1.0, 0, 0], np.diag([np.inf, 1, 1])), [1.0, 0, 0])
    np.testing.assert_array_equal(resolve_sign([1.0, 0, 0], [0, 0, 0], np.eye(3)), [1.0, 0, 0])


@given(arrays(np.float64, 3, elements=st.floats(-3, 3)), arrays(np.float64, 3, elements=st.floats(-3, 3)),
       arrays(np.float64, 3, elements=st.floats(1e-6, 10)))
def test_resolve_sign_agrees_with_compiled(omega, seed, var):
    cov = np.diag(var)
    flipped = _branch_score(omega, seed, cov) < 0.0
    out = resolve_sign(omega, seed, cov)
    np.testing.assert_array_equal(out, -omega if flipped else omega)
