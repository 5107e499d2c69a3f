"""
Compiled per-epoch loops for the three front ends.

Each loop is a straight transcription of the reference implementation in
:mod:`smimu.pipeline` (which is written with the public module functions) and
exists only for speed; the test suite checks the two agree.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .sgf import NULL_EIG_RTOL, _gauss_newton, _linearize

COND_LIMIT = 1e12


@njit(cache=True)
def _skew(v):
    out = np.zeros((3, 3))
    out[0, 1] = -v[2]
    out[0, 2] = v[1]
    out[1, 0] = v[2]
    out[1, 2] = -v[0]
    out[2, 0] = -v[1]
    out[2, 1] = v[0]
    return out


@njit(cache=True)
def _rodrigues(phi):
    theta2 = phi[0] * phi[0] + phi[1] * phi[1] + phi[2] * phi[2]
    k = _skew(phi)
    if theta2 < 1e-12:
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
    else:
        theta = np.sqrt(theta2)
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * k + b * (k @ k)


@njit(cache=True)
def _orthonormalize(m):
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u[:, 2] = -u[:, 2]
        r = u @ vt
    return r


@njit(cache=True)
def _predict(dcm, p, omega_ib, q, dt, omega_in):
    w_nb = omega_ib - dcm.T @ omega_in
    if w_nb[0] != 0.0 or w_nb[1] != 0.0 or w_nb[2] != 0.0:
        dcm_new = _orthonormalize(dcm @ _rodrigues(w_nb * dt))
    else:
        dcm_new = dcm.copy()
    p_new = p + dcm @ q @ dcm.T * dt
    return dcm_new, 0.5 * (p_new + p_new.T)


@njit(cache=True)
def _update(dcm, p, g_b, var, g):
    g_n = np.array([0.0, 0.0, g])
    h = -_skew(g_n)
    dg = g_n - dcm @ g_b
    noise = dcm @ (var * np.eye(3)) @ dcm.T
    s = h @ p @ h.T + noise
    if np.linalg.cond(s) > COND_LIMIT:
        return dcm, p, False
    k = np.linalg.solve(s, h @ p).T
    u = g_n / np.sqrt(g_n @ g_n)
    k = k - np.outer(u, u @ k)
    dx = k @ dg
    dcm_new = _rodrigues(dx) @ dcm
    ikh = np.eye(3) - k @ h
    p_new = ikh @ p @ ikh.T + k @ noise @ k.T
    return dcm_new, 0.5 * (p_new + p_new.T), True


@njit(cache=True)
def _omega_cov(nmat, scale):
    # 3x3 rate block of the pseudo-inverse covariance; free directions -> inf
    evals, evecs = np.linalg.eigh(nmat)
    top = evals[-1]
    out = np.zeros((3, 3))
    if top <= 0.0:
        for i in range(3):
            out[i, i] = np.inf
        return out
    free = np.zeros(6, dtype=np.bool_)
    for c in range(6):
        if evals[c] > top * NULL_EIG_RTOL:
            for i in range(3):
                for j in range(3):
                    out[i, j] += scale * evecs[i, c] * evecs[j, c] / evals[c]
        else:
            for i in range(6):
                if abs(evecs[i, c]) > 1e-6:
                    free[i] = True
    out = 0.5 * (out + out.T)
    for i in range(3):
        if free[i]:
            for j in range(3):
                out[i, j] = 0.0
                out[j, i] = 0.0
            out[i, i] = np.inf
    return out


@njit(cache=True)
def _branch_score(x, seed, cov):
    # sign of the seed-vs-estimate agreement, axes weighted by precision
    acc = 0.0
    for i in range(3):
        if np.isfinite(cov[i, i]) and cov[i, i] > 0.0:
            acc += x[i] * seed[i] / cov[i, i]
    return acc


@njit(cache=True)
def smimu_loop(
    t, f_bar, f_breve, rho, w, var_g, dcm0, p0, omega0, omega_in,
    alpha, g_e, thr, g, max_iter, tol, reg, dof, hold,
):
    n = t.shape[0]
    dcm_out = np.empty((n, 3, 3))
    p_out = np.empty((n, 3, 3))
    omega_out = np.empty((n, 3))
    raw_out = np.empty((n, 3))
    passed_out = np.zeros((n, 3), dtype=np.bool_)
    updated = np.zeros(n, dtype=np.bool_)
    converged = np.zeros(n, dtype=np.bool_)
    status = 0
    dcm = dcm0.copy()
    p = p0.copy()
    w_seed = omega0.copy()
    age = np.zeros(3)
    w_dot = np.zeros(3)
    w_used_prev = omega0.copy()
    n_pairs = rho.shape[0]
    for k in range(n):
        dt = t[k] - t[k - 1] if k > 0 else 0.0
        x0 = np.zeros(6)
        for i in range(3):
            age[i] += dt
            if age[i] > hold:
                # restart once from rest, then keep integrating
                w_seed[i] = 0.0
                age[i] = -np.inf
        w_seed = w_seed + w_dot * dt
        x0[:3] = w_seed
        x0[3:] = w_dot
        fbr = np.ascontiguousarray(f_breve[k])
        x, it, conv = _gauss_newton(x0, rho, fbr, w, max_iter, tol, reg)
        finite = True
        for i in range(6):
            if not np.isfinite(x[i]):
                finite = False
        if finite:
            w_dot = x[3:].copy()
        else:
            w_dot = np.zeros(3)
        passed = np.zeros(3, dtype=np.bool_)
        q = np.zeros((3, 3))
        if conv and finite:
            nmat, _, chi2 = _linearize(x, rho, fbr, w)
            s2 = chi2 / dof if dof > 0 else 1.0
            cov = _omega_cov(nmat, s2)
            # the rate block of the covariance is the same on both branches
            if _branch_score(x, w_seed, cov) < 0.0:
                for i in range(3):
                    x[i] = -x[i]
            for i in range(3):
                passed[i] = abs(x[i]) > alpha * np.sqrt(max(cov[i, i], 0.0))
            for i in range(3):
                for j in range(3):
                    if passed[i] and passed[j]:
                        q[i, j] = cov[i, j]
        prior = dcm.T @ omega_in
        w_used = np.empty(3)
        for i in range(3):
            w_used[i] = x[i] if passed[i] else prior[i]
            if passed[i]:
                w_seed[i] = x[i]
                age[i] = 0.0
        if k > 0:
            dcm, p = _predict(dcm, p, 0.5 * (w_used_prev + w_used), q * dt, dt, omega_in)
        fm = np.zeros(3)
        for j in range(n_pairs):
            fm += f_bar[k, j]
        fm /= n_pairs
        if abs(np.sqrt(fm @ fm) - g_e) < thr:
            dcm, p, ok = _update(dcm, p, -fm, var_g, g)
            if not ok:
                status = k + 1
                break
            updated[k] = True
        w_used_prev = w_used
        dcm_out[k] = dcm
        p_out[k] = p
        omega_out[k] = w_used
        raw_out[k] = x[:3] if finite else np.zeros(3)
        passed_out[k] = passed
        converged[k] = conv
    return dcm_out, p_out, omega_out, raw_out, passed_out, updated, converged, status


@njit(cache=True)
def gf_loop(t, f_b, rho, pinv, normal_inv, sigma_f2, dcm0, p0, omega0, omega_in, g_e, thr, g):
    n = t.shape[0]
    n_imu = rho.shape[0]
    dcm_out = np.empty((n, 3, 3))
    p_out = np.empty((n, 3, 3))
    omega_out = np.empty((n, 3))
    updated = np.zeros(n, dtype=np.bool_)
    status = 0
    dcm = dcm0.copy()
    p = p0.copy()
    omega = omega0.copy()
    w_dot = np.zeros(3)
    p_omega = np.zeros((3, 3))
    var_g = sigma_f2 * (normal_inv[3, 3] + normal_inv[4, 4] + normal_inv[5, 5]) / 3.0
    y = np.empty(3 * n_imu)
    for k in range(n):
        dt = t[k] - t[k - 1] if k > 0 else 0.0
        w_pred = omega + w_dot * dt if k > 0 else omega
        for i in range(n_imu):
            r = rho[i]
            wr = w_pred @ r
            ww = w_pred @ w_pred
            for a in range(3):
                y[3 * i + a] = f_b[k, i, a] - (wr * w_pred[a] - ww * r[a])
        x = pinv @ y
        if k > 0:
            omega_new = omega + 0.5 * (w_dot + x[:3]) * dt
            p_omega = p_omega + sigma_f2 * normal_inv[:3, :3] * dt * dt
            dcm, p = _predict(dcm, p, 0.5 * (omega + omega_new), p_omega * dt, dt, omega_in)
            omega = omega_new
        w_dot = x[:3].copy()
        lin = x[3:].copy()
        if abs(np.sqrt(lin @ lin) - g_e) < thr:
            dcm, p, ok = _update(dcm, p, -lin, var_g, g)
            if not ok:
                status = k + 1
                break
            updated[k] = True
        dcm_out[k] = dcm
        p_out[k] = p
        omega_out[k] = omega
    return dcm_out, p_out, omega_out, updated, status


@njit(cache=True)
def single_loop(t, f, gyro, sigma_g2, sigma_f2, dcm0, p0, omega_in, g_e, thr, g):
    n = t.shape[0]
    dcm_out = np.empty((n, 3, 3))
    p_out = np.empty((n, 3, 3))
    updated = np.zeros(n, dtype=np.bool_)
    status = 0
    dcm = dcm0.copy()
    p = p0.copy()
    q = sigma_g2 * np.eye(3)
    for k in range(n):
        if k > 0:
            dt = t[k] - t[k - 1]
            dcm, p = _predict(dcm, p, 0.5 * (gyro[k - 1] + gyro[k]), q * dt, dt, omega_in)
        fk = f[k]
        if abs(np.sqrt(fk @ fk) - g_e) < thr:
            dcm, p, ok = _update(dcm, p, -fk, sigma_f2, g)
            if not ok:
                status = k + 1
                break
            updated[k] = True
        dcm_out[k] = dcm
        p_out[k] = p
    return dcm_out, p_out, updated, status
