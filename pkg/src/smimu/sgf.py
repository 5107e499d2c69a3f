"""
Angular-rate and gravity estimation from decomposed symmetric pairs.

The rotational half-differences obey

    f_breve = w x (w x rho) + w_dot x rho

which is quadratic in ``w`` and linear in ``w_dot``. :func:`solve_angular`
fits both by weighted Gauss-Newton; :func:`estimate_gravity` averages the
linear half-sums under a zero-acceleration assumption.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit
from numpy.typing import ArrayLike, NDArray

from .exceptions import EmptyInput, NonConvergence, RankDeficient
from .kinematics import skew
from .symmetric import SymmetricPairMeasurement

DEFAULT_MAX_ITER = 25
DEFAULT_TOL = 1e-10
PLANAR_TIKHONOV = 1e-8
NULL_EIG_RTOL = 1e-10
COND_LIMIT = 1e12
CHOL_PIVOT_RTOL = 1e-12  # below this, fall back to the truncated eigen-solve


@dataclass(frozen=True)
class GravityEstimate:
    g_b_hat: NDArray[np.float64]
    var: float  # per-axis variance of g_b_hat, (m/s^2)^2


@dataclass(frozen=True)
class AngularState:
    """
    Result of one angular solve.

    ``cov`` is the 6x6 covariance of ``(omega, omega_dot)``. Components that
    the data cannot determine at the solution carry ``inf`` variance.
    """

    omega: NDArray[np.float64]
    omega_dot: NDArray[np.float64]
    cov: NDArray[np.float64]
    sigma_v_sq: float
    dof: int
    iterations: int
    converged: bool
    exact_determined: bool = False
    chi2: float = 0.0  # weighted residual norm v^T P^-1 v

    @property
    def p_omega(self) -> NDArray[np.float64]:
        return self.cov[:3, :3]


def estimate_gravity(pairs: Sequence[SymmetricPairMeasurement]) -> GravityEstimate:
    """
    Gravity in body axes from the linear components, assuming the body is not
    accelerating: the mean of ``-f_bar`` with variance ``sigma_bar^2 / n``.
    """
    if len(pairs) == 0:
        raise EmptyInput("no pair measurements")
    f_bar = np.array([p.f_bar for p in pairs])
    sig2 = float(np.mean([p.sigma_bar**2 for p in pairs]))
    return GravityEstimate(-f_bar.mean(axis=0), sig2 / len(pairs))


def rotational_model(omega: ArrayLike, omega_dot: ArrayLike, rho: ArrayLike) -> NDArray:
    """``w x (w x rho) + w_dot x rho``; ``rho`` may be (3,) or (P, 3)."""
    omega = np.asarray(omega, dtype=np.float64)
    return np.cross(omega, np.cross(omega, rho)) + np.cross(omega_dot, rho)


def centripetal_jacobian(omega: ArrayLike, rho: ArrayLike) -> NDArray[np.float64]:
    """Derivative of ``w x (w x rho)`` with respect to ``w`` (3x3)."""
    wx, wy, wz = np.asarray(omega, dtype=np.float64)
    rx, ry, rz = np.asarray(rho, dtype=np.float64)
    return np.array(
        [
            [wy * ry + wz * rz, -2 * wy * rx + wx * ry, -2 * wz * rx + wx * rz],
            [-2 * wx * ry + wy * rx, wx * rx + wz * rz, -2 * wz * ry + wy * rz],
            [-2 * wx * rz + wz * rx, -2 * wy * rz + wz * ry, wx * rx + wy * ry],
        ]
    )


def sgf_jacobian(omega: ArrayLike, rho: ArrayLike) -> NDArray[np.float64]:
    """
    3x6 Jacobian of :func:`rotational_model` w.r.t. ``(omega, omega_dot)``.

    The angular-acceleration block is ``-[rho x]`` because ``w_dot x rho =
    -rho x w_dot``.
    """
    out = np.empty((3, 6))
    out[:, :3] = centripetal_jacobian(omega, rho)
    out[:, 3:] = -skew(rho)
    return out


# --------------------------------------------------------------------------
# compiled Gauss-Newton loop


@njit(cache=True)
def _linearize(x, rho, fbr, w):
    n_pairs = rho.shape[0]
    wx, wy, wz = x[0], x[1], x[2]
    ax, ay, az = x[3], x[4], x[5]
    nmat = np.zeros((6, 6))
    grad = np.zeros(6)
    cost = 0.0
    row = np.zeros(6)
    for p in range(n_pairs):
        rx, ry, rz = rho[p, 0], rho[p, 1], rho[p, 2]
        wr = wx * rx + wy * ry + wz * rz
        ww = wx * wx + wy * wy + wz * wz
        # w x (w x r) = (w.r) w - |w|^2 r ; w_dot x r
        m0 = wr * wx - ww * rx + (ay * rz - az * ry)
        m1 = wr * wy - ww * ry + (az * rx - ax * rz)
        m2 = wr * wz - ww * rz + (ax * ry - ay * rx)
        v0 = fbr[p, 0] - m0
        v1 = fbr[p, 1] - m1
        v2 = fbr[p, 2] - m2
        wp = w[p]
        cost += wp * (v0 * v0 + v1 * v1 + v2 * v2)
        for k in range(3):
            if k == 0:
                row[0] = wy * ry + wz * rz
                row[1] = -2.0 * wy * rx + wx * ry
                row[2] = -2.0 * wz * rx + wx * rz
                row[3] = 0.0
                row[4] = rz
                row[5] = -ry
                vk = v0
            elif k == 1:
                row[0] = -2.0 * wx * ry + wy * rx
                row[1] = wx * rx + wz * rz
                row[2] = -2.0 * wz * ry + wy * rz
                row[3] = -rz
                row[4] = 0.0
                row[5] = rx
                vk = v1
            else:
                row[0] = -2.0 * wx * rz + wz * rx
                row[1] = -2.0 * wy * rz + wz * ry
                row[2] = wx * rx + wy * ry
                row[3] = ry
                row[4] = -rx
                row[5] = 0.0
                vk = v2
            for i in range(6):
                grad[i] += wp * row[i] * vk
                for j in range(6):
                    nmat[i, j] += wp * row[i] * row[j]
    return nmat, grad, cost


@njit(cache=True)
def _pinv_solve(nmat, grad):
    evals, evecs = np.linalg.eigh(nmat)
    top = evals[-1]
    out = np.zeros(6)
    if top <= 0.0:
        return out
    for i in range(6):
        if evals[i] > top * 1e-12:
            c = 0.0
            for j in range(6):
                c += evecs[j, i] * grad[j]
            c /= evals[i]
            for j in range(6):
                out[j] += c * evecs[j, i]
    return out


@njit(cache=True)
def _chol_solve(nmat, grad):
    # returns (x, ok); ok is False when a pivot is too small to trust
    n = 6
    l = np.zeros((n, n))
    dmax = 0.0
    for i in range(n):
        dmax = max(dmax, nmat[i, i])
    if dmax <= 0.0:
        return np.zeros(n), False
    for j in range(n):
        s = nmat[j, j]
        for k in range(j):
            s -= l[j, k] * l[j, k]
        if s <= CHOL_PIVOT_RTOL * dmax:
            return np.zeros(n), False
        l[j, j] = np.sqrt(s)
        for i in range(j + 1, n):
            s = nmat[i, j]
            for k in range(j):
                s -= l[i, k] * l[j, k]
            l[i, j] = s / l[j, j]
    y = np.zeros(n)
    for i in range(n):
        s = grad[i]
        for k in range(i):
            s -= l[i, k] * y[k]
        y[i] = s / l[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= l[k, i] * x[k]
        x[i] = s / l[i, i]
    return x, True


@njit(cache=True)
def _gauss_newton(x0, rho, fbr, w, max_iter, tol, reg):
    x = x0.copy()
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        nmat, grad, _ = _linearize(x, rho, fbr, w)
        if reg > 0.0:
            d = 0.0
            for i in range(6):
                d = max(d, nmat[i, i])
            for i in range(6):
                nmat[i, i] += reg * d
        dx, ok = _chol_solve(nmat, grad)
        if not ok:
            dx = _pinv_solve(nmat, grad)
        step = 0.0
        for i in range(6):
            x[i] += dx[i]
            step += dx[i] * dx[i]
        step = np.sqrt(step)
        if not np.isfinite(step):
            break
        if step < tol:
            converged = True
            break
    return x, it, converged


def _check_geometry(rho: NDArray, w: NDArray, planar: bool) -> None:
    s = np.zeros((3, 3))
    for r, wp in zip(rho, w):
        k = skew(r)
        s += wp * (k.T @ k)
    if planar:
        s += PLANAR_TIKHONOV * np.max(np.diag(s)) * np.eye(3)
    ev = np.linalg.eigvalsh(s)
    if ev[-1] <= 0.0 or ev[0] <= ev[-1] / COND_LIMIT:
        raise RankDeficient("pair lever arms cannot resolve angular acceleration")


def _covariance(nmat: NDArray, scale: float) -> NDArray[np.float64]:
    evals, evecs = np.linalg.eigh(nmat)
    top = evals[-1]
    if top <= 0.0:
        return np.diag(np.full(6, np.inf))
    keep = evals > top * NULL_EIG_RTOL
    inv = (evecs[:, keep] / evals[keep]) @ evecs[:, keep].T
    cov = scale * inv
    cov = 0.5 * (cov + cov.T)
    if not np.all(keep):
        loading = np.max(np.abs(evecs[:, ~keep]), axis=1)
        free = loading > 1e-6
        cov[free, :] = 0.0
        cov[:, free] = 0.0
        cov[free, free] = np.inf
    return cov


def solve_angular_arrays(
    rho: ArrayLike,
    f_breve: ArrayLike,
    sigma_breve: ArrayLike,
    omega_init: ArrayLike,
    omega_dot_init: ArrayLike | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    planar: bool = False,
    strict: bool = False,
) -> AngularState:
    """
    Array form of :func:`solve_angular`.

    Parameters
    ----------
    rho : array-like, shape (P, 3)
        Lever arm of the first IMU of every pair.
    f_breve : array-like, shape (P, 3)
        Rotational components.
    sigma_breve : array-like, shape (P,)
        Per-axis standard deviation of each pair's ``f_breve``.
    omega_init : array-like, shape (3,)
        Starting point; the solver converges to the sign branch nearest to it.
    """
    rho = np.ascontiguousarray(rho, dtype=np.float64).reshape(-1, 3)
    fbr = np.ascontiguousarray(f_breve, dtype=np.float64).reshape(-1, 3)
    w = 1.0 / np.broadcast_to(np.asarray(sigma_breve, dtype=np.float64), (len(rho),)) ** 2
    w = np.ascontiguousarray(w)
    _check_geometry(rho, w, planar)

    x0 = np.zeros(6)
    x0[:3] = np.asarray(omega_init, dtype=np.float64)
    if omega_dot_init is not None:
        x0[3:] = np.asarray(omega_dot_init, dtype=np.float64)
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial values must be finite")
    reg = PLANAR_TIKHONOV if planar else 0.0
    x, iterations, converged = _gauss_newton(x0, rho, fbr, w, int(max_iter), float(tol), reg)
    if not converged and strict:
        raise NonConvergence(f"no convergence after {iterations} iterations")

    nmat, _, chi2 = _linearize(x, rho, fbr, w)
    dof = 3 * len(rho) - 6  # (3/2) N - 6 with N = 2 * pairs
    exact = dof <= 0
    sigma_v_sq = 1.0 if exact else chi2 / dof
    cov = _covariance(nmat, sigma_v_sq) if np.all(np.isfinite(x)) else np.diag(np.full(6, np.inf))
    return AngularState(
        x[:3].copy(),
        x[3:].copy(),
        cov,
        float(sigma_v_sq),
        int(dof),
        int(iterations),
        bool(converged),
        bool(exact),
        float(chi2),
    )


def resolve_sign(omega: ArrayLike, reference: ArrayLike, p_omega: ArrayLike) -> NDArray[np.float64]:
    """
    Pick ``omega`` or ``-omega``, whichever lies nearer ``reference``.

    The rotational components are even in the rate, so both signs fit the
    data equally well and share one covariance. Distance is measured with
    the diagonal of ``p_omega`` as weights so that poorly determined axes
    barely take part; axes with infinite variance are ignored. Ties keep
    ``omega``.

    Examples
    --------
    >>> resolve_sign([0.0, 0.0, -0.3], [0.0, 0.0, 0.2], np.eye(3)).tolist()
    [-0.0, -0.0, 0.3]
    """
    omega = np.asarray(omega, dtype=np.float64)
    var = np.diag(np.asarray(p_omega, dtype=np.float64))
    ok = np.isfinite(var) & (var > 0.0)
    score = np.sum(omega[ok] * np.asarray(reference, dtype=np.float64)[ok] / var[ok])
    return -omega if score < 0.0 else omega.copy()


def solve_angular(
    pairs: Sequence[SymmetricPairMeasurement],
    omega_init: ArrayLike,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    omega_dot_init: ArrayLike | None = None,
    strict: bool = False,
) -> AngularState:
    """
    Estimate angular rate and acceleration from the rotational components of
    symmetric pairs.

    Weighted Gauss-Newton, weights ``1 / sigma_breve^2`` per pair, stopping
    when the step norm drops below ``tol`` or after ``max_iter`` steps. The
    covariance is the inverse normal matrix scaled by the a-posteriori
    variance factor ``v^T P^-1 v / r`` with ``r = 3 * pairs - 6``; for
    ``r <= 0`` the prior weights are used unscaled and the state is flagged
    ``exact_determined``.

    A non-converged solve returns the last iterate with ``converged=False``
    unless ``strict`` is set, in which case :class:`NonConvergence` is raised.

    Raises
    ------
    RankDeficient
        The lever arms cannot resolve angular acceleration.
    """
    if len(pairs) == 0:
        raise EmptyInput("no pair measurements")
    if any(p.rho is None for p in pairs):
        raise ValueError("pair measurements must carry their lever arm")
    planar = any(p.planar for p in pairs)
    return solve_angular_arrays(
        np.array([p.rho for p in pairs]),
        np.array([p.f_breve for p in pairs]),
        np.array([p.sigma_breve for p in pairs]),
        omega_init,
        omega_dot_init,
        max_iter,
        tol,
        planar,
        strict,
    )
