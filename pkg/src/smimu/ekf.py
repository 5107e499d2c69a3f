"""
Error-state attitude filter with gravity-vector updates.

The error state is the navigation-frame attitude error ``psi`` defined by
``R_true = exp([psi x]) R_est``. Between updates the error covariance grows
with the uncertainty of the rate used to propagate the attitude; when the
body is judged unaccelerated the measured gravity direction corrects roll and
pitch. Heading is not observable from gravity and is never corrected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import SingularInnovation
from .kinematics import GRAVITY, body_rate, gravity_ned, propagate, rodrigues, skew
from .sgf import GravityEstimate

DEFAULT_P0 = 1e-4  # rad^2
DEFAULT_ACCEL_THRESHOLD = 0.1  # m/s^2
COND_LIMIT = 1e12


@dataclass(frozen=True)
class AttitudeSolution:
    """One epoch of filter output."""

    t: float
    dcm: NDArray[np.float64]
    omega: NDArray[np.float64]
    p: NDArray[np.float64] | None = None
    gate_passed: NDArray[np.bool_] | None = None
    updated: bool = False


@dataclass(frozen=True)
class EkfState:
    """
    Parameters
    ----------
    dcm : (3, 3) body-to-NED attitude.
    p : (3, 3) attitude-error covariance [rad^2].
    q_w : (3, 3) rate-noise spectral density used when no per-epoch rate
        covariance is supplied to :func:`predict` [rad^2/s].
    q_nu : (3, 3) specific-force noise covariance used when the gravity
        measurement carries no variance of its own [(m/s^2)^2].
    """

    dcm: NDArray[np.float64]
    p: NDArray[np.float64] = field(default_factory=lambda: DEFAULT_P0 * np.eye(3))
    q_w: NDArray[np.float64] = field(default_factory=lambda: np.zeros((3, 3)))
    q_nu: NDArray[np.float64] = field(default_factory=lambda: 0.012**2 * np.eye(3))
    omega_in: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    g: float = GRAVITY
    last_correction: NDArray[np.float64] | None = None
    last_residual: NDArray[np.float64] | None = None


def _sym(p: NDArray) -> NDArray:
    return 0.5 * (p + p.T)


def predict(
    state: EkfState,
    omega: ArrayLike,
    p_omega: ArrayLike | None,
    dt: float,
) -> EkfState:
    """
    Propagate attitude and error covariance over ``dt``.

    ``omega`` is the inertial body rate. If ``p_omega`` (the per-epoch
    covariance of that rate, e.g. after gating) is given, the process noise is
    its spectral-density equivalent ``p_omega * dt``; otherwise ``state.q_w``
    is used. With ``F = 0`` and ``G = -R``::

        P <- P + R Q_w R^T dt
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    r = state.dcm
    q = state.q_w if p_omega is None else np.asarray(p_omega, dtype=np.float64) * dt
    omega_nb = body_rate(omega, r, state.omega_in)
    if np.any(omega_nb):
        dcm = propagate(r, omega_nb, dt)
    else:
        dcm = r
    g_shape = -r
    p = state.p + g_shape @ q @ g_shape.T * dt
    return replace(state, dcm=dcm, p=_sym(p))


@dataclass(frozen=True)
class GravityResidual:
    dg: NDArray[np.float64]  # m/s^2, NED

    def __post_init__(self):
        if not np.all(np.isfinite(self.dg)):
            raise ValueError("gravity residual must be finite")


def gravity_residual(dcm: ArrayLike, g_b_hat: ArrayLike, g: float = GRAVITY) -> GravityResidual:
    """``g_n - R g_b_hat``: measured gravity mapped to NED, minus the model."""
    return GravityResidual(gravity_ned(g) - np.asarray(dcm) @ np.asarray(g_b_hat, dtype=np.float64))


def measurement_update(
    state: EkfState, gravity: GravityEstimate | ArrayLike
) -> EkfState:
    """
    Gravity-vector update under the zero-acceleration assumption.

    ``gravity`` is the body-frame gravity estimate (the negated mean specific
    force). When it is a :class:`GravityEstimate` its variance sets the
    measurement noise, otherwise ``state.q_nu`` does.

    The gain row along the gravity direction is removed before the update, so
    the correction never rotates about ``g_n`` and the heading error is carried
    unchanged (a Schmidt update of the unobservable component); the Joseph
    form keeps ``P`` valid for that modified gain.

    Raises
    ------
    SingularInnovation
        The innovation covariance is numerically singular.
    """
    if isinstance(gravity, GravityEstimate):
        g_b = gravity.g_b_hat
        q_nu = gravity.var * np.eye(3)
    else:
        g_b = np.asarray(gravity, dtype=np.float64)
        q_nu = state.q_nu
    r = state.dcm
    g_n = gravity_ned(state.g)
    h = -skew(g_n)
    dg = gravity_residual(r, g_b, state.g).dg

    noise = r @ q_nu @ r.T
    s = h @ state.p @ h.T + noise
    if np.linalg.cond(s) > COND_LIMIT:
        raise SingularInnovation("innovation covariance is singular")
    k = np.linalg.solve(s, h @ state.p).T
    u = g_n / np.linalg.norm(g_n)
    k = k - np.outer(u, u @ k)

    dx = k @ dg
    dcm = rodrigues(dx) @ r
    ikh = np.eye(3) - k @ h
    p = ikh @ state.p @ ikh.T + k @ noise @ k.T
    return replace(state, dcm=dcm, p=_sym(p), last_correction=dx, last_residual=dg)


def zero_accel_detect(
    f_bar_pairs: Sequence, g_e: float = GRAVITY, threshold: float = DEFAULT_ACCEL_THRESHOLD
) -> bool:
    """
    True when the mean linear specific force has gravity's magnitude to within
    ``threshold`` (strict inequality).

    ``f_bar_pairs`` holds 3-vectors or objects with an ``f_bar`` attribute.
    """
    if len(f_bar_pairs) == 0:
        raise ValueError("need at least one pair")
    vecs = np.array([getattr(f, "f_bar", f) for f in f_bar_pairs], dtype=np.float64)
    return bool(abs(np.linalg.norm(vecs.reshape(-1, 3).mean(axis=0)) - g_e) < threshold)
