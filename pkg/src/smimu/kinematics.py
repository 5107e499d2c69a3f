"""
Rotation helpers and strapdown attitude propagation on SO(3).

Conventions
-----------
The navigation frame is NED and the attitude is stored as the direction cosine
matrix ``R_b^n`` that rotates body-frame vectors into the navigation frame.
Gravity in the navigation frame is ``(0, 0, +GRAVITY)``.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.transform import Rotation

GRAVITY = 9.80665  # m/s^2, standard gravity
EARTH_RATE = 7.292115e-5  # rad/s
DEFAULT_LATITUDE = 32.0  # deg
MAX_BODY_RATE = 50.0  # rad/s


def gravity_ned(g: float = GRAVITY) -> NDArray[np.float64]:
    return np.array([0.0, 0.0, g])


def skew(v: ArrayLike) -> NDArray[np.float64]:
    """
    Cross-product matrix ``[v x]`` such that ``skew(v) @ u == np.cross(v, u)``.
    """
    x, y, z = np.asarray(v, dtype=np.float64)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_x(angle: float) -> NDArray[np.float64]:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> NDArray[np.float64]:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> NDArray[np.float64]:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def earth_rate_ned(latitude_deg: float = DEFAULT_LATITUDE) -> NDArray[np.float64]:
    """
    Earth rotation rate resolved in a local NED frame at the given latitude.

    The transport rate is ignored, so this is also the full navigation-frame
    rate ``omega_in`` used by :func:`body_rate`.
    """
    lat = np.deg2rad(latitude_deg)
    return EARTH_RATE * np.array([np.cos(lat), 0.0, -np.sin(lat)])


def rodrigues(phi: ArrayLike) -> NDArray[np.float64]:
    """
    Exact matrix exponential ``exp([phi x])`` of a rotation vector.
    """
    phi = np.asarray(phi, dtype=np.float64)
    theta2 = float(phi @ phi)
    k = skew(phi)
    if theta2 < 1e-12:
        # Taylor terms beyond theta^4 are below double precision here
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
    else:
        theta = np.sqrt(theta2)
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * k + b * (k @ k)


def orthonormalize(m: ArrayLike) -> NDArray[np.float64]:
    """
    Closest proper rotation to ``m`` in the Frobenius sense (symmetric
    orthogonalization, ``m (m^T m)^{-1/2}``).
    """
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=np.float64))
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def body_rate(
    omega_ib_b: ArrayLike, dcm: ArrayLike, omega_in: ArrayLike
) -> NDArray[np.float64]:
    """
    Body rate with respect to the navigation frame.

    Parameters
    ----------
    omega_ib_b : array-like, shape (3,)
        Inertial angular rate of the body, resolved in body axes [rad/s].
    dcm : array-like, shape (3, 3)
        Body-to-navigation rotation ``R_b^n``.
    omega_in : array-like, shape (3,)
        Rate of the navigation frame w.r.t. inertial space, nav axes [rad/s].

    Returns
    -------
    numpy.ndarray, shape (3,)
        ``omega_ib_b - R_b^n^T omega_in``.
    """
    dcm = np.asarray(dcm, dtype=np.float64)
    return np.asarray(omega_ib_b, dtype=np.float64) - dcm.T @ np.asarray(
        omega_in, dtype=np.float64
    )


def propagate(dcm: ArrayLike, omega_nb_b: ArrayLike, dt: float) -> NDArray[np.float64]:
    """
    Advance the attitude by one step of constant body rate.

    Integrates ``dR/dt = R [omega x]`` exactly over ``dt`` and projects the
    result back onto SO(3) to stop round-off from accumulating.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    phi = np.asarray(omega_nb_b, dtype=np.float64) * dt
    return orthonormalize(np.asarray(dcm, dtype=np.float64) @ rodrigues(phi))


def euler_from_dcm(dcm: ArrayLike, degrees: bool = False) -> NDArray[np.float64]:
    """
    Roll, pitch and yaw (aerospace z-y-x sequence) of one or many DCMs.

    Returns an array of shape (..., 3) ordered ``(roll, pitch, yaw)``.
    """
    dcm = np.asarray(dcm, dtype=np.float64)
    ypr = Rotation.from_matrix(dcm.reshape(-1, 3, 3)).as_euler("ZYX", degrees=degrees)
    return ypr[:, ::-1].reshape(dcm.shape[:-2] + (3,))


def dcm_from_euler(rpy: ArrayLike, degrees: bool = False) -> NDArray[np.float64]:
    """Inverse of :func:`euler_from_dcm`."""
    rpy = np.asarray(rpy, dtype=np.float64)
    flat = rpy.reshape(-1, 3)[:, ::-1]
    m = Rotation.from_euler("ZYX", flat, degrees=degrees).as_matrix()
    return m.reshape(rpy.shape[:-1] + (3, 3))


def attitude_error(dcm_est: ArrayLike, dcm_true: ArrayLike) -> NDArray[np.float64]:
    """
    Navigation-frame rotation vector ``psi`` with ``R_est = exp([psi x]) R_true``.

    Works on single matrices or stacks of shape (n, 3, 3).
    """
    dcm_est = np.asarray(dcm_est, dtype=np.float64)
    dcm_true = np.asarray(dcm_true, dtype=np.float64)
    delta = dcm_est @ np.swapaxes(dcm_true, -1, -2)
    rv = Rotation.from_matrix(delta.reshape(-1, 3, 3)).as_rotvec()
    return rv.reshape(delta.shape[:-2] + (3,))
