"""
Conventional gyro-free least squares and its mechanization.

Angular acceleration and ``a - g`` are solved jointly from all IMUs with the
centripetal term evaluated at the current integrated rate; the rate itself is
obtained by integrating the angular acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .ekf import AttitudeSolution
from .exceptions import SingularNormalMatrix, TooFewImus
from .geometry import ArrayGeometry
from .kinematics import body_rate, propagate
from .simulation import ImuFrameSample

MIN_IMUS = 6
COND_LIMIT = 1e12


@dataclass(frozen=True)
class GfJointState:
    omega_dot: NDArray[np.float64]
    lin: NDArray[np.float64]  # a_b - g_b
    cov: NDArray[np.float64]  # 6x6, residual-variance scaled
    cov_prior: NDArray[np.float64]  # 6x6, sensor-noise scaled
    residual_var: float
    dof: int


class GfSolver:
    """Caches the pseudo-inverse of the design matrix for one geometry."""

    def __init__(self, geometry: ArrayGeometry):
        n = len(geometry)
        if n < MIN_IMUS:
            raise TooFewImus(f"gyro-free least squares needs N >= {MIN_IMUS}, got {n}")
        dm = geometry.design_matrix()
        if dm.cond > COND_LIMIT:
            raise SingularNormalMatrix(
                f"H^T H is singular (rank {dm.rank}, cond {dm.cond:.3g})"
            )
        self.geometry = geometry
        self.h = dm.h
        self.normal_inv = np.linalg.inv(self.h.T @ self.h)
        self.pinv = self.normal_inv @ self.h.T
        self.dof = 3 * n - 6
        self.sigma_f2 = float(np.mean(geometry.sigma_f**2))

    def solve(self, f_b: ArrayLike, omega_current: ArrayLike) -> GfJointState:
        rho = self.geometry.rho
        omega = np.asarray(omega_current, dtype=np.float64)
        m = np.cross(omega, np.cross(omega, rho))
        y = (np.asarray(f_b, dtype=np.float64) - m).reshape(-1)
        x = self.pinv @ y
        res = y - self.h @ x
        s2 = float(res @ res) / self.dof
        return GfJointState(
            x[:3], x[3:], s2 * self.normal_inv, self.sigma_f2 * self.normal_inv, s2, self.dof
        )


def solve_joint(
    sample: ImuFrameSample | ArrayLike,
    geometry: ArrayGeometry,
    omega_current: ArrayLike,
) -> GfJointState:
    """
    Least-squares ``(omega_dot, a - g)`` from one frame sample.

    Raises
    ------
    TooFewImus
        Fewer than six IMUs.
    SingularNormalMatrix
        ``cond(H^T H)`` above 1e12.
    """
    f_b = sample.f_b if isinstance(sample, ImuFrameSample) else sample
    return GfSolver(geometry).solve(f_b, omega_current)


class GfMechanization:
    """
    Integrates gyro-free angular acceleration into rate and attitude.

    The rate is advanced with a trapezoid over consecutive angular
    accelerations; the centripetal term of each solve is evaluated at the
    Euler-predicted rate. The attitude is propagated with the interval-mean
    rate.
    """

    def __init__(
        self,
        geometry: ArrayGeometry,
        dcm0: ArrayLike,
        omega0: ArrayLike,
        omega_in: ArrayLike = (0.0, 0.0, 0.0),
    ):
        self.solver = GfSolver(geometry)
        self.dcm = np.array(dcm0, dtype=np.float64)
        self.omega = np.array(omega0, dtype=np.float64)
        self.omega_in = np.asarray(omega_in, dtype=np.float64)
        self.omega_dot: NDArray | None = None
        self.p_omega = np.zeros((3, 3))
        self.last: GfJointState | None = None

    def step(self, f_b: ArrayLike, dt: float | None) -> GfJointState:
        """Consume one sample; ``dt`` is the time since the previous one
        (``None`` for the first sample, which only initializes)."""
        if self.omega_dot is None or dt is None:
            state = self.solver.solve(f_b, self.omega)
            self.omega_dot = state.omega_dot
            self.last = state
            return state
        omega_pred = self.omega + self.omega_dot * dt
        state = self.solver.solve(f_b, omega_pred)
        omega_new = self.omega + 0.5 * (self.omega_dot + state.omega_dot) * dt
        omega_mid = 0.5 * (self.omega + omega_new)
        self.dcm = propagate(self.dcm, body_rate(omega_mid, self.dcm, self.omega_in), dt)
        self.omega = omega_new
        self.omega_dot = state.omega_dot
        self.p_omega = self.p_omega + state.cov_prior[:3, :3] * dt * dt
        self.last = state
        return state


def run_gf_mechanization(
    samples: Iterable[ImuFrameSample],
    geometry: ArrayGeometry,
    dcm0: ArrayLike,
    omega0: ArrayLike,
    omega_in: ArrayLike = (0.0, 0.0, 0.0),
) -> Iterator[AttitudeSolution]:
    """Open-loop gyro-free attitude stream (no filter corrections)."""
    mech = GfMechanization(geometry, dcm0, omega0, omega_in)
    t_prev = None
    for s in samples:
        mech.step(s.f_b, None if t_prev is None else s.t - t_prev)
        t_prev = s.t
        yield AttitudeSolution(s.t, mech.dcm.copy(), mech.omega.copy())
