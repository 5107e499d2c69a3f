"""
Synthetic rigid-body trajectories and noise-free or noisy accelerometer-array
measurements.

This is the reference forward model: every estimator in the package is checked
against specific forces generated here from known angular and linear motion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import InvalidProfile
from .geometry import ArrayGeometry
from .kinematics import GRAVITY, gravity_ned, orthonormalize, rodrigues

_AXIS_NAMES = {"x": 0, "y": 1, "z": 2, "roll": 0, "pitch": 1, "yaw": 2}


@dataclass(frozen=True)
class TrajectoryEpoch:
    t: float
    dcm_true: NDArray[np.float64]
    omega_true: NDArray[np.float64]  # omega_ib^b, rad/s
    omega_dot_true: NDArray[np.float64]  # rad/s^2
    accel_body_true: NDArray[np.float64]  # a_b, m/s^2


@dataclass(frozen=True)
class ImuFrameSample:
    """Specific forces of all array IMUs at one instant, body axes."""

    t: float
    f_b: NDArray[np.float64]  # (N, 3), m/s^2
    gyro: NDArray[np.float64] | None = None  # (N, 3), rad/s, when recorded


@dataclass
class Trajectory:
    """Ground-truth motion sampled on a uniform clock (array-of-struct view
    via indexing and iteration)."""

    t: NDArray[np.float64]
    dcm: NDArray[np.float64]  # (n, 3, 3)
    omega: NDArray[np.float64]  # (n, 3) omega_ib^b
    omega_dot: NDArray[np.float64]  # (n, 3)
    accel: NDArray[np.float64]  # (n, 3)
    omega_nb: NDArray[np.float64]  # (n, 3)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, k: int) -> TrajectoryEpoch:
        return TrajectoryEpoch(
            float(self.t[k]), self.dcm[k], self.omega[k], self.omega_dot[k], self.accel[k]
        )

    def __iter__(self) -> Iterator[TrajectoryEpoch]:
        return (self[k] for k in range(len(self)))

    @property
    def rate(self) -> float:
        return 1.0 / float(self.t[1] - self.t[0]) if len(self.t) > 1 else np.nan


@dataclass
class SampleSeries:
    """Stacked frame samples: ``f_b`` has shape (n_epochs, n_imus, 3)."""

    t: NDArray[np.float64]
    f_b: NDArray[np.float64]
    gyro: NDArray[np.float64] | None = None

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, k: int) -> ImuFrameSample:
        gyro = None if self.gyro is None else self.gyro[k]
        return ImuFrameSample(float(self.t[k]), self.f_b[k], gyro)

    def __iter__(self) -> Iterator[ImuFrameSample]:
        return (self[k] for k in range(len(self)))


# --------------------------------------------------------------------------
# motion profiles


class Profile:
    """
    Analytic motion: body rate w.r.t. the navigation frame, its derivative and
    the body linear acceleration, all as functions of time.
    """

    def omega(self, t: NDArray) -> NDArray:
        return np.zeros((len(t), 3))

    def omega_dot(self, t: NDArray) -> NDArray:
        return np.zeros((len(t), 3))

    def accel(self, t: NDArray) -> NDArray:
        return np.zeros((len(t), 3))

    def __add__(self, other: "Profile") -> "Superposition":
        return Superposition([self, other])


class Static(Profile):
    pass


class ConstantRate(Profile):
    def __init__(self, omega: ArrayLike):
        self.value = _vec3(omega, "omega")

    def omega(self, t):
        return np.tile(self.value, (len(t), 1))


class Sinusoid(Profile):
    """``omega_axis(t) = amp * sin(2 pi freq t + phase)``."""

    def __init__(self, axis, amp: float, freq: float, phase: float = 0.0):
        self.axis = _axis(axis)
        self.amp, self.freq, self.phase = float(amp), float(freq), float(phase)
        if self.freq <= 0.0:
            raise InvalidProfile("sinusoid frequency must be positive")

    def omega(self, t):
        out = np.zeros((len(t), 3))
        out[:, self.axis] = self.amp * np.sin(2 * np.pi * self.freq * t + self.phase)
        return out

    def omega_dot(self, t):
        out = np.zeros((len(t), 3))
        w = 2 * np.pi * self.freq
        out[:, self.axis] = self.amp * w * np.cos(w * t + self.phase)
        return out


class AccelSinusoid(Profile):
    """Oscillating body-frame linear acceleration along one axis."""

    def __init__(self, axis, amp: float, freq: float, phase: float = 0.0):
        self.axis = _axis(axis)
        self.amp, self.freq, self.phase = float(amp), float(freq), float(phase)
        if self.freq <= 0.0:
            raise InvalidProfile("sinusoid frequency must be positive")

    def accel(self, t):
        out = np.zeros((len(t), 3))
        out[:, self.axis] = self.amp * np.sin(2 * np.pi * self.freq * t + self.phase)
        return out


class Piecewise(Profile):
    """
    Sequence of segments, each holding a target body rate (and optionally a
    constant body acceleration).

    At the start of each segment the rate moves from the previous target to the
    new one along a raised-cosine ramp of ``ramp`` seconds, so the rate is C1
    and its derivative is analytic.
    """

    def __init__(self, segments: Sequence[Mapping], initial_omega: ArrayLike = (0, 0, 0)):
        if not segments:
            raise InvalidProfile("piecewise profile needs at least one segment")
        self.durations = []
        self.targets = []
        self.ramps = []
        self.accels = []
        for seg in segments:
            d = float(seg.get("duration", 0.0))
            ramp = float(seg.get("ramp", 0.5))
            if d <= 0.0:
                raise InvalidProfile("segment duration must be positive")
            if ramp < 0.0 or ramp > d:
                raise InvalidProfile("segment ramp must lie in [0, duration]")
            self.durations.append(d)
            self.ramps.append(ramp)
            self.targets.append(_vec3(seg.get("omega", (0, 0, 0)), "omega"))
            self.accels.append(_vec3(seg.get("accel", (0, 0, 0)), "accel"))
        self.starts = np.concatenate([[0.0], np.cumsum(self.durations)[:-1]])
        self.prev = np.vstack([_vec3(initial_omega, "initial_omega"), self.targets[:-1]])
        self.targets = np.array(self.targets)
        self.ramps = np.array(self.ramps)
        self.accels = np.array(self.accels)

    def _locate(self, t):
        k = np.clip(np.searchsorted(self.starts, t, side="right") - 1, 0, len(self.starts) - 1)
        tau = t - self.starts[k]
        ramp = self.ramps[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(ramp > 0, np.clip(tau / ramp, 0.0, 1.0), 1.0)
        return k, u, ramp

    def omega(self, t):
        k, u, _ = self._locate(t)
        blend = 0.5 * (1.0 - np.cos(np.pi * u))
        return self.prev[k] + (self.targets[k] - self.prev[k]) * blend[:, None]

    def omega_dot(self, t):
        k, u, ramp = self._locate(t)
        active = (u > 0.0) & (u < 1.0) & (ramp > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(active, 0.5 * np.pi / ramp * np.sin(np.pi * u), 0.0)
        return (self.targets[k] - self.prev[k]) * scale[:, None]

    def accel(self, t):
        k, _, _ = self._locate(t)
        return self.accels[k].copy()


class Superposition(Profile):
    def __init__(self, components: Sequence[Profile]):
        self.components = list(components)

    def omega(self, t):
        return sum((c.omega(t) for c in self.components), np.zeros((len(t), 3)))

    def omega_dot(self, t):
        return sum((c.omega_dot(t) for c in self.components), np.zeros((len(t), 3)))

    def accel(self, t):
        return sum((c.accel(t) for c in self.components), np.zeros((len(t), 3)))


def _axis(axis) -> int:
    if isinstance(axis, str):
        if axis.lower() not in _AXIS_NAMES:
            raise InvalidProfile(f"unknown axis {axis!r}")
        return _AXIS_NAMES[axis.lower()]
    if axis not in (0, 1, 2):
        raise InvalidProfile(f"unknown axis {axis!r}")
    return int(axis)


def _vec3(v, name) -> NDArray[np.float64]:
    try:
        out = np.asarray(v, dtype=np.float64).reshape(3)
    except (ValueError, TypeError):
        raise InvalidProfile(f"{name} must be a 3-vector, got {v!r}") from None
    if not np.all(np.isfinite(out)):
        raise InvalidProfile(f"{name} must be finite")
    return out


def profile_from_spec(spec) -> Profile:
    """
    Build a profile from a name, a mapping or a list of mappings.

    Accepted forms::

        "static"
        {"type": "constant_rate", "omega": [0, 0, 0.1]}
        {"type": "sinusoid", "axis": "roll", "amp": 0.2, "freq": 0.5}
        {"type": "accel_sinusoid", "axis": "x", "amp": 0.5, "freq": 0.1}
        {"type": "piecewise", "segments": [{"duration": 5, "omega": [0, 0, 0.5]}]}
        {"type": "sum", "components": [...]}     # or a bare list
    """
    if isinstance(spec, Profile):
        return spec
    if isinstance(spec, str):
        if spec == "static":
            return Static()
        raise InvalidProfile(f"unknown profile {spec!r}")
    if isinstance(spec, (list, tuple)):
        return Superposition([profile_from_spec(s) for s in spec])
    if not isinstance(spec, Mapping):
        raise InvalidProfile(f"cannot build a profile from {type(spec).__name__}")
    kind = spec.get("type")
    try:
        if kind == "static":
            return Static()
        if kind == "constant_rate":
            return ConstantRate(spec["omega"])
        if kind == "sinusoid":
            return Sinusoid(spec["axis"], spec["amp"], spec["freq"], spec.get("phase", 0.0))
        if kind == "accel_sinusoid":
            return AccelSinusoid(
                spec["axis"], spec["amp"], spec["freq"], spec.get("phase", 0.0)
            )
        if kind in ("piecewise", "piecewise_script"):
            return Piecewise(spec["segments"], spec.get("initial_omega", (0, 0, 0)))
        if kind == "sum":
            return Superposition([profile_from_spec(s) for s in spec["components"]])
    except KeyError as exc:
        raise InvalidProfile(f"profile {kind!r} is missing {exc}") from None
    raise InvalidProfile(f"unknown profile type {kind!r}")


# --------------------------------------------------------------------------
# trajectory generation and measurement synthesis


def make_trajectory(
    profile,
    duration: float,
    rate: float,
    dcm0: ArrayLike | None = None,
    omega_in: ArrayLike | None = None,
    substeps: int = 8,
) -> Trajectory:
    """
    Sample a kinematically consistent trajectory.

    Epochs sit at ``t_k = k / rate`` for ``k = 0 .. round(duration * rate) - 1``.
    The attitude is integrated from ``dcm0`` with ``substeps`` exact rotation
    increments per sample interval, each evaluated at its midpoint rate.

    ``omega_in`` is the navigation-frame rotation rate (e.g. earth rate); the
    returned ``omega`` is the inertial rate ``omega_nb + R^T omega_in``.
    """
    prof = profile_from_spec(profile)
    if not 10.0 <= rate <= 1000.0:
        raise InvalidProfile("rate must lie in [10, 1000] Hz")
    if duration <= 0.0:
        raise InvalidProfile("duration must be positive")
    n = int(round(duration * rate))
    if n < 1:
        raise InvalidProfile("duration shorter than one sample")
    dt = 1.0 / rate
    t = np.arange(n) * dt
    omega_nb = prof.omega(t)
    omega_dot_nb = prof.omega_dot(t)
    accel = prof.accel(t)

    # combined rotation increment over each interval
    h = dt / substeps
    inc = np.broadcast_to(np.eye(3), (max(n - 1, 0), 3, 3)).copy()
    for s in range(substeps):
        tm = t[:-1] + (s + 0.5) * h
        inc = inc @ _rodrigues_batch(prof.omega(tm) * h)

    dcm = np.empty((n, 3, 3))
    dcm[0] = np.eye(3) if dcm0 is None else orthonormalize(dcm0)
    for k in range(1, n):
        r = dcm[k - 1] @ inc[k - 1]
        dcm[k] = orthonormalize(r) if k % 64 == 0 else r

    if omega_in is None:
        omega_ib = omega_nb.copy()
        omega_dot_ib = omega_dot_nb.copy()
    else:
        w_in_b = np.einsum("kji,j->ki", dcm, np.asarray(omega_in, dtype=np.float64))
        omega_ib = omega_nb + w_in_b
        omega_dot_ib = omega_dot_nb - np.cross(omega_nb, w_in_b)
    return Trajectory(t, dcm, omega_ib, omega_dot_ib, accel, omega_nb)


def _rodrigues_batch(phi: NDArray) -> NDArray:
    theta2 = np.einsum("ki,ki->k", phi, phi)
    small = theta2 < 1e-12
    theta = np.sqrt(np.where(small, 1.0, theta2))
    a = np.where(small, 1.0 - theta2 / 6.0, np.sin(theta) / theta)
    b = np.where(small, 0.5 - theta2 / 24.0, (1.0 - np.cos(theta)) / np.where(small, 1.0, theta2))
    k = np.zeros((len(phi), 3, 3))
    k[:, 0, 1], k[:, 0, 2] = -phi[:, 2], phi[:, 1]
    k[:, 1, 0], k[:, 1, 2] = phi[:, 2], -phi[:, 0]
    k[:, 2, 0], k[:, 2, 1] = -phi[:, 1], phi[:, 0]
    return np.eye(3) + a[:, None, None] * k + b[:, None, None] * (k @ k)


def specific_force(
    rho: NDArray, omega: NDArray, omega_dot: NDArray, accel: NDArray, g_b: NDArray
) -> NDArray:
    """``a + w x (w x rho) + w_dot x rho - g_b`` for every lever arm in ``rho``."""
    rho = np.atleast_2d(rho)
    return (
        accel
        + np.cross(omega, np.cross(omega, rho))
        + np.cross(omega_dot, rho)
        - g_b
    )


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def synth_measurement(
    epoch: TrajectoryEpoch,
    geometry: ArrayGeometry,
    noise_on: bool = False,
    rng_seed=None,
    g: float = GRAVITY,
) -> ImuFrameSample:
    """
    Body-frame specific force of every IMU in the array at one epoch.

    With ``noise_on`` each axis gets independent zero-mean Gaussian noise of
    the placement's ``sigma_f``; ``rng_seed`` may be an int or a Generator.
    """
    g_b = epoch.dcm_true.T @ gravity_ned(g)
    f = specific_force(
        geometry.rho, epoch.omega_true, epoch.omega_dot_true, epoch.accel_body_true, g_b
    )
    if noise_on:
        f = f + _rng(rng_seed).standard_normal(f.shape) * geometry.sigma_f[:, None]
    return ImuFrameSample(epoch.t, f)


def synthesize(
    trajectory: Trajectory,
    geometry: ArrayGeometry,
    noise_on: bool = False,
    seed=None,
    g: float = GRAVITY,
) -> SampleSeries:
    """Vectorized :func:`synth_measurement` over a whole trajectory."""
    g_b = np.einsum("kji,j->ki", trajectory.dcm, gravity_ned(g))
    rho = geometry.rho[None, :, :]
    w = trajectory.omega[:, None, :]
    f = (
        trajectory.accel[:, None, :]
        + np.cross(w, np.cross(w, rho))
        + np.cross(trajectory.omega_dot[:, None, :], rho)
        - g_b[:, None, :]
    )
    if noise_on:
        f = f + _rng(seed).standard_normal(f.shape) * geometry.sigma_f[None, :, None]
    return SampleSeries(trajectory.t.copy(), f)


def synthesize_gyro(
    trajectory: Trajectory, sigma_g: float, seed=None
) -> NDArray[np.float64]:
    """True inertial body rate plus white noise, shape (n, 3)."""
    noise = _rng(seed).standard_normal(trajectory.omega.shape) * sigma_g
    return trajectory.omega + noise
