"""
IMU placements on a rigid body, symmetry pairing and the joint design matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import ConfigError, OddArraySize, UnpairedImu
from .kinematics import skew

FULL_3D = "full3d"
PLANAR_2D = "planar2d"
DEFAULT_EPS_SYM = 1e-4  # m
DEFAULT_MAX_RADIUS = 10.0  # m
DEFAULT_SIGMA_F = 0.012  # m/s^2

_AXES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


def _axis_index(axis) -> int:
    try:
        return _AXES[axis.lower() if isinstance(axis, str) else int(axis)]
    except (KeyError, ValueError, TypeError):
        raise ConfigError(f"invalid planar axis {axis!r}") from None


@dataclass(frozen=True)
class ImuPlacement:
    """
    One IMU rigidly mounted on the body.

    Parameters
    ----------
    id : int
        Identifier, unique within an array.
    rho : array-like, shape (3,)
        Lever arm from the body center of mass, body axes [m].
    r_s_to_b : array-like, shape (3, 3), optional
        Constant sensor-to-body rotation. Identity if omitted.
    sigma_f : float
        Accelerometer white-noise standard deviation per axis [m/s^2].
    """

    id: int
    rho: NDArray[np.float64]
    r_s_to_b: NDArray[np.float64] = field(default_factory=lambda: np.eye(3))
    sigma_f: float = DEFAULT_SIGMA_F
    max_radius: float = field(default=DEFAULT_MAX_RADIUS, repr=False, compare=False)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=np.float64).reshape(3)
        r = np.asarray(self.r_s_to_b, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(rho)):
            raise ConfigError(f"IMU {self.id}: lever arm must be finite")
        if np.linalg.norm(rho) > self.max_radius:
            raise ConfigError(
                f"IMU {self.id}: |rho| = {np.linalg.norm(rho):.3f} m exceeds "
                f"array radius bound {self.max_radius} m"
            )
        if not self.sigma_f > 0.0:
            raise ConfigError(f"IMU {self.id}: sigma_f must be positive")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-6) or np.linalg.det(r) < 0:
            raise ConfigError(f"IMU {self.id}: r_s_to_b is not a proper rotation")
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "r_s_to_b", r)
        object.__setattr__(self, "sigma_f", float(self.sigma_f))


@dataclass(frozen=True)
class SymmetryPairing:
    """Mirror pairs ``(i, j)`` of IMU ids and the symmetry they satisfy."""

    pairs: tuple[tuple[int, int], ...]
    mode: str = FULL_3D
    axis: int | None = None

    @property
    def planar(self) -> bool:
        return self.mode == PLANAR_2D


def mirror(rho: ArrayLike, mode: str = FULL_3D, axis=2) -> NDArray[np.float64]:
    """Lever arm of the ideal symmetric partner of ``rho``."""
    rho = np.asarray(rho, dtype=np.float64)
    if mode == FULL_3D:
        return -rho
    if mode == PLANAR_2D:
        out = -rho
        k = _axis_index(axis)
        out[k] = rho[k]
        return out
    raise ConfigError(f"unknown pairing mode {mode!r}")


def validate_and_pair(
    placements: Sequence[ImuPlacement],
    mode: str = FULL_3D,
    eps_sym: float = DEFAULT_EPS_SYM,
    axis=2,
) -> SymmetryPairing:
    """
    Group IMUs into mirror pairs.

    Matching is greedy in ascending id order. When more than one unpaired IMU
    lies within ``eps_sym`` of the mirror point, the one with the smallest
    residual wins, then the lowest id.

    Raises
    ------
    OddArraySize
        The array has an odd number of IMUs.
    UnpairedImu
        Some IMU has no partner within ``eps_sym``.
    """
    if eps_sym <= 0.0:
        raise ConfigError("eps_sym must be positive")
    if mode not in (FULL_3D, PLANAR_2D):
        raise ConfigError(f"unknown pairing mode {mode!r}")
    if len(placements) % 2:
        raise OddArraySize(f"{len(placements)} IMUs cannot be fully paired")
    ax = _axis_index(axis) if mode == PLANAR_2D else None
    ordered = sorted(placements, key=lambda p: p.id)
    unpaired = {p.id: p for p in ordered}
    pairs = []
    for p in ordered:
        if p.id not in unpaired:
            continue
        del unpaired[p.id]
        target = mirror(p.rho, mode, ax if ax is not None else 2)
        best = None
        for q in unpaired.values():
            res = float(np.linalg.norm(q.rho - target))
            if res <= eps_sym and (best is None or (res, q.id) < best):
                best = (res, q.id)
        if best is None:
            raise UnpairedImu(
                f"IMU {p.id} at {p.rho.tolist()} has no mirror partner within "
                f"{eps_sym} m"
            )
        del unpaired[best[1]]
        pairs.append((p.id, best[1]))
    return SymmetryPairing(tuple(pairs), mode, ax)


def check_pairing(
    placements: Sequence[ImuPlacement],
    pairs: Iterable[Sequence[int]],
    mode: str = FULL_3D,
    eps_sym: float = DEFAULT_EPS_SYM,
    axis=2,
) -> SymmetryPairing:
    """Validate an explicitly listed pairing (e.g. from a dataset manifest)."""
    by_id = {p.id: p for p in placements}
    ax = _axis_index(axis) if mode == PLANAR_2D else None
    seen: set[int] = set()
    out = []
    for i, j in pairs:
        i, j = int(i), int(j)
        for k in (i, j):
            if k not in by_id:
                raise ConfigError(f"pairing references unknown IMU {k}")
            if k in seen:
                raise ConfigError(f"IMU {k} appears in more than one pair")
            seen.add(k)
        res = np.linalg.norm(by_id[j].rho - mirror(by_id[i].rho, mode, 2 if ax is None else ax))
        if res > eps_sym:
            raise UnpairedImu(f"IMUs {i} and {j} are not mirrored (residual {res:.2e} m)")
        out.append((i, j))
    if seen != set(by_id):
        missing = sorted(set(by_id) - seen)
        raise UnpairedImu(f"IMUs {missing} are not part of any pair")
    return SymmetryPairing(tuple(out), mode, ax)


@dataclass(frozen=True)
class DesignMatrix:
    """Stacked ``[-[rho_i x] | I3]`` blocks plus normal-matrix diagnostics."""

    h: NDArray[np.float64]
    rank: int
    cond: float


def design_matrix(placements: Sequence[ImuPlacement] | NDArray) -> DesignMatrix:
    """
    Joint gyro-free design matrix.

    Row block ``i`` is ``[-skew(rho_i) | I3]`` so that
    ``H @ [omega_dot, a - g]`` reproduces ``omega_dot x rho_i + (a - g)``.
    Singularity is reported through ``rank`` and ``cond`` of ``H^T H``,
    never raised.
    """
    rho = _as_rho_array(placements)
    n = rho.shape[0]
    h = np.zeros((3 * n, 6))
    for i, r in enumerate(rho):
        h[3 * i : 3 * i + 3, :3] = -skew(r)
        h[3 * i : 3 * i + 3, 3:] = np.eye(3)
    hth = h.T @ h
    sv = np.linalg.svd(hth, compute_uv=False)
    rank = int(np.sum(sv > sv[0] * 1e-12)) if sv[0] > 0 else 0
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return DesignMatrix(h, rank, cond)


def _as_rho_array(placements) -> NDArray[np.float64]:
    if isinstance(placements, np.ndarray):
        return np.asarray(placements, dtype=np.float64).reshape(-1, 3)
    return np.array([p.rho for p in placements], dtype=np.float64).reshape(-1, 3)


class ArrayGeometry:
    """
    An IMU array: placements plus an optional symmetry pairing.

    Placements are kept in the order given; ``rho`` and ``sigma_f`` are row
    aligned with that order, which is also the order of the ``f_b`` rows in
    every frame sample for this array.
    """

    def __init__(
        self,
        placements: Sequence[ImuPlacement],
        pairing: SymmetryPairing | None = None,
    ):
        if not placements:
            raise ConfigError("an array needs at least one IMU")
        ids = [p.id for p in placements]
        if len(set(ids)) != len(ids):
            raise ConfigError("IMU ids must be unique")
        self.placements = tuple(placements)
        self.pairing = pairing
        self._index = {pid: k for k, pid in enumerate(ids)}
        self.rho = np.array([p.rho for p in placements])
        self.sigma_f = np.array([p.sigma_f for p in placements])
        self.r_s_to_b = np.array([p.r_s_to_b for p in placements])
        self.rho.setflags(write=False)
        self.sigma_f.setflags(write=False)
        self.r_s_to_b.setflags(write=False)

    @classmethod
    def paired(
        cls,
        placements: Sequence[ImuPlacement],
        mode: str = FULL_3D,
        eps_sym: float = DEFAULT_EPS_SYM,
        axis=2,
    ) -> "ArrayGeometry":
        return cls(placements, validate_and_pair(placements, mode, eps_sym, axis))

    def __len__(self) -> int:
        return len(self.placements)

    @property
    def ids(self) -> list[int]:
        return [p.id for p in self.placements]

    def index_of(self, imu_id: int) -> int:
        return self._index[imu_id]

    def pair_indices(self) -> NDArray[np.intp]:
        """Row indices ``(k_i, k_j)`` for every pair, shape (n_pairs, 2)."""
        if self.pairing is None:
            raise ConfigError("array has no symmetry pairing")
        return np.array(
            [(self._index[i], self._index[j]) for i, j in self.pairing.pairs],
            dtype=np.intp,
        ).reshape(-1, 2)

    def subset(self, ids: Sequence[int]) -> "ArrayGeometry":
        return ArrayGeometry([self.placements[self._index[i]] for i in ids])

    def design_matrix(self) -> DesignMatrix:
        return design_matrix(self.rho)

    def __repr__(self) -> str:
        mode = self.pairing.mode if self.pairing else "unpaired"
        return f"ArrayGeometry(n={len(self)}, {mode})"


def cube_array(radius: float = 0.5, sigma_f: float = DEFAULT_SIGMA_F) -> ArrayGeometry:
    """
    Eight IMUs on the vertices of a cube, each ``radius`` meters from the
    center, paired across the body diagonals.
    """
    s = radius / np.sqrt(3.0)
    signs = [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)]
    placements = []
    for k, sg in enumerate(signs):
        placements.append(ImuPlacement(2 * k, s * np.array(sg, dtype=float), sigma_f=sigma_f))
        placements.append(
            ImuPlacement(2 * k + 1, -s * np.array(sg, dtype=float), sigma_f=sigma_f)
        )
    return ArrayGeometry.paired(placements, FULL_3D)


def octahedron_array(
    radius: float = 0.5, sigma_f: float = DEFAULT_SIGMA_F
) -> ArrayGeometry:
    """Six IMUs on the coordinate axes at ``+-radius``."""
    placements = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = radius
        placements.append(ImuPlacement(2 * k, e, sigma_f=sigma_f))
        placements.append(ImuPlacement(2 * k + 1, -e, sigma_f=sigma_f))
    return ArrayGeometry.paired(placements, FULL_3D)


def planar_array(
    radius: float = 0.5,
    n_pairs: int = 2,
    sigma_f: float = DEFAULT_SIGMA_F,
    height: float = 0.0,
) -> ArrayGeometry:
    """
    ``2 * n_pairs`` IMUs on a circle in the body x-y plane, mirrored through the
    z axis. ``height`` offsets every IMU along z.
    """
    placements = []
    for k in range(n_pairs):
        ang = np.pi * k / n_pairs + np.pi / 4
        r = np.array([radius * np.cos(ang), radius * np.sin(ang), height])
        placements.append(ImuPlacement(2 * k, r, sigma_f=sigma_f))
        placements.append(
            ImuPlacement(2 * k + 1, np.array([-r[0], -r[1], height]), sigma_f=sigma_f)
        )
    return ArrayGeometry.paired(placements, PLANAR_2D, axis=2)
