"""
Half-sum / half-difference decomposition of mirrored IMU pairs.

For a pair with ``rho_j = -rho_i`` the half-sum ``f_bar`` holds only the
body's linear specific force ``a_b - g_b`` and the half-difference
``f_breve`` only the rotational terms at ``rho_i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import ConfigError, MixedGradeWarning
from .geometry import ArrayGeometry, SymmetryPairing

# T maps (f_i, f_j) to (f_bar, f_breve) on each axis
T = np.array([[0.5, 0.5], [0.5, -0.5]])


@dataclass(frozen=True)
class SymmetricPairMeasurement:
    pair_id: tuple[int, int] | int
    f_bar: NDArray[np.float64]
    f_breve: NDArray[np.float64]
    sigma_bar: float
    sigma_breve: float
    cross_cov: float = 0.0  # per-axis covariance between f_bar and f_breve
    rho: NDArray[np.float64] | None = None  # lever arm of the first IMU
    planar: bool = False
    axis: int | None = None


def transform_covariance(sigma_i: float, sigma_j: float) -> NDArray[np.float64]:
    """Per-axis 2x2 covariance of ``(f_bar, f_breve)``: ``T diag(s_i^2, s_j^2) T^T``."""
    return T @ np.diag([sigma_i**2, sigma_j**2]) @ T.T


def decompose(
    f_i: ArrayLike,
    f_j: ArrayLike,
    sigma_i: float,
    sigma_j: float,
    pair_id=0,
    rho: ArrayLike | None = None,
) -> SymmetricPairMeasurement:
    """
    Split a mirrored pair into linear and rotational parts.

    Emits :class:`MixedGradeWarning` if the two sensors have different noise
    levels, since the outputs are then correlated.
    """
    f_i = np.asarray(f_i, dtype=np.float64)
    f_j = np.asarray(f_j, dtype=np.float64)
    if not (np.all(np.isfinite(f_i)) and np.all(np.isfinite(f_j))):
        raise ValueError("specific forces must be finite")
    cov = transform_covariance(sigma_i, sigma_j)
    if not np.isclose(sigma_i, sigma_j, rtol=1e-12, atol=0.0):
        warnings.warn(
            f"pair {pair_id}: sigma {sigma_i} != {sigma_j}, linear and rotational "
            "components are correlated",
            MixedGradeWarning,
            stacklevel=2,
        )
    return SymmetricPairMeasurement(
        pair_id,
        0.5 * (f_i + f_j),
        0.5 * (f_i - f_j),
        float(np.sqrt(cov[0, 0])),
        float(np.sqrt(cov[1, 1])),
        float(cov[0, 1]),
        None if rho is None else np.asarray(rho, dtype=np.float64),
    )


def decompose_2d(
    f_i: ArrayLike,
    f_j: ArrayLike,
    pairing: SymmetryPairing,
    sigma_i: float,
    sigma_j: float,
    pair_id=0,
    rho: ArrayLike | None = None,
) -> SymmetricPairMeasurement:
    """Planar variant of :func:`decompose`; the result is flagged so the angular
    solver treats it with the reduced in-plane model."""
    if not pairing.planar:
        raise ConfigError("decompose_2d needs a planar pairing")
    m = decompose(f_i, f_j, sigma_i, sigma_j, pair_id, rho)
    return SymmetricPairMeasurement(
        m.pair_id,
        m.f_bar,
        m.f_breve,
        m.sigma_bar,
        m.sigma_breve,
        m.cross_cov,
        m.rho,
        planar=True,
        axis=pairing.axis,
    )


def decompose_sample(f_b: ArrayLike, geometry: ArrayGeometry) -> list[SymmetricPairMeasurement]:
    """Decompose every pair of one frame sample (rows of ``f_b`` follow the
    geometry's placement order)."""
    pairing = geometry.pairing
    if pairing is None:
        raise ConfigError("array has no symmetry pairing")
    f_b = np.asarray(f_b, dtype=np.float64)
    out = []
    for (i, j), (ki, kj) in zip(pairing.pairs, geometry.pair_indices()):
        args = (f_b[ki], f_b[kj])
        sig = (geometry.sigma_f[ki], geometry.sigma_f[kj])
        if pairing.planar:
            out.append(decompose_2d(*args, pairing, *sig, pair_id=(i, j), rho=geometry.rho[ki]))
        else:
            out.append(decompose(*args, *sig, pair_id=(i, j), rho=geometry.rho[ki]))
    return out


def decompose_arrays(
    f_b: NDArray, geometry: ArrayGeometry
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Vectorized decomposition without per-pair records.

    ``f_b`` may be a single sample (N, 3) or a stack (n, N, 3); returns
    ``(f_bar, f_breve)`` with the pair axis in place of the IMU axis.
    """
    idx = geometry.pair_indices()
    fi = f_b[..., idx[:, 0], :]
    fj = f_b[..., idx[:, 1], :]
    return 0.5 * (fi + fj), 0.5 * (fi - fj)
