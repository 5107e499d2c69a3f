"""Per-axis significance test on an estimated angular rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import norm

from .exceptions import ConfigError

DEFAULT_ALPHA_C = 1.645


@dataclass(frozen=True)
class GateConfig:
    alpha_c: float = DEFAULT_ALPHA_C

    def __post_init__(self):
        if not self.alpha_c > 0.0:
            raise ConfigError("alpha_c must be positive")

    @classmethod
    def from_confidence(cls, level: float) -> "GateConfig":
        """Threshold whose two-sided Gaussian tail mass is ``1 - level``."""
        return cls(float(norm.ppf(0.5 + 0.5 * level)))

    @property
    def two_sided_pass_rate(self) -> float:
        """Probability that a zero-mean Gaussian rate passes one axis."""
        return float(2.0 * norm.sf(self.alpha_c))


@dataclass(frozen=True)
class GateDecision:
    axis_passed: NDArray[np.bool_]
    omega_gated: NDArray[np.float64]
    cov_gated: NDArray[np.float64]


def gate(omega: ArrayLike, p_omega: ArrayLike, cfg: GateConfig | None = None) -> GateDecision:
    """
    Zero every rate component that is not significant at ``alpha_c``.

    Axis ``i`` fails when ``|omega_i| <= alpha_c * sqrt(P[i, i])``; a failed axis
    has its rate set to zero and row and column ``i`` of the covariance cleared.
    """
    cfg = cfg or GateConfig()
    omega = np.asarray(omega, dtype=np.float64)
    p = np.array(p_omega, dtype=np.float64)
    sigma = np.sqrt(np.clip(np.diag(p), 0.0, None))
    passed = np.abs(omega) > cfg.alpha_c * sigma
    omega_gated = np.where(passed, omega, 0.0)
    p[~passed, :] = 0.0
    p[:, ~passed] = 0.0
    return GateDecision(passed, omega_gated, p)


def reject_all(p_omega: ArrayLike | None = None) -> GateDecision:
    """Decision with every axis failed (used when the estimate is unusable)."""
    return GateDecision(np.zeros(3, dtype=bool), np.zeros(3), np.zeros((3, 3)))


def detect_rotation(decision: GateDecision) -> bool:
    return bool(np.any(decision.axis_passed))
