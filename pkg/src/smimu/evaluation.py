"""
Scoring: attitude RMSE against truth and rotation-detection accuracy.

All angles are in degrees. The aggregate attitude RMSE of a run is the mean
of the roll and pitch RMSE; yaw is reported on its own because gravity
updates cannot observe it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .dataset import AlignedAttitude, wrap_deg
from .exceptions import EmptyPairing
from .kinematics import attitude_error, euler_from_dcm, rot_z

DEFAULT_ROTATION_THRESHOLD = 0.02  # rad/s


def rms(errors: ArrayLike, axis=None) -> NDArray[np.float64] | float:
    e = np.asarray(errors, dtype=np.float64)
    if e.size == 0:
        raise EmptyPairing("no paired epochs")
    out = np.sqrt(np.mean(e * e, axis=axis))
    return float(out) if np.ndim(out) == 0 else out


def deltas(baseline: float, proposed: float) -> tuple[float, float]:
    """``(baseline - proposed, 100 * (baseline - proposed) / baseline)``; positive
    when the proposed method is better."""
    d = baseline - proposed
    rel = 100.0 * d / baseline if baseline != 0.0 else (0.0 if d == 0.0 else math.copysign(math.inf, d))
    return d, rel


def format_delta(delta_abs: float, delta_rel: float) -> str:
    """Table-style cell, e.g. ``1.5 (32%)``; the percentage is truncated."""
    return f"{delta_abs:.1f} ({math.trunc(delta_rel):d}%)"


@dataclass(frozen=True)
class RmseReport:
    """
    Per-angle RMSE of one run, optionally against a baseline run.

    ``delta_abs`` and ``delta_rel`` compare the aggregate (roll/pitch mean)
    with ``baseline`` and are ``None`` without one.
    """

    roll: float
    pitch: float
    yaw: float
    n: int
    label: str = ""
    trajectory: str = ""
    baseline: float | None = None

    @property
    def aggregate(self) -> float:
        return 0.5 * (self.roll + self.pitch)

    @property
    def delta_abs(self) -> float | None:
        return None if self.baseline is None else deltas(self.baseline, self.aggregate)[0]

    @property
    def delta_rel(self) -> float | None:
        return None if self.baseline is None else deltas(self.baseline, self.aggregate)[1]

    def against(self, baseline: "RmseReport | float") -> "RmseReport":
        b = baseline.aggregate if isinstance(baseline, RmseReport) else float(baseline)
        return RmseReport(self.roll, self.pitch, self.yaw, self.n, self.label, self.trajectory, b)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(aggregate=self.aggregate, delta_abs=self.delta_abs, delta_rel=self.delta_rel)
        return d


def rmse(
    estimates: AlignedAttitude | ArrayLike,
    truth: ArrayLike | None = None,
    label: str = "",
    trajectory: str = "",
) -> RmseReport:
    """
    RMSE per angle.

    ``estimates`` is an :class:`AlignedAttitude`, or an ``(n, 3)`` array of
    roll/pitch/yaw with ``truth`` of the same shape, or, with ``truth=None``,
    an ``(n, 3)`` array of errors.

    Raises
    ------
    EmptyPairing
        Nothing to score.
    """
    if isinstance(estimates, AlignedAttitude):
        err = estimates.error
    elif truth is not None:
        err = wrap_deg(np.asarray(estimates, dtype=np.float64) - np.asarray(truth, dtype=np.float64))
    else:
        err = np.asarray(estimates, dtype=np.float64)
    err = err.reshape(-1, 3)
    if len(err) == 0:
        raise EmptyPairing("no paired epochs")
    r = rms(err, axis=0)
    return RmseReport(float(r[0]), float(r[1]), float(r[2]), len(err), label, trajectory)


@dataclass(frozen=True)
class DetectionReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else float("nan")

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(total=self.total, accuracy=self.accuracy)
        return d


def rotation_truth(truth_omega: ArrayLike, threshold: float = DEFAULT_ROTATION_THRESHOLD) -> NDArray[np.bool_]:
    """Truth label per epoch: ``|omega_z| > threshold``. Accepts (n, 3) rates or
    (n,) yaw rates."""
    w = np.asarray(truth_omega, dtype=np.float64)
    wz = w[:, 2] if w.ndim == 2 else w
    return np.abs(wz) > threshold


def detection_accuracy(
    gate_flags: ArrayLike,
    truth_omega: ArrayLike,
    omega_truth_threshold: float = DEFAULT_ROTATION_THRESHOLD,
) -> DetectionReport:
    """Confusion counts of per-epoch rotation flags against truth labels."""
    flags = np.asarray(gate_flags, dtype=bool)
    if flags.ndim == 2:
        flags = flags.any(axis=1)
    label = rotation_truth(truth_omega, omega_truth_threshold)
    if flags.shape != label.shape:
        raise ValueError(f"{len(flags)} flags vs {len(label)} truth epochs")
    return DetectionReport(
        int(np.sum(flags & label)),
        int(np.sum(flags & ~label)),
        int(np.sum(~flags & ~label)),
        int(np.sum(~flags & label)),
    )


def tilt_errors(
    dcm_est: NDArray, dcm_true: NDArray, p: NDArray
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Roll/pitch-like attitude errors and their filter 1-sigma, both in rad and
    shape (n, 2).

    The navigation-frame error vector and covariance are rotated into the
    true heading frame, whose first two axes are the level axes about which
    roll and pitch errors act.
    """
    psi = attitude_error(dcm_est, dcm_true).reshape(-1, 3)
    yaw = euler_from_dcm(dcm_true).reshape(-1, 3)[:, 2]
    c = np.array([rot_z(y) for y in yaw])
    ct = np.swapaxes(c, 1, 2)
    err = np.einsum("kij,kj->ki", ct, psi)
    ph = ct @ np.asarray(p).reshape(-1, 3, 3) @ c
    sigma = np.sqrt(np.clip(np.diagonal(ph, axis1=1, axis2=2), 0.0, None))
    return err[:, :2], sigma[:, :2]


def envelope_coverage(
    dcm_est: NDArray, dcm_true: NDArray, p: NDArray, k_sigma: float = 1.0
) -> float:
    """Fraction of (epoch, axis) samples whose roll/pitch error lies inside the
    ``k_sigma`` covariance envelope."""
    err, sigma = tilt_errors(dcm_est, dcm_true, p)
    return float(np.mean(np.abs(err) <= k_sigma * sigma))


# --------------------------------------------------------------------------
# comparison tables


@dataclass
class ComparisonTable:
    """Mode x trajectory RMSE with deltas against a baseline mode."""

    baseline_mode: str
    rows: list[RmseReport] = field(default_factory=list)

    @classmethod
    def build(
        cls, results: Mapping[str, Mapping[str, RmseReport]], baseline_mode: str
    ) -> "ComparisonTable":
        """``results[trajectory][mode]``; rows keep the mapping order."""
        rows = []
        for traj, by_mode in results.items():
            base = by_mode.get(baseline_mode)
            for mode, rep in by_mode.items():
                rep = RmseReport(rep.roll, rep.pitch, rep.yaw, rep.n, mode, traj)
                rows.append(rep.against(base) if base is not None else rep)
        return cls(baseline_mode, rows)

    def modes(self) -> list[str]:
        return list(dict.fromkeys(r.label for r in self.rows))

    def average(self, mode: str) -> float:
        return float(np.mean([r.aggregate for r in self.rows if r.label == mode]))

    def __len__(self) -> int:
        return len(self.rows)


_CSV_FIELDS = ["trajectory", "label", "n", "roll", "pitch", "yaw", "aggregate", "baseline", "delta_abs", "delta_rel"]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_rmse_csv(path, reports: Sequence[RmseReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_CSV_FIELDS)
        for r in reports:
            d = r.as_dict()
            w.writerow([_cell(d[k]) for k in _CSV_FIELDS])


def write_json(path, payload) -> None:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if hasattr(o, "as_dict"):
            return o.as_dict()
        raise TypeError(f"cannot serialize {type(o).__name__}")

    with open(Path(path), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")
