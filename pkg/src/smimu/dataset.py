"""
Reading and writing multi-IMU sessions.

A session is a YAML manifest next to one CSV per IMU (header ``t,fx,fy,fz``,
optionally followed by ``wx,wy,wz``) and an optional ground-truth CSV
(``t,roll,pitch,yaw`` in degrees). Paths in the manifest are relative to the
manifest. Example::

    rate: 100.0
    imus:
      - {id: 12, path: imu12.csv, rho: [0.1, 0.0, 0.0], sigma_f: 0.012,
         r_s_to_b: [1, 0, 0, 0, 1, 0, 0, 0, 1]}
      - ...
    pairing: {mode: full3d, pairs: [[12, 9], [5, 11]]}
    truth: truth.csv
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml
from numpy.typing import ArrayLike, NDArray

from .exceptions import ClockGapExceeded, MissingFile, NoOverlap, SchemaMismatch
from .geometry import FULL_3D, ArrayGeometry, ImuPlacement, check_pairing
from .kinematics import euler_from_dcm
from .simulation import SampleSeries

IMU_COLUMNS = ["t", "fx", "fy", "fz"]
GYRO_COLUMNS = ["wx", "wy", "wz"]
TRUTH_COLUMNS = ["t", "roll", "pitch", "yaw"]
MAX_GAP_SAMPLES = 5
RATE_TOLERANCE = 0.01
_FMT = "%.17g"  # round-trips doubles exactly


@dataclass(frozen=True)
class RawImuLog:
    imu_id: int
    t: NDArray[np.float64]
    f: NDArray[np.float64]  # sensor frame
    gyro: NDArray[np.float64] | None = None

    @property
    def period(self) -> float:
        return float(np.median(np.diff(self.t))) if len(self.t) > 1 else np.inf


@dataclass(frozen=True)
class GroundTruthLog:
    """Reference attitude; angles in degrees."""

    t: NDArray[np.float64]
    roll: NDArray[np.float64]
    pitch: NDArray[np.float64]
    yaw: NDArray[np.float64]

    def __post_init__(self):
        if len(self.t) > 1 and np.any(np.diff(self.t) <= 0):
            raise SchemaMismatch("truth timestamps must be strictly increasing")
        for name in ("roll", "pitch", "yaw"):
            a = getattr(self, name)
            if len(a) != len(self.t):
                raise SchemaMismatch(f"truth column {name} has the wrong length")
            if np.any(np.abs(a) > 180.0):
                raise SchemaMismatch(f"truth {name} outside [-180, 180] deg")

    @classmethod
    def from_dcm(cls, t: ArrayLike, dcm: NDArray) -> "GroundTruthLog":
        e = euler_from_dcm(dcm, degrees=True).reshape(-1, 3)
        return cls(np.asarray(t, dtype=np.float64), e[:, 0], e[:, 1], e[:, 2])

    @property
    def angles(self) -> NDArray[np.float64]:
        return np.column_stack([self.roll, self.pitch, self.yaw])

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class ArraySession:
    """What :func:`load_array_session` returns: the geometry from the manifest,
    the time-aligned body-frame samples and the ground truth (if listed)."""

    geometry: ArrayGeometry
    samples: SampleSeries
    truth: GroundTruthLog | None
    rate: float


# --------------------------------------------------------------------------
# CSV


def _read_csv(path: Path, required: list[str], optional: list[str] = ()) -> tuple[list[str], NDArray]:
    if not path.is_file():
        raise MissingFile(str(path))
    with open(path, newline="") as fh:
        header = [h.strip() for h in fh.readline().strip().split(",")]
        if header[: len(required)] != required or header[len(required):] not in ([], list(optional)):
            raise SchemaMismatch(f"{path.name}: unexpected header {header}")
        try:
            data = np.loadtxt(fh, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise SchemaMismatch(f"{path.name}: {exc}") from exc
    if data.size == 0:
        data = np.zeros((0, len(header)))
    if data.shape[1] != len(header):
        raise SchemaMismatch(f"{path.name}: {data.shape[1]} columns, header has {len(header)}")
    return header, data


def _write_csv(path: Path, header: Sequence[str], columns: Sequence[NDArray]) -> None:
    data = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt=_FMT, delimiter=",")


def read_imu_csv(path, imu_id: int = 0) -> RawImuLog:
    header, data = _read_csv(Path(path), IMU_COLUMNS, GYRO_COLUMNS)
    t = data[:, 0]
    if len(t) > 1 and np.any(np.diff(t) <= 0):
        raise SchemaMismatch(f"{Path(path).name}: timestamps not strictly increasing")
    gyro = data[:, 4:7] if len(header) == 7 else None
    return RawImuLog(imu_id, t, data[:, 1:4], gyro)


def write_imu_csv(path, t: ArrayLike, f: ArrayLike, gyro: ArrayLike | None = None) -> None:
    cols = [np.asarray(t), np.asarray(f)]
    header = IMU_COLUMNS
    if gyro is not None:
        cols.append(np.asarray(gyro))
        header = IMU_COLUMNS + GYRO_COLUMNS
    _write_csv(Path(path), header, cols)


def read_truth_csv(path) -> GroundTruthLog:
    _, data = _read_csv(Path(path), TRUTH_COLUMNS)
    return GroundTruthLog(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


def write_truth_csv(path, truth: GroundTruthLog) -> None:
    _write_csv(Path(path), TRUTH_COLUMNS, [truth.t, truth.roll, truth.pitch, truth.yaw])


# --------------------------------------------------------------------------
# sessions


def _check_gaps(log: RawImuLog) -> None:
    if len(log.t) < 2:
        return
    dt = np.diff(log.t)
    worst = int(np.argmax(dt))
    if dt[worst] > MAX_GAP_SAMPLES * log.period:
        raise ClockGapExceeded(
            f"IMU {log.imu_id}: {dt[worst]:.4g} s gap at t={log.t[worst]:.6g} "
            f"(> {MAX_GAP_SAMPLES} samples)"
        )


def _resample(logs: list[RawImuLog]) -> tuple[NDArray, NDArray, NDArray | None]:
    """Interpolate every stream linearly onto the slowest stream's clock,
    restricted to the interval all streams cover."""
    ref = max(logs, key=lambda lg: lg.period)
    lo = max(lg.t[0] for lg in logs)
    hi = min(lg.t[-1] for lg in logs)
    t = ref.t[(ref.t >= lo) & (ref.t <= hi)]
    if len(t) == 0:
        raise NoOverlap("IMU streams do not overlap in time")
    f = np.empty((len(t), len(logs), 3))
    for k, lg in enumerate(logs):
        if len(lg.t) == len(t) and np.array_equal(lg.t, t):
            f[:, k] = lg.f
        else:
            for a in range(3):
                f[:, k, a] = np.interp(t, lg.t, lg.f[:, a])
    gyro = None
    if logs[0].gyro is not None:
        g = logs[0]
        gyro = np.column_stack([np.interp(t, g.t, g.gyro[:, a]) for a in range(3)])
    return t, f, gyro


def _geometry_from_manifest(spec: dict) -> ArrayGeometry:
    placements = []
    for imu in spec["imus"]:
        r = np.asarray(imu.get("r_s_to_b", np.eye(3).ravel()), dtype=np.float64)
        if r.size != 9:
            raise SchemaMismatch(f"IMU {imu['id']}: r_s_to_b needs 9 entries")
        placements.append(
            ImuPlacement(
                int(imu["id"]),
                np.asarray(imu["rho"], dtype=np.float64),
                r.reshape(3, 3),
                float(imu.get("sigma_f", 0.012)),
            )
        )
    pairing_spec = spec.get("pairing") or {}
    mode = pairing_spec.get("mode", FULL_3D)
    axis = pairing_spec.get("axis")
    axis = 2 if axis is None else axis
    pairs = pairing_spec.get("pairs")
    if pairs:
        pairing = check_pairing(placements, [tuple(p) for p in pairs], mode, axis=axis)
        return ArrayGeometry(placements, pairing)
    if pairing_spec:
        return ArrayGeometry.paired(placements, mode=mode, axis=axis)
    return ArrayGeometry(placements)


def load_manifest(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    with open(path) as fh:
        spec = yaml.safe_load(fh)
    if not isinstance(spec, dict) or "imus" not in spec:
        raise SchemaMismatch(f"{path.name}: manifest needs an 'imus' list")
    return spec


def load_array_session(manifest_path) -> ArraySession:
    """
    Load every IMU listed in a manifest, rotate it into the body frame and
    put all of them on a common clock.

    Timestamps are shifted so the session starts at ``t = 0``.

    Raises
    ------
    MissingFile, SchemaMismatch, ClockGapExceeded, NoOverlap
    """
    manifest_path = Path(manifest_path)
    spec = load_manifest(manifest_path)
    root = manifest_path.parent
    geometry = _geometry_from_manifest(spec)

    logs = [read_imu_csv(root / imu["path"], int(imu["id"])) for imu in spec["imus"]]
    declared = spec.get("rate")
    for lg in logs:
        if len(lg.t) < 2:
            raise SchemaMismatch(f"IMU {lg.imu_id}: fewer than two samples")
        _check_gaps(lg)
        if declared and abs(1.0 / lg.period - declared) > RATE_TOLERANCE * declared:
            raise SchemaMismatch(
                f"IMU {lg.imu_id}: rate {1.0 / lg.period:.4g} Hz, manifest says {declared}"
            )
    body = [
        RawImuLog(lg.imu_id, lg.t, lg.f @ p.r_s_to_b.T, lg.gyro)
        for lg, p in zip(logs, geometry.placements)
    ]
    t, f, gyro = _resample(body)
    t0 = t[0]
    truth = None
    if spec.get("truth"):
        tr = read_truth_csv(root / spec["truth"])
        truth = GroundTruthLog(tr.t - t0, tr.roll, tr.pitch, tr.yaw) if t0 else tr
    rate = float(declared) if declared else 1.0 / float(np.median(np.diff(t)))
    return ArraySession(geometry, SampleSeries(t - t0 if t0 else t, f, gyro), truth, rate)


def write_session(
    directory,
    geometry: ArrayGeometry,
    samples: SampleSeries,
    truth: GroundTruthLog | None = None,
    rate: float | None = None,
    name: str = "manifest.yaml",
) -> Path:
    """
    Export a sample series in the session layout; inverse of
    :func:`load_array_session`. Specific forces are written in each sensor's
    own frame. Returns the manifest path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    imus = []
    for k, p in enumerate(geometry.placements):
        fname = f"imu_{p.id}.csv"
        f_s = samples.f_b[:, k] @ p.r_s_to_b  # R^T f_b, row-wise
        gyro = samples.gyro if (k == 0 and samples.gyro is not None) else None
        write_imu_csv(directory / fname, samples.t, f_s, gyro)
        imus.append(
            {
                "id": int(p.id),
                "path": fname,
                "rho": [float(v) for v in p.rho],
                "r_s_to_b": [float(v) for v in p.r_s_to_b.ravel()],
                "sigma_f": float(p.sigma_f),
            }
        )
    spec: dict = {"rate": float(rate) if rate else None, "imus": imus}
    if geometry.pairing is not None:
        pr = geometry.pairing
        spec["pairing"] = {
            "mode": pr.mode,
            "axis": pr.axis,
            "pairs": [[int(i), int(j)] for i, j in pr.pairs],
        }
    if truth is not None:
        write_truth_csv(directory / "truth.csv", truth)
        spec["truth"] = "truth.csv"
    out = directory / name
    with open(out, "w") as fh:
        yaml.safe_dump(spec, fh, sort_keys=False)
    return out


# --------------------------------------------------------------------------
# alignment


def wrap_deg(d: ArrayLike) -> NDArray[np.float64]:
    """Wrap angle differences to (-180, 180]."""
    return -((-np.asarray(d, dtype=np.float64) + 180.0) % 360.0 - 180.0)


@dataclass(frozen=True)
class AlignedAttitude:
    """Estimate/truth pairs on the truth clock; angles in degrees."""

    t: NDArray[np.float64]
    estimate: NDArray[np.float64]  # (n, 3) roll, pitch, yaw
    truth: NDArray[np.float64]
    index: NDArray[np.intp]  # estimate epoch used for each pair

    @property
    def error(self) -> NDArray[np.float64]:
        return wrap_deg(self.estimate - self.truth)

    def __len__(self) -> int:
        return len(self.t)


def _estimate_angles(estimates) -> tuple[NDArray, NDArray]:
    if isinstance(estimates, tuple):
        t, angles = estimates
        return np.asarray(t, dtype=np.float64), np.asarray(angles, dtype=np.float64)
    est = list(estimates)
    t = np.array([e.t for e in est], dtype=np.float64)
    dcm = np.array([e.dcm for e in est]).reshape(-1, 3, 3)
    return t, euler_from_dcm(dcm, degrees=True).reshape(-1, 3)


def align_truth(
    estimates: Iterable | tuple[ArrayLike, ArrayLike], truth: GroundTruthLog
) -> AlignedAttitude:
    """
    Pair each truth epoch with the nearest estimate no further than half a
    truth period away.

    ``estimates`` is a sequence of :class:`~smimu.ekf.AttitudeSolution` or a
    ``(t, angles_deg)`` tuple.

    Raises
    ------
    NoOverlap
        No truth epoch has an estimate close enough.
    """
    t_est, ang = _estimate_angles(estimates)
    if len(t_est) == 0 or len(truth) == 0:
        raise NoOverlap("empty estimate or truth stream")
    half = 0.5 * float(np.median(np.diff(truth.t))) if len(truth) > 1 else np.inf
    k = np.clip(np.searchsorted(t_est, truth.t), 1, max(len(t_est) - 1, 1))
    left = np.maximum(k - 1, 0)
    right = np.minimum(k, len(t_est) - 1)
    pick = np.where(
        np.abs(t_est[left] - truth.t) <= np.abs(t_est[right] - truth.t), left, right
    )
    ok = np.abs(t_est[pick] - truth.t) <= half + 1e-12
    if not np.any(ok):
        raise NoOverlap("estimates and truth do not overlap in time")
    return AlignedAttitude(truth.t[ok], ang[pick[ok]], truth.angles[ok], pick[ok])
