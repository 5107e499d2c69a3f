"""
End-to-end runs: input (simulated or recorded) -> angular front end -> EKF
-> scores and artifacts.

Three front ends share the same filter:

``smimu``
    symmetric pairs, nonlinear rate solve, per-axis gate.
``gf_baseline``
    conventional gyro-free least squares, rate integrated from angular
    acceleration, no gate.
``single_imu``
    one accelerometer plus a gyro (recorded, or truth plus white noise in
    simulation).

Axes rejected by the gate are propagated with the navigation-frame rate
prior ``R^T omega_in`` rather than zero, i.e. "no detectable rotation" means
at rest relative to the navigation frame.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml
from numpy.typing import NDArray

from . import _loops
from .dataset import (
    GroundTruthLog,
    _geometry_from_manifest,
    align_truth,
    load_array_session,
    write_session,
)
from .ekf import (
    DEFAULT_ACCEL_THRESHOLD,
    DEFAULT_P0,
    EkfState,
    measurement_update,
    predict,
    zero_accel_detect,
)
from .evaluation import (
    DEFAULT_ROTATION_THRESHOLD,
    ComparisonTable,
    DetectionReport,
    RmseReport,
    detection_accuracy,
    rmse,
    write_json,
    write_rmse_csv,
)
from .exceptions import (
    ConfigError,
    MismatchedInputs,
    MissingFile,
    SchemaMismatch,
    SingularInnovation,
    TooFewImus,
)
from .gate import GateConfig, gate, reject_all
from .geometry import (
    ArrayGeometry,
    ImuPlacement,
    cube_array,
    octahedron_array,
    planar_array,
)
from .gf import MIN_IMUS, GfMechanization, GfSolver
from .kinematics import GRAVITY, dcm_from_euler, earth_rate_ned, euler_from_dcm
from .scenarios import SCENARIOS, scenario
from .sgf import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    PLANAR_TIKHONOV,
    GravityEstimate,
    _check_geometry,
    resolve_sign,
    solve_angular_arrays,
)
from .simulation import (
    SampleSeries,
    make_trajectory,
    profile_from_spec,
    synthesize,
    synthesize_gyro,
)
from .symmetric import decompose_arrays, transform_covariance

log = logging.getLogger(__name__)

MODES = ("single_imu", "gf_baseline", "smimu")
DEFAULT_SIGMA_G = 0.003  # rad/s per sample
# Each axis's solver seed is its last significant rate dead-reckoned with the
# estimated angular acceleration. If no significant rate arrives for this
# long the seed restarts once from zero. The rate sign is invisible to the
# pair differences, so the seed is what picks the branch.
SEED_HOLD = 0.25  # s


@dataclass
class RunConfig:
    """
    Everything one run needs. Loaded from YAML/JSON via
    :meth:`from_mapping`; unknown keys are rejected.

    ``simulate`` is a motion profile spec (name, mapping, list, or path to a
    YAML file holding one) and is ignored when ``manifest`` is set.
    ``initial_omega`` is the body rate relative to the navigation frame at
    the first epoch; ``initial_attitude`` is roll/pitch/yaw in degrees.
    """

    mode: str = "smimu"
    array: dict = field(default_factory=lambda: {"type": "cube", "radius": 0.5, "sigma_f": 0.012})
    alpha_c: float = GateConfig().alpha_c
    g_e: float = GRAVITY
    accel_threshold: float = DEFAULT_ACCEL_THRESHOLD
    initial_p: float = DEFAULT_P0
    initial_omega: Sequence[float] = (0.0, 0.0, 0.0)
    initial_attitude: Sequence[float] = (0.0, 0.0, 0.0)
    latitude: float = 32.0
    earth_rate: bool = True
    simulate: Any = "static"
    duration: float = 60.0
    rate: float = 100.0
    manifest: str | None = None
    output_dir: str = "out"
    seed: int = 0
    sigma_g: float = DEFAULT_SIGMA_G
    imu_index: int = 0
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    rotation_threshold: float = DEFAULT_ROTATION_THRESHOLD
    name: str = ""
    plots: bool = True

    _FLOATS = ("alpha_c", "g_e", "accel_threshold", "initial_p", "latitude", "duration",
               "rate", "sigma_g", "tol", "rotation_threshold")
    _INTS = ("seed", "imu_index", "max_iter")

    def __post_init__(self):
        # YAML 1.1 reads "1e-4" as a string; accept anything float() does
        for names, kind in ((self._FLOATS, float), (self._INTS, int)):
            for name in names:
                value = getattr(self, name)
                try:
                    setattr(self, name, kind(value))
                except (TypeError, ValueError):
                    raise ConfigError(f"{name} must be a number, got {value!r}") from None

    @classmethod
    def from_mapping(cls, data: dict | None, **overrides) -> "RunConfig":
        data = dict(data or {})
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        if isinstance(data.get("manifest"), str):
            data["manifest"] = str((path.parent / data["manifest"]).resolve())
        return cls.from_mapping(data, **overrides)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["initial_omega"] = [float(v) for v in self.initial_omega]
        d["initial_attitude"] = [float(v) for v in self.initial_attitude]
        return d

    def input_key(self) -> tuple:
        """What must match for two runs to see the same data."""
        if self.manifest:
            return ("manifest", str(Path(self.manifest).resolve()))
        return (
            "simulate",
            repr(self.simulate),
            repr(sorted(self.array.items())) if isinstance(self.array, dict) else repr(self.array),
            float(self.duration),
            float(self.rate),
            int(self.seed),
            float(self.sigma_g),
            tuple(float(v) for v in self.initial_attitude),
            float(self.latitude),
            bool(self.earth_rate),
        )

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.manifest:
            return Path(self.manifest).stem
        if isinstance(self.simulate, str):
            return Path(self.simulate).stem if self.simulate.endswith((".yaml", ".yml")) else self.simulate
        return "custom"

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if not self.alpha_c > 0:
            raise ConfigError("alpha_c must be positive")
        if not self.accel_threshold > 0:
            raise ConfigError("accel_threshold must be positive")
        if not self.initial_p > 0:
            raise ConfigError("initial_p must be positive")
        if not self.g_e > 0:
            raise ConfigError("g_e must be positive")
        if self.sigma_g < 0:
            raise ConfigError("sigma_g must be non-negative")
        if len(self.initial_omega) != 3 or len(self.initial_attitude) != 3:
            raise ConfigError("initial_omega and initial_attitude need three entries")
        if self.max_iter < 1 or not self.tol > 0:
            raise ConfigError("max_iter must be >= 1 and tol positive")


# --------------------------------------------------------------------------
# inputs


def build_array(spec) -> ArrayGeometry:
    """Array geometry from a config entry: ``{type: cube|octahedron|planar,
    ...}`` or ``{imus: [...], pairing: {...}}``."""
    if isinstance(spec, ArrayGeometry):
        return spec
    if isinstance(spec, str):
        spec = {"type": spec}
    if not isinstance(spec, dict):
        raise ConfigError("array must be a mapping")
    spec = dict(spec)
    if "imus" in spec:
        return _geometry_from_manifest(spec)
    kind = spec.pop("type", "cube")
    builders = {"cube": cube_array, "octahedron": octahedron_array, "planar": planar_array}
    if kind not in builders:
        raise ConfigError(f"unknown array type {kind!r}")
    try:
        return builders[kind](**spec)
    except TypeError as exc:
        raise ConfigError(f"array {kind}: {exc}") from exc


def _resolve_profile(spec):
    if isinstance(spec, str) and spec in SCENARIOS:
        return profile_from_spec(scenario(spec))
    if isinstance(spec, str) and spec.endswith((".yaml", ".yml")):
        path = Path(spec)
        if not path.is_file():
            raise ConfigError(f"profile file not found: {spec}")
        with open(path) as fh:
            spec = yaml.safe_load(fh)
    return profile_from_spec(spec)


@dataclass
class RunInput:
    """Data shared by every mode of a comparison."""

    geometry: ArrayGeometry
    samples: SampleSeries
    gyro: NDArray[np.float64] | None
    dcm0: NDArray[np.float64]
    omega_in: NDArray[np.float64]
    truth: GroundTruthLog | None = None
    truth_dcm: NDArray[np.float64] | None = None
    truth_omega: NDArray[np.float64] | None = None  # body rate w.r.t. nav
    label: str = ""


def _seeds(seed: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(2)


def prepare_input(cfg: RunConfig) -> RunInput:
    omega_in = earth_rate_ned(cfg.latitude) if cfg.earth_rate else np.zeros(3)
    if cfg.manifest:
        session = load_array_session(cfg.manifest)
        truth = session.truth
        truth_dcm = truth_omega = None
        if truth is not None:
            truth_dcm = dcm_from_euler(truth.angles, degrees=True)
            dcm0 = truth_dcm[0]
            yaw = np.unwrap(np.deg2rad(truth.yaw))
            rate = np.gradient(yaw, truth.t) if len(truth) > 1 else np.zeros(len(truth))
            wz = np.interp(session.samples.t, truth.t, rate)
            truth_omega = np.column_stack([np.zeros_like(wz), np.zeros_like(wz), wz])
        else:
            dcm0 = dcm_from_euler(cfg.initial_attitude, degrees=True)
        return RunInput(
            session.geometry, session.samples, session.samples.gyro, dcm0, omega_in,
            truth, truth_dcm, truth_omega, cfg.label,
        )

    geometry = build_array(cfg.array)
    profile = _resolve_profile(cfg.simulate)
    dcm0 = dcm_from_euler(cfg.initial_attitude, degrees=True)
    traj = make_trajectory(profile, cfg.duration, cfg.rate, dcm0=dcm0, omega_in=omega_in)
    s_acc, s_gyro = _seeds(cfg.seed)
    samples = synthesize(traj, geometry, noise_on=True, seed=np.random.default_rng(s_acc))
    gyro = synthesize_gyro(traj, cfg.sigma_g, seed=np.random.default_rng(s_gyro))
    truth = GroundTruthLog.from_dcm(traj.t, traj.dcm)
    return RunInput(
        geometry, samples, gyro, traj.dcm[0].copy(), omega_in,
        truth, traj.dcm, traj.omega_nb, cfg.label,
    )


def check_mode(cfg: RunConfig, geometry: ArrayGeometry) -> None:
    """Mode-specific requirements on the array."""
    if cfg.mode == "gf_baseline" and len(geometry) < MIN_IMUS:
        raise TooFewImus(f"gf_baseline: N ≥ {MIN_IMUS} required (array has {len(geometry)} IMUs)")
    if cfg.mode == "smimu":
        if geometry.pairing is None or not geometry.pairing.pairs:
            raise ConfigError("smimu mode needs a symmetric pairing of the array")
    if cfg.mode == "single_imu" and not 0 <= cfg.imu_index < len(geometry):
        raise ConfigError(f"imu_index {cfg.imu_index} outside the array")


# --------------------------------------------------------------------------
# estimation


@dataclass
class RunResult:
    mode: str
    t: NDArray[np.float64]
    dcm: NDArray[np.float64]  # (n, 3, 3)
    p: NDArray[np.float64]  # (n, 3, 3)
    omega: NDArray[np.float64]  # rate used for propagation, (n, 3)
    updated: NDArray[np.bool_]
    gate_passed: NDArray[np.bool_] | None = None
    omega_raw: NDArray[np.float64] | None = None
    converged: NDArray[np.bool_] | None = None
    input: RunInput | None = None
    rmse: RmseReport | None = None
    detection: DetectionReport | None = None

    def __len__(self) -> int:
        return len(self.t)

    @property
    def euler_deg(self) -> NDArray[np.float64]:
        return euler_from_dcm(self.dcm, degrees=True)


def _pair_noise(geometry: ArrayGeometry) -> tuple[NDArray, NDArray]:
    idx = geometry.pair_indices()
    covs = [transform_covariance(geometry.sigma_f[i], geometry.sigma_f[j]) for i, j in idx]
    sig_bar2 = np.array([c[0, 0] for c in covs])
    sig_breve = np.sqrt([c[1, 1] for c in covs])
    return sig_bar2, sig_breve


def _initial_rate(cfg: RunConfig, data: RunInput) -> NDArray[np.float64]:
    return np.asarray(cfg.initial_omega, dtype=np.float64) + data.dcm0.T @ data.omega_in


def _raise_singular(status: int) -> None:
    if status:
        raise SingularInnovation(f"innovation covariance singular at epoch {status - 1}")


def _run_smimu(cfg, data, reference):
    g = data.geometry
    idx = g.pair_indices()
    rho = np.ascontiguousarray(g.rho[idx[:, 0]])
    sig_bar2, sig_breve = _pair_noise(g)
    f_bar, f_breve = decompose_arrays(data.samples.f_b, g)
    var_g = float(np.mean(sig_bar2)) / len(idx)
    planar = g.pairing.planar
    w = np.ascontiguousarray(1.0 / sig_breve**2)
    _check_geometry(rho, w, planar)
    p0 = cfg.initial_p * np.eye(3)
    omega0 = _initial_rate(cfg, data)
    t = data.samples.t
    if not reference:
        out = _loops.smimu_loop(
            t, np.ascontiguousarray(f_bar), np.ascontiguousarray(f_breve), rho, w, var_g,
            data.dcm0, p0, omega0, data.omega_in, float(cfg.alpha_c), float(cfg.g_e),
            float(cfg.accel_threshold), float(cfg.g_e), int(cfg.max_iter), float(cfg.tol),
            PLANAR_TIKHONOV if planar else 0.0, 3 * len(idx) - 6, SEED_HOLD,
        )
        dcm, p, omega, raw, passed, updated, converged, status = out
        _raise_singular(status)
        return RunResult("smimu", t, dcm, p, omega, updated, passed, raw, converged)

    gcfg = GateConfig(cfg.alpha_c)
    state = EkfState(dcm=data.dcm0.copy(), p=p0, omega_in=data.omega_in, g=cfg.g_e)
    n = len(t)
    dcm = np.empty((n, 3, 3))
    p = np.empty((n, 3, 3))
    omega = np.empty((n, 3))
    raw = np.empty((n, 3))
    passed = np.zeros((n, 3), dtype=bool)
    updated = np.zeros(n, dtype=bool)
    converged = np.zeros(n, dtype=bool)
    w_seed = omega0.copy()
    age = np.zeros(3)
    w_dot = np.zeros(3)
    w_prev = omega0.copy()
    for k in range(n):
        dt = t[k] - t[k - 1] if k else 0.0
        age += dt
        expired = age > SEED_HOLD
        w_seed = np.where(expired, 0.0, w_seed) + w_dot * dt
        age[expired] = -np.inf
        st = solve_angular_arrays(
            rho, f_breve[k], sig_breve, w_seed, w_dot, cfg.max_iter, cfg.tol, planar=planar
        )
        finite = bool(np.all(np.isfinite(st.omega)) and np.all(np.isfinite(st.omega_dot)))
        w_dot = st.omega_dot if finite else np.zeros(3)
        omega_k = st.omega
        if st.converged and finite:
            omega_k = resolve_sign(omega_k, w_seed, st.p_omega)
            dec = gate(omega_k, st.p_omega, gcfg)
        else:
            dec = reject_all()
        w_seed = np.where(dec.axis_passed, dec.omega_gated, w_seed)
        age[dec.axis_passed] = 0.0
        w_used = np.where(dec.axis_passed, dec.omega_gated, state.dcm.T @ data.omega_in)
        if k:
            state = predict(state, 0.5 * (w_prev + w_used), dec.cov_gated, dt)
        if zero_accel_detect(f_bar[k], cfg.g_e, cfg.accel_threshold):
            state = measurement_update(state, GravityEstimate(-f_bar[k].mean(axis=0), var_g))
            updated[k] = True
        w_prev = w_used
        dcm[k], p[k], omega[k] = state.dcm, state.p, w_used
        raw[k] = omega_k if finite else 0.0
        passed[k] = dec.axis_passed
        converged[k] = st.converged
    return RunResult("smimu", t, dcm, p, omega, updated, passed, raw, converged)


def _run_gf(cfg, data, reference):
    g = data.geometry
    solver = GfSolver(g)
    p0 = cfg.initial_p * np.eye(3)
    omega0 = _initial_rate(cfg, data)
    t = data.samples.t
    var_g = solver.sigma_f2 * float(np.mean(np.diag(solver.normal_inv)[3:]))
    if not reference:
        dcm, p, omega, updated, status = _loops.gf_loop(
            t, np.ascontiguousarray(data.samples.f_b), np.ascontiguousarray(g.rho),
            solver.pinv, solver.normal_inv, solver.sigma_f2, data.dcm0, p0, omega0,
            data.omega_in, float(cfg.g_e), float(cfg.accel_threshold), float(cfg.g_e),
        )
        _raise_singular(status)
        return RunResult("gf_baseline", t, dcm, p, omega, updated)

    mech = GfMechanization(g, data.dcm0, omega0, data.omega_in)
    state = EkfState(dcm=data.dcm0.copy(), p=p0, omega_in=data.omega_in, g=cfg.g_e)
    n = len(t)
    dcm = np.empty((n, 3, 3))
    p = np.empty((n, 3, 3))
    omega = np.empty((n, 3))
    updated = np.zeros(n, dtype=bool)
    for k in range(n):
        w_prev = mech.omega.copy()
        dt = t[k] - t[k - 1] if k else None
        st = mech.step(data.samples.f_b[k], dt)
        if k:
            state = predict(state, 0.5 * (w_prev + mech.omega), mech.p_omega, dt)
        if zero_accel_detect([st.lin], cfg.g_e, cfg.accel_threshold):
            state = measurement_update(state, GravityEstimate(-st.lin, var_g))
            updated[k] = True
        dcm[k], p[k], omega[k] = state.dcm, state.p, mech.omega
    return RunResult("gf_baseline", t, dcm, p, omega, updated)


def _run_single(cfg, data, reference):
    if data.gyro is None:
        raise ConfigError("single_imu mode needs a gyro stream")
    g = data.geometry
    k_imu = cfg.imu_index
    f = np.ascontiguousarray(data.samples.f_b[:, k_imu])
    sigma_f2 = float(g.sigma_f[k_imu] ** 2)
    sigma_g2 = float(cfg.sigma_g**2)
    p0 = cfg.initial_p * np.eye(3)
    t = data.samples.t
    gyro = np.ascontiguousarray(data.gyro)
    if not reference:
        dcm, p, updated, status = _loops.single_loop(
            t, f, gyro, sigma_g2, sigma_f2, data.dcm0, p0, data.omega_in,
            float(cfg.g_e), float(cfg.accel_threshold), float(cfg.g_e),
        )
        _raise_singular(status)
        return RunResult("single_imu", t, dcm, p, gyro, updated)

    state = EkfState(dcm=data.dcm0.copy(), p=p0, omega_in=data.omega_in, g=cfg.g_e)
    n = len(t)
    dcm = np.empty((n, 3, 3))
    p = np.empty((n, 3, 3))
    updated = np.zeros(n, dtype=bool)
    q = sigma_g2 * np.eye(3)
    for k in range(n):
        if k:
            state = predict(state, 0.5 * (gyro[k - 1] + gyro[k]), q, t[k] - t[k - 1])
        if zero_accel_detect([f[k]], cfg.g_e, cfg.accel_threshold):
            state = measurement_update(state, GravityEstimate(-f[k], sigma_f2))
            updated[k] = True
        dcm[k], p[k] = state.dcm, state.p
    return RunResult("single_imu", t, dcm, p, gyro, updated)


_RUNNERS = {"smimu": _run_smimu, "gf_baseline": _run_gf, "single_imu": _run_single}


def score(res: RunResult, data: RunInput, rotation_threshold: float = DEFAULT_ROTATION_THRESHOLD) -> RunResult:
    """Attach RMSE (and, for gated runs, detection accuracy) against the
    input's ground truth; a no-op without truth."""
    res.input = data
    if data.truth is None:
        return res
    aligned = align_truth((res.t, res.euler_deg), data.truth)
    res.rmse = rmse(aligned, label=res.mode, trajectory=data.label)
    if res.gate_passed is not None and data.truth_omega is not None:
        n = min(len(res), len(data.truth_omega))
        res.detection = detection_accuracy(
            res.gate_passed[:n], data.truth_omega[:n], rotation_threshold
        )
    return res


def estimate(cfg: RunConfig, data: RunInput, reference: bool = False) -> RunResult:
    """
    Run one front end plus the filter over prepared input and score it.

    ``reference=True`` uses the plain per-epoch implementation built from the
    public module functions instead of the compiled loop (same results, much
    slower).
    """
    cfg.validate()
    check_mode(cfg, data.geometry)
    res = _RUNNERS[cfg.mode](cfg, data, reference)
    return score(res, data, cfg.rotation_threshold)


# --------------------------------------------------------------------------
# artifacts

SOLUTION_COLUMNS = [
    "t", "roll", "pitch", "yaw", "wx", "wy", "wz",
    "p_xx", "p_yy", "p_zz", "p_xy", "p_xz", "p_yz",
    "gate_x", "gate_y", "gate_z", "updated",
]
_P_INDEX = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]


def write_solution(path, res: RunResult) -> None:
    """Per-epoch solution: Euler angles in degrees, the propagated rate, the
    attitude covariance (nav frame, rad^2), gate flags and update flags."""
    e = res.euler_deg
    pc = np.column_stack([res.p[:, i, j] for i, j in _P_INDEX])
    gates = res.gate_passed if res.gate_passed is not None else np.zeros((len(res), 3), bool)
    cols = np.column_stack([res.t, e, res.omega, pc, gates.astype(float), res.updated.astype(float)])
    fmt = ["%.17g"] * 13 + ["%d"] * 4
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(SOLUTION_COLUMNS) + "\n")
        np.savetxt(fh, cols, fmt=fmt, delimiter=",")


def load_solution(path, mode: str = "") -> RunResult:
    """Read a solution file back into a :class:`RunResult` (unscored). Gate
    flags are restored only for ``smimu`` runs."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"solution file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if header != SOLUTION_COLUMNS:
        raise SchemaMismatch(f"{path}: unexpected columns {header}")
    data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
    n = len(data)
    p = np.empty((n, 3, 3))
    for c, (i, j) in enumerate(_P_INDEX):
        p[:, i, j] = p[:, j, i] = data[:, 7 + c]
    gates = data[:, 13:16].astype(bool)
    return RunResult(
        mode,
        data[:, 0],
        dcm_from_euler(data[:, 1:4], degrees=True),
        p,
        data[:, 4:7],
        data[:, 16].astype(bool),
        gates if mode == "smimu" else None,
    )


def write_artifacts(cfg: RunConfig, res: RunResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "solution.csv", out / "config.json"]
    write_solution(written[0], res)
    # where the files go is not part of what they say
    settings = cfg.as_dict()
    settings.pop("output_dir")
    write_json(written[1], settings)
    if res.rmse is not None:
        write_rmse_csv(out / "rmse.csv", [res.rmse])
        write_json(out / "rmse.json", res.rmse)
        written += [out / "rmse.csv", out / "rmse.json"]
    if res.detection is not None:
        write_json(out / "detection.json", res.detection)
        written.append(out / "detection.json")
    if cfg.plots:
        from .plotting import plot_run

        written += plot_run(res, out)
    return written


def run(cfg: RunConfig, data: RunInput | None = None) -> RunResult:
    """Validate, load or simulate the input, estimate, and write artifacts to
    ``cfg.output_dir``."""
    cfg.validate()
    data = data if data is not None else prepare_input(cfg)
    res = estimate(cfg, data)
    write_artifacts(cfg, res, cfg.output_dir)
    log.info("%s: %d epochs -> %s", cfg.mode, len(res), cfg.output_dir)
    return res


def simulate_dataset(cfg: RunConfig, out_dir=None) -> Path:
    """Synthesize the configured input and write it in the session layout
    (per-IMU CSVs, truth.csv, manifest.yaml). Returns the manifest path."""
    if cfg.manifest:
        raise ConfigError("simulate needs a motion profile, not a manifest")
    data = prepare_input(cfg)
    samples = SampleSeries(data.samples.t, data.samples.f_b, data.gyro)
    return write_session(out_dir or cfg.output_dir, data.geometry, samples, data.truth, cfg.rate)


def _run_group(label: str, cs: list[RunConfig], output_dir, nested: bool) -> dict[str, RmseReport]:
    data = prepare_input(cs[0])
    out = {}
    for c in cs:
        base = Path(output_dir or c.output_dir)
        sub = base / label / c.mode if nested else base / c.mode
        res = estimate(c, data)
        write_artifacts(c, res, sub)
        if res.rmse is None:
            raise MismatchedInputs(f"trajectory {label!r} has no ground truth to compare")
        out[c.mode] = res.rmse
    return out


def compare(
    configs: Sequence[RunConfig],
    output_dir=None,
    baseline_mode: str = "gf_baseline",
    workers: int = 1,
) -> ComparisonTable:
    """
    Run several configurations and tabulate roll/pitch RMSE per trajectory
    and mode, with deltas against ``baseline_mode`` (the first mode of a
    trajectory if the baseline is absent).

    Configurations with the same ``label`` form one trajectory and must share
    their input. With ``workers > 1`` trajectories run in separate processes;
    the output does not depend on it.

    Raises
    ------
    MismatchedInputs
        Two runs of one trajectory see different data, or repeat a mode.
    """
    if not configs:
        raise ConfigError("compare needs at least one configuration")
    groups: dict[str, list[RunConfig]] = {}
    for c in configs:
        c.validate()
        groups.setdefault(c.label, []).append(c)
    for label, cs in groups.items():
        if len({c.input_key() for c in cs}) > 1:
            raise MismatchedInputs(f"trajectory {label!r}: runs use different inputs")
        modes = [c.mode for c in cs]
        if len(set(modes)) != len(modes):
            raise MismatchedInputs(f"trajectory {label!r}: mode listed twice")
    nested = len(groups) > 1
    jobs = [(label, cs, output_dir, nested) for label, cs in groups.items()]
    if workers > 1 and len(jobs) > 1:
        # trajectories are independent; each run stays sequential
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_group, *zip(*jobs)))
    else:
        reports = [_run_group(*job) for job in jobs]
    results = {label: rep for (label, *_), rep in zip(jobs, reports)}
    base = baseline_mode
    if any(base not in by_mode for by_mode in results.values()):
        base = next(iter(next(iter(results.values()))))
    table = ComparisonTable.build(results, base)
    out = Path(output_dir or configs[0].output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rmse_csv(out / "comparison.csv", table.rows)
    write_json(out / "comparison.json", {"baseline_mode": base, "rows": table.rows})
    return table
