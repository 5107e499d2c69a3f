"""
Gyro-free attitude estimation for symmetric multi-IMU accelerometer arrays.

IMUs mounted in mirrored pairs (``rho_j = -rho_i``) let the half-sum of each
pair carry only the linear specific force and the half-difference only the
rotational part. Angular rate and acceleration are solved from the
rotational parts by weighted Gauss-Newton, tested for significance axis by
axis, and fed to an error-state EKF that corrects roll and pitch with
gravity whenever the array is not accelerating.
"""

from .ekf import AttitudeSolution, EkfState, measurement_update, predict, zero_accel_detect
from .evaluation import ComparisonTable, DetectionReport, RmseReport, detection_accuracy, rmse
from .exceptions import *  # noqa: F401,F403
from .gate import GateConfig, GateDecision, gate
from .geometry import (
    ArrayGeometry,
    ImuPlacement,
    SymmetryPairing,
    cube_array,
    octahedron_array,
    planar_array,
    validate_and_pair,
)
from .gf import GfMechanization, GfSolver, solve_joint
from .pipeline import RunConfig, RunResult, compare, estimate, prepare_input, run
from .sgf import AngularState, GravityEstimate, estimate_gravity, solve_angular
from .simulation import make_trajectory, synthesize
from .symmetric import SymmetricPairMeasurement, decompose

__version__ = "0.1.0"
