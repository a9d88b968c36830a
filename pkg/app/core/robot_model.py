"""
Kinematic and inertial quadruped description.
Geometric leg kinematics with the x-configuration knee convention.

Legs are ordered LF, RF, LH, RH. Joint vectors hold 12 angles in per-leg
blocks of (HAA, HFE, KFE). In the leg plane, with the HAA rotation removed,
a foot sits at
    hip + Rx(haa) @ (-l1 sin(hfe) - l2 sin(hfe + kfe), 0, -l1 cos(hfe) - l2 cos(hfe + kfe))
Front knees take kfe <= 0 (knee points backward), hind knees kfe >= 0.
"""

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from dotenv import dotenv_values

from app.exceptions import ConfigError, KinematicsError

logger = logging.getLogger(__name__)

LEG_NAMES = ("LF", "RF", "LH", "RH")
JOINT_NAMES = ("HAA", "HFE", "KFE")
FRONT_LEGS = (0, 1)

# cos(kfe) this far beyond the straight-leg limit still counts as reachable.
_REACH_TOL = 1e-9
_LIMIT_TOL = 1e-9


@dataclass(frozen=True)
class RobotModel:
    """Immutable quadruped parameters."""

    mass: float
    body_inertia: np.ndarray
    hip_offsets: np.ndarray
    upper_leg_length: float
    lower_leg_length: float
    box_centers: np.ndarray
    box_half_extents: np.ndarray
    friction_mu: float
    joint_limits: np.ndarray

    def __post_init__(self):
        inertia = np.array(self.body_inertia, dtype=float)
        if inertia.shape == (3,):
            inertia = np.diag(inertia)
        arrays = {
            "body_inertia": inertia,
            "hip_offsets": np.array(self.hip_offsets, dtype=float).reshape(4, 3),
            "box_centers": np.array(self.box_centers, dtype=float).reshape(4, 3),
            "box_half_extents": np.broadcast_to(np.array(self.box_half_extents, dtype=float), (4, 3)).copy(),
            "joint_limits": np.array(self.joint_limits, dtype=float).reshape(12, 2),
        }
        if self.mass <= 0.0:
            raise ConfigError(f"Robot mass must be positive, got {self.mass}")
        if not np.allclose(inertia, inertia.T) or np.any(np.linalg.eigvalsh(inertia) <= 0.0):
            raise ConfigError("Body inertia must be symmetric positive definite")
        if self.upper_leg_length <= 0.0 or self.lower_leg_length <= 0.0:
            raise ConfigError("Link lengths must be positive")
        if not 0.0 < self.friction_mu <= 1.5:
            raise ConfigError(f"Friction coefficient must lie in (0, 1.5], got {self.friction_mu}")
        if np.any(arrays["box_half_extents"] <= 0.0):
            raise ConfigError("Kinematic box half extents must be positive")
        if np.any(arrays["joint_limits"][:, 0] > arrays["joint_limits"][:, 1]):
            raise ConfigError("Joint limits must be ordered (lower, upper)")
        for name, value in arrays.items():
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def leg_length(self) -> float:
        """Maximum hip-to-foot distance."""
        return self.upper_leg_length + self.lower_leg_length

    @property
    def weight(self) -> float:
        return self.mass * 9.81

    def knee_sign(self, leg: int) -> float:
        return -1.0 if leg in FRONT_LEGS else 1.0


# ============================================================================
# Configuration File
# ============================================================================

def _floats(values: dict, key: str, count: Optional[int] = None) -> list[float]:
    raw = values.get(key)
    if raw is None:
        raise ConfigError(f"Robot description is missing '{key}'")
    try:
        parsed = [float(item) for item in raw.split(",")]
    except ValueError:
        raise ConfigError(f"Robot description entry '{key}' is not numeric: {raw!r}")
    if count is not None and len(parsed) != count:
        raise ConfigError(f"Robot description entry '{key}' needs {count} values, got {len(parsed)}")
    return parsed


def load_robot_model(path: Path) -> RobotModel:
    """
    Load a robot description from a key=value text file.

    Args:
        path: Description file (see config/anymal_b.cfg)

    Returns:
        RobotModel: Parsed and validated model

    Raises:
        ConfigError: If the file is missing, incomplete or invalid

    Example:
        >>> model = load_robot_model(Path("config/anymal_b.cfg"))
        >>> model.mass
        30.0
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Robot description not found: {path}")
    values = dotenv_values(path)

    inertia = _floats(values, "inertia")
    if len(inertia) not in (3, 9):
        raise ConfigError("inertia needs 3 (diagonal) or 9 values")
    inertia_matrix = np.diag(inertia) if len(inertia) == 3 else np.array(inertia).reshape(3, 3)

    if "box_half_extents" in values:
        half_extents = [_floats(values, "box_half_extents", 3)] * 4
    else:
        half_extents = [_floats(values, f"box_half_extents_{leg}", 3) for leg in LEG_NAMES]

    limits = []
    for leg in range(4):
        limits.append(_floats(values, "haa_limits", 2))
        limits.append(_floats(values, "hfe_limits", 2))
        limits.append(_floats(values, "kfe_limits_front" if leg in FRONT_LEGS else "kfe_limits_hind", 2))

    model = RobotModel(
        mass=_floats(values, "mass", 1)[0],
        body_inertia=inertia_matrix,
        hip_offsets=[_floats(values, f"hip_offset_{leg}", 3) for leg in LEG_NAMES],
        upper_leg_length=_floats(values, "upper_leg_length", 1)[0],
        lower_leg_length=_floats(values, "lower_leg_length", 1)[0],
        box_centers=[_floats(values, f"box_center_{leg}", 3) for leg in LEG_NAMES],
        box_half_extents=half_extents,
        friction_mu=_floats(values, "friction_mu", 1)[0],
        joint_limits=limits,
    )
    logger.debug(f"Loaded robot description {path} (hash {robot_model_hash(model)[:12]})")
    return model


def robot_model_hash(model: RobotModel) -> str:
    """SHA-256 of a canonical text rendering of the model."""
    parts = [
        f"mass={model.mass!r}",
        "inertia=" + ",".join(repr(float(v)) for v in model.body_inertia.ravel()),
        "hips=" + ",".join(repr(float(v)) for v in model.hip_offsets.ravel()),
        f"links={model.upper_leg_length!r},{model.lower_leg_length!r}",
        "box_centers=" + ",".join(repr(float(v)) for v in model.box_centers.ravel()),
        "box_half_extents=" + ",".join(repr(float(v)) for v in model.box_half_extents.ravel()),
        f"mu={model.friction_mu!r}",
        "limits=" + ",".join(repr(float(v)) for v in model.joint_limits.ravel()),
    ]
    return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()


# ============================================================================
# Kinematics
# ============================================================================

def _rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def leg_forward_kinematics(model: RobotModel, leg: int, joints: np.ndarray) -> np.ndarray:
    """Base-frame foot position of one leg."""
    haa, hfe, kfe = joints
    l1, l2 = model.upper_leg_length, model.lower_leg_length
    planar = np.array([
        -l1 * np.sin(hfe) - l2 * np.sin(hfe + kfe),
        0.0,
        -l1 * np.cos(hfe) - l2 * np.cos(hfe + kfe),
    ])
    return model.hip_offsets[leg] + _rot_x(haa) @ planar


def forward_kinematics(
    model: RobotModel,
    base_position: np.ndarray,
    base_rotation: np.ndarray,
    q: np.ndarray,
) -> np.ndarray:
    """
    World-frame foot positions.

    Args:
        model: Robot description
        base_position: Base (CoM) position in world frame
        base_rotation: 3x3 base-to-world rotation
        q: 12 joint angles

    Returns:
        np.ndarray: Shape (4, 3) foot positions ordered LF, RF, LH, RH
    """
    q = np.asarray(q, dtype=float).reshape(4, 3)
    feet = np.array([leg_forward_kinematics(model, leg, q[leg]) for leg in range(4)])
    return np.asarray(base_position, dtype=float) + feet @ np.asarray(base_rotation).T


def foot_in_base(base_position: np.ndarray, base_rotation: np.ndarray, foot: np.ndarray) -> np.ndarray:
    """Express a world-frame point in the base frame."""
    return np.asarray(base_rotation).T @ (np.asarray(foot, dtype=float) - np.asarray(base_position, dtype=float))


def leg_inverse_kinematics(model: RobotModel, leg: int, foot_base: np.ndarray, check_limits: bool = True) -> np.ndarray:
    """
    Joint angles placing one foot at a base-frame position.

    HAA is resolved first to bring the target into the leg plane; the knee
    branch follows the x-configuration. Targets at full extension within a
    small tolerance take the straight-knee solution.

    Raises:
        KinematicsError: If the target is outside the reachable annulus or
            the solution violates a joint limit
    """
    d = np.asarray(foot_base, dtype=float) - model.hip_offsets[leg]
    l1, l2 = model.upper_leg_length, model.lower_leg_length

    haa = np.arctan2(d[1], -d[2])
    pz = -np.hypot(d[1], d[2])
    px = d[0]
    reach_sq = px * px + pz * pz
    cos_knee = (reach_sq - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if cos_knee > 1.0 + _REACH_TOL or cos_knee < -1.0 - _REACH_TOL:
        raise KinematicsError(
            f"Leg {LEG_NAMES[leg]} target at distance {np.sqrt(reach_sq):.4f} m is outside the reachable "
            f"annulus [{abs(l1 - l2):.4f}, {l1 + l2:.4f}]"
        )
    cos_knee = float(np.clip(cos_knee, -1.0, 1.0))
    kfe = model.knee_sign(leg) * np.arccos(cos_knee)
    hfe = np.arctan2(-px, -pz) - np.arctan2(l2 * np.sin(kfe), l1 + l2 * np.cos(kfe))
    hfe = float(np.arctan2(np.sin(hfe), np.cos(hfe)))

    joints = np.array([haa, hfe, kfe])
    if check_limits:
        limits = model.joint_limits[3 * leg:3 * leg + 3]
        outside = (joints < limits[:, 0] - _LIMIT_TOL) | (joints > limits[:, 1] + _LIMIT_TOL)
        if np.any(outside):
            name = JOINT_NAMES[int(np.argmax(outside))]
            raise KinematicsError(f"Leg {LEG_NAMES[leg]} {name} angle {joints[np.argmax(outside)]:.4f} outside limits")
    return joints


def inverse_kinematics(
    model: RobotModel,
    base_position: np.ndarray,
    base_rotation: np.ndarray,
    foot: np.ndarray,
    leg: int,
    check_limits: bool = True,
) -> np.ndarray:
    """
    Joint angles of one leg placing its foot at a world-frame position.

    Args:
        model: Robot description
        base_position: Base position in world frame
        base_rotation: 3x3 base-to-world rotation
        foot: World-frame target
        leg: Leg index (0..3 for LF, RF, LH, RH)
        check_limits: Reject solutions outside the joint limits

    Returns:
        np.ndarray: (HAA, HFE, KFE)

    Raises:
        KinematicsError: If the target is unreachable
    """
    return leg_inverse_kinematics(model, leg, foot_in_base(base_position, base_rotation, foot), check_limits)


def joint_velocities_by_differences(q: np.ndarray, dt: float = 0.01) -> np.ndarray:
    """
    Joint velocities from sampled angles.

    Central differences in the interior, one-sided at both ends.

    Args:
        q: Array (frames, joints) with at least two frames
        dt: Sampling interval (s)

    Returns:
        np.ndarray: Same shape as q
    """
    q = np.asarray(q, dtype=float)
    if q.shape[0] < 2:
        raise ValueError("Need at least two frames to difference joint angles")
    return np.gradient(q, dt, axis=0, edge_order=1)


def nominal_stance(model: RobotModel) -> tuple[np.ndarray, np.ndarray]:
    """
    Nominal base-frame feet (box centers) and matching joint angles.

    Returns:
        tuple: (feet of shape (4, 3), q of shape (12,))
    """
    feet = np.array(model.box_centers)
    q = np.concatenate([leg_inverse_kinematics(model, leg, feet[leg]) for leg in range(4)])
    return feet, q


def nominal_height(model: RobotModel) -> float:
    """Base height above the feet in the nominal stance."""
    return float(-np.mean(model.box_centers[:, 2]))
