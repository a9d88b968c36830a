"""
Robot state snapshot shared by the dataset reference view and the tracking math.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class SimState:
    """
    Kinematic state of the robot at one control step.

    Attributes:
        body_positions: (n_bodies, 3) world positions of the tracked bodies
        joint_positions: (12,) joint angles (rad)
        com_pos: CoM position (m)
        com_linvel: CoM linear velocity (m/s)
        com_angvel: Base angular velocity in world frame (rad/s)
        base_quat: Unit quaternion (w, x, y, z)
        ee_pos: (4, 3) end-effector positions
        joint_velocities: (12,) joint rates (rad/s), optional
        previous_action: Action applied at the previous step, optional
    """

    body_positions: np.ndarray
    joint_positions: np.ndarray
    com_pos: np.ndarray
    com_linvel: np.ndarray
    com_angvel: np.ndarray
    base_quat: np.ndarray
    ee_pos: np.ndarray
    joint_velocities: Optional[np.ndarray] = None
    previous_action: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("body_positions", "joint_positions", "com_pos", "com_linvel", "com_angvel", "base_quat", "ee_pos"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("joint_velocities", "previous_action"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.asarray(value, dtype=float))
        object.__setattr__(self, "body_positions", self.body_positions.reshape(-1, 3))
        object.__setattr__(self, "ee_pos", self.ee_pos.reshape(-1, 3))
        norm = np.linalg.norm(self.base_quat)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"Base quaternion must be unit-norm, got norm {norm:.8f}")
