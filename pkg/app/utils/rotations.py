"""
Rotation utility functions for base orientation handling.
Pure functional approach over Euler angles (roll, pitch, yaw) in ZYX order.

R = Rz(yaw) @ Ry(pitch) @ Rx(roll). Euler rates map to world-frame angular
velocity through omega = E(angles) @ angle_rates with columns
E = [Rz Ry e_x, Rz e_y, e_z].
"""

import numpy as np
from scipy.spatial.transform import Rotation


def _rx(a: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(a), np.sin(a)
    m = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    dm = np.array([[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])
    return m, dm


def _ry(a: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(a), np.sin(a)
    m = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    dm = np.array([[-s, 0.0, c], [0.0, 0.0, 0.0], [-c, 0.0, -s]])
    return m, dm


def _rz(a: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(a), np.sin(a)
    m = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    dm = np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])
    return m, dm


def euler_zyx_matrix(euler: np.ndarray) -> np.ndarray:
    """
    Rotation matrix of ZYX Euler angles.

    Args:
        euler: (roll, pitch, yaw) in radians

    Returns:
        np.ndarray: 3x3 rotation matrix mapping base to world coordinates

    Example:
        >>> euler_zyx_matrix(np.array([0.0, 0.0, np.pi / 2])) @ np.array([1.0, 0.0, 0.0])
        array([0., 1., 0.])
    """
    rx, _ = _rx(euler[0])
    ry, _ = _ry(euler[1])
    rz, _ = _rz(euler[2])
    return rz @ ry @ rx


def euler_zyx_matrix_derivatives(euler: np.ndarray) -> np.ndarray:
    """
    Partial derivatives of the ZYX rotation matrix.

    Returns:
        np.ndarray: Array of shape (3, 3, 3); entry k is dR/d(euler[k])
    """
    rx, drx = _rx(euler[0])
    ry, dry = _ry(euler[1])
    rz, drz = _rz(euler[2])
    return np.stack([rz @ ry @ drx, rz @ dry @ rx, drz @ ry @ rx])


def yaw_matrix(yaw: float) -> np.ndarray:
    """Rotation about the world z axis."""
    return _rz(yaw)[0]


def yaw_matrix_derivative(yaw: float) -> np.ndarray:
    return _rz(yaw)[1]


def euler_rate_matrix(euler: np.ndarray) -> np.ndarray:
    """
    Matrix E mapping ZYX Euler rates to world-frame angular velocity.

    Args:
        euler: (roll, pitch, yaw) in radians

    Returns:
        np.ndarray: 3x3 matrix with omega = E @ euler_rates
    """
    _, theta, psi = euler
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.array([
        [cp * ct, -sp, 0.0],
        [sp * ct, cp, 0.0],
        [-st, 0.0, 1.0],
    ])


def euler_rate_matrix_derivatives(euler: np.ndarray) -> np.ndarray:
    """
    First partial derivatives of E.

    Returns:
        np.ndarray: Shape (3, 3, 3); entry k is dE/d(euler[k]) (roll entry is zero)
    """
    _, theta, psi = euler
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    d_roll = np.zeros((3, 3))
    d_pitch = np.array([
        [-cp * st, 0.0, 0.0],
        [-sp * st, 0.0, 0.0],
        [-ct, 0.0, 0.0],
    ])
    d_yaw = np.array([
        [-sp * ct, -cp, 0.0],
        [cp * ct, -sp, 0.0],
        [0.0, 0.0, 0.0],
    ])
    return np.stack([d_roll, d_pitch, d_yaw])


def euler_rate_matrix_second_derivatives(euler: np.ndarray) -> np.ndarray:
    """
    Second partial derivatives of E.

    Returns:
        np.ndarray: Shape (3, 3, 3, 3); entry [k, l] is d2E/(d euler[k] d euler[l])
    """
    _, theta, psi = euler
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    out = np.zeros((3, 3, 3, 3))
    pitch_pitch = np.array([
        [-cp * ct, 0.0, 0.0],
        [-sp * ct, 0.0, 0.0],
        [st, 0.0, 0.0],
    ])
    pitch_yaw = np.array([
        [sp * st, 0.0, 0.0],
        [-cp * st, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ])
    yaw_yaw = np.array([
        [-cp * ct, sp, 0.0],
        [-sp * ct, -cp, 0.0],
        [0.0, 0.0, 0.0],
    ])
    out[1, 1] = pitch_pitch
    out[1, 2] = pitch_yaw
    out[2, 1] = pitch_yaw
    out[2, 2] = yaw_yaw
    return out


def angular_velocity(euler: np.ndarray, euler_rates: np.ndarray) -> np.ndarray:
    """World-frame angular velocity of ZYX Euler angles and their rates."""
    return euler_rate_matrix(euler) @ euler_rates


def angular_acceleration(euler: np.ndarray, euler_rates: np.ndarray, euler_accels: np.ndarray) -> np.ndarray:
    """World-frame angular acceleration: E @ accels + (dE/dt) @ rates."""
    e_dot = np.tensordot(euler_rates, euler_rate_matrix_derivatives(euler), axes=1)
    return euler_rate_matrix(euler) @ euler_accels + e_dot @ euler_rates


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(a) @ b == cross(a, b)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def euler_to_quaternion(euler: np.ndarray) -> np.ndarray:
    """
    Unit quaternion (w, x, y, z) of ZYX Euler angles.

    Args:
        euler: Array (..., 3) of (roll, pitch, yaw)

    Returns:
        np.ndarray: Array (..., 4) scalar-first quaternions with w >= 0
    """
    euler = np.asarray(euler, dtype=float)
    flat = euler.reshape(-1, 3)
    xyzw = Rotation.from_euler("ZYX", flat[:, ::-1]).as_quat()
    wxyz = np.column_stack([xyzw[:, 3], xyzw[:, :3]])
    wxyz[wxyz[:, 0] < 0.0] *= -1.0
    return wxyz.reshape(euler.shape[:-1] + (4,))


def quaternion_to_rotation(quat_wxyz: np.ndarray) -> Rotation:
    """scipy Rotation of a scalar-first quaternion."""
    q = np.asarray(quat_wxyz, dtype=float)
    return Rotation.from_quat(np.concatenate([q[..., 1:], q[..., :1]], axis=-1))


def quaternion_angle(quat_wxyz: np.ndarray, ref_wxyz: np.ndarray) -> float:
    """
    Rotation angle of ref^-1 * quat, the norm of the relative rotation vector.

    Example:
        >>> quaternion_angle(np.array([0.0, 0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0, 0.0]))
        3.141592653589793
    """
    relative = quaternion_to_rotation(ref_wxyz).inv() * quaternion_to_rotation(quat_wxyz)
    return float(relative.magnitude())


def quaternion_to_matrix(quat_wxyz: np.ndarray) -> np.ndarray:
    return quaternion_to_rotation(quat_wxyz).as_matrix()


def matrix_yaw(rotation: np.ndarray) -> float:
    """Heading angle of a rotation matrix (yaw of its ZYX decomposition)."""
    return float(np.arctan2(rotation[1, 0], rotation[0, 0]))
