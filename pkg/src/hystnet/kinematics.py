"""Forward kinematics and geometric Jacobian of the fixed synthetic 6R chain.

The chain is documented, not a real robot's geometry: six revolute joints with
alternating rotation axes z, y, z, y, z, y (in each joint's parent frame), and
link i extending along the local z axis by link_lengths[i] after joint i. With
all joints at zero the arm points straight up and the end-effector sits at
(0, 0, sum(link_lengths)).

Wrenches are 6-vectors ordered (fx, fy, fz, mx, my, mz) in the base frame,
applied at the end-effector.
"""

from __future__ import annotations

import numpy as np

from .validation import as_joint_vector

JOINT_AXES = ("z", "y", "z", "y", "z", "y")

_AXIS_VEC = {"z": np.array([0.0, 0.0, 1.0]), "y": np.array([0.0, 1.0, 0.0])}


def _rot(axis: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _chain(q: np.ndarray, link_lengths: np.ndarray):
    """World-frame joint origins, joint axes, and cumulative rotations."""
    origins = np.zeros((6, 3))
    axes = np.zeros((6, 3))
    R = np.eye(3)
    p = np.zeros(3)
    for i in range(6):
        origins[i] = p
        axes[i] = R @ _AXIS_VEC[JOINT_AXES[i]]
        R = R @ _rot(JOINT_AXES[i], q[i])
        p = p + R @ np.array([0.0, 0.0, link_lengths[i]])
    return origins, axes, p, R


def fk_pose(q, link_lengths) -> tuple[np.ndarray, np.ndarray]:
    """End-effector position (3,) and orientation (3x3 rotation)."""
    q = as_joint_vector(q, "q")
    L = as_joint_vector(link_lengths, "link_lengths")
    _, _, p, R = _chain(q, L)
    return p, R


def jacobian(q, link_lengths) -> np.ndarray:
    """6x6 geometric Jacobian; rows 0-2 linear, rows 3-5 angular."""
    q = as_joint_vector(q, "q")
    L = as_joint_vector(link_lengths, "link_lengths")
    origins, axes, p_ee, _ = _chain(q, L)
    J = np.zeros((6, 6))
    for i in range(6):
        J[:3, i] = np.cross(axes[i], p_ee - origins[i])
        J[3:, i] = axes[i]
    return J


def external_to_joint_torque(wrench, q, link_lengths) -> np.ndarray:
    """Joint torques (Nm) equivalent to an end-effector wrench: tau = J^T w."""
    w = as_joint_vector(wrench, "wrench")
    return jacobian(q, link_lengths).T @ w
