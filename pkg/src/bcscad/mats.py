"""Small 4x4 affine matrix helpers shared by evaluator, rewriter, and geometry.

Rotation convention matches the language: rotate([ax,ay,az]) applies x first,
so the matrix is Rz(az) @ Ry(ay) @ Rx(ax). Angles are degrees everywhere.
"""

from __future__ import annotations

import math

import numpy as np

GIMBAL_EPS = 1e-9


def identity() -> np.ndarray:
    return np.eye(4)


def translation(v) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = v
    return m


def scaling(v) -> np.ndarray:
    m = np.eye(4)
    m[0, 0], m[1, 1], m[2, 2] = v
    return m


def rot_x(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    m = np.eye(4)
    m[1, 1], m[1, 2], m[2, 1], m[2, 2] = c, -s, s, c
    return m


def rot_y(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    m = np.eye(4)
    m[0, 0], m[0, 2], m[2, 0], m[2, 2] = c, s, -s, c
    return m


def rot_z(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    m = np.eye(4)
    m[0, 0], m[0, 1], m[1, 0], m[1, 1] = c, -s, s, c
    return m


def rotation_xyz(ax: float, ay: float, az: float) -> np.ndarray:
    return rot_z(az) @ rot_y(ay) @ rot_x(ax)


def axis_angle(axis, deg: float) -> np.ndarray:
    """Rotation about an arbitrary axis through the origin (Rodrigues)."""
    a = np.asarray(axis, dtype=float)
    n = np.linalg.norm(a)
    if n == 0:
        return np.eye(4)
    x, y, z = a / n
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    k = 1.0 - c
    m = np.eye(4)
    m[:3, :3] = np.array([
        [c + x * x * k, x * y * k - z * s, x * z * k + y * s],
        [y * x * k + z * s, c + y * y * k, y * z * k - x * s],
        [z * x * k - y * s, z * y * k + x * s, c + z * z * k],
    ])
    return m


def euler_xyz_from_rotation(r: np.ndarray) -> tuple[float, float, float]:
    """Decompose a rotation as Rz(rz) @ Ry(ry) @ Rx(rx), degrees.

    ry is kept in [-90, 90]. At gimbal lock (|cos ry| < 1e-9) rx is set to 0
    and the remaining spin folds into rz. Output angles lie in (-180, 180].
    """
    r = np.asarray(r, dtype=float)[:3, :3]
    sy = -r[2, 0]
    sy = min(1.0, max(-1.0, sy))
    ry = math.asin(sy)
    if abs(math.cos(ry)) < GIMBAL_EPS:
        rx = 0.0
        rz = math.atan2(-r[0, 1], r[1, 1])
    else:
        rx = math.atan2(r[2, 1], r[2, 2])
        rz = math.atan2(r[1, 0], r[0, 0])
    out = []
    for ang in (math.degrees(rx), math.degrees(ry), math.degrees(rz)):
        if ang <= -180.0:
            ang += 360.0
        if ang > 180.0:
            ang -= 360.0
        out.append(ang + 0.0)  # normalize -0.0
    return out[0], out[1], out[2]
