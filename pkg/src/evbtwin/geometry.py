"""Rigid poses and quaternion arithmetic.

Quaternions are (w, x, y, z), unit norm, canonical sign w >= 0. Positions in
meters, angles in radians. Everything here is pure and allocation-light; the
hot batched variants live in :mod:`evbtwin.kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion")
    q = q / n
    if q[0] < 0.0:
        q = -q
    return q


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by quaternion q."""
    v = np.asarray(v, dtype=float)
    w, x, y, z = q
    u = np.array([x, y, z])
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def quat_to_mat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def mat_to_quat(m: np.ndarray) -> np.ndarray:
    """Shepperd's method; returns the canonical (w >= 0) quaternion."""
    t = np.trace(m)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    return quat_normalize(q)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        return IDENTITY_QUAT.copy()
    half = 0.5 * angle
    q = np.empty(4)
    q[0] = np.cos(half)
    q[1:] = axis / n * np.sin(half)
    if q[0] < 0.0:
        q = -q
    return q


def quat_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle between two rotations, in [0, pi].

    atan2 form: |a-b| = 2 sin(theta/4), |a+b| = 2 cos(theta/4) up to the
    q/-q ambiguity, so this stays accurate near zero where arccos cannot.
    """
    d = float(np.linalg.norm(a - b))
    s = float(np.linalg.norm(a + b))
    return 4.0 * np.arctan2(min(d, s), max(d, s))


def quat_slerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    d = float(np.dot(a, b))
    if d < 0.0:
        b = -b
        d = -d
    if d > 1.0 - 1e-12:
        return quat_normalize(a + t * (b - a))
    theta = np.arccos(d)
    s = np.sin(theta)
    return quat_normalize((np.sin((1 - t) * theta) / s) * a + (np.sin(t * theta) / s) * b)


@dataclass(frozen=True)
class Pose6D:
    """Position + unit quaternion, the pose type used everywhere."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        q = np.asarray(self.orientation, dtype=float).reshape(4)
        n = np.linalg.norm(q)
        if abs(n - 1.0) > 1e-9:
            q = q / n
        if q[0] < 0.0:
            q = -q
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)

    @staticmethod
    def identity() -> "Pose6D":
        return Pose6D()

    @staticmethod
    def from_xyz(x: float, y: float, z: float) -> "Pose6D":
        return Pose6D(np.array([x, y, z]))

    def compose(self, other: "Pose6D") -> "Pose6D":
        """self o other: apply other in self's frame."""
        return Pose6D(self.position + quat_rotate(self.orientation, other.position),
                      quat_mul(self.orientation, other.orientation))

    def inverse(self) -> "Pose6D":
        qi = quat_conj(self.orientation)
        return Pose6D(-quat_rotate(qi, self.position), qi)

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.position + quat_rotate(self.orientation, np.asarray(p, dtype=float))

    def transform_points(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ quat_to_mat(self.orientation).T + self.position

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_mat(self.orientation)

    def pos_error(self, other: "Pose6D") -> float:
        return float(np.linalg.norm(self.position - other.position))

    def rot_error(self, other: "Pose6D") -> float:
        return quat_angle(self.orientation, other.orientation)

    def interpolate(self, other: "Pose6D", t: float) -> "Pose6D":
        return Pose6D((1.0 - t) * self.position + t * other.position,
                      quat_slerp(self.orientation, other.orientation, t))

    def almost_equal(self, other: "Pose6D", tol_pos: float = 1e-9, tol_rot: float = 1e-9) -> bool:
        return self.pos_error(other) <= tol_pos and self.rot_error(other) <= tol_rot

    def to_dict(self) -> dict:
        return {"position": [float(v) for v in self.position],
                "quaternion": [float(v) for v in self.orientation]}

    @staticmethod
    def from_dict(d: dict) -> "Pose6D":
        return Pose6D(np.array(d["position"], dtype=float),
                      np.array(d["quaternion"], dtype=float))
