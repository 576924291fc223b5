"""Independent oracles for the test suite.

Everything here recomputes results through a different route than the
package: homogeneous-matrix forward kinematics straight from the fixture
JSON, finite differences for Jacobians, and a surface-point-sampling
collision decision. Nothing imports from evbtwin.kernels or evbtwin.motion
internals beyond plain data.
"""

from __future__ import annotations

import json

import numpy as np


def _quat_to_mat(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _hom(rot, pos):
    t = np.eye(4)
    t[:3, :3] = rot
    t[:3, 3] = pos
    return t


def _axis_angle_hom(axis, angle):
    axis = np.asarray(axis, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    k = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    rot = np.eye(3) * c + s * k + (1 - c) * np.outer(axis, axis)
    return _hom(rot, np.zeros(3))


class MatrixChainFK:
    """4x4-matrix-product forward kinematics built directly from the robot
    fixture document (independent of the package's quaternion chain)."""

    def __init__(self, fixture_path):
        with open(fixture_path) as fh:
            doc = json.load(fh)
        self.doc = doc
        self.track_axis = np.array(doc["track_axis"], dtype=float)
        mount = doc["mount"]
        self.t_mount = _hom(_quat_to_mat(np.array(mount["quaternion"])),
                            np.array(mount["position"], dtype=float))
        self.links = doc["links"]
        fl = doc["flange_offset"]
        self.t_flange = _hom(_quat_to_mat(np.array(fl["quaternion"])),
                             np.array(fl["position"], dtype=float))

    def flange_matrix(self, q) -> np.ndarray:
        t = self.t_mount @ _hom(np.eye(3), self.track_axis * q[0])
        for i, link in enumerate(self.links):
            fixed = _hom(_quat_to_mat(np.array(link["quaternion"])),
                         np.array(link["position"], dtype=float))
            t = t @ fixed @ _axis_angle_hom(link["axis"], q[i + 1])
        return t @ self.t_flange

    def flange_pos(self, q) -> np.ndarray:
        return self.flange_matrix(q)[:3, 3]

    def jacobian_fd(self, q, eps=1e-7) -> np.ndarray:
        """Finite-difference Jacobian: linear rows from positions, angular
        rows from the rotation-matrix derivative (w = unskew(dR R^T))."""
        base = self.flange_matrix(q)
        jac = np.zeros((6, 7))
        for i in range(7):
            qp = np.array(q, dtype=float)
            qp[i] += eps
            pert = self.flange_matrix(qp)
            jac[0:3, i] = (pert[:3, 3] - base[:3, 3]) / eps
            dr = (pert[:3, :3] - base[:3, :3]) / eps @ base[:3, :3].T
            jac[3:6, i] = [dr[2, 1], dr[0, 2], dr[1, 0]]
        return jac


# -- surface-sampling collision oracle -----------------------------------------


def box_surface_points(half, n=1000):
    """Deterministic grid over the six faces, allocated by area."""
    hx, hy, hz = half
    faces = [
        ((hy, hz), lambda u, v: np.column_stack([np.full_like(u, hx), u, v])),
        ((hy, hz), lambda u, v: np.column_stack([np.full_like(u, -hx), u, v])),
        ((hx, hz), lambda u, v: np.column_stack([u, np.full_like(u, hy), v])),
        ((hx, hz), lambda u, v: np.column_stack([u, np.full_like(u, -hy), v])),
        ((hx, hy), lambda u, v: np.column_stack([u, v, np.full_like(u, hz)])),
        ((hx, hy), lambda u, v: np.column_stack([u, v, np.full_like(u, -hz)])),
    ]
    areas = np.array([4 * a * b for (a, b), _ in faces])
    counts = np.maximum(1, np.round(n * areas / areas.sum()).astype(int))
    pts = []
    for ((a, b), make), cnt in zip(faces, counts):
        k = max(1, int(np.sqrt(cnt)))
        u = np.linspace(-a, a, k)
        v = np.linspace(-b, b, max(1, cnt // k))
        uu, vv = np.meshgrid(u, v)
        pts.append(make(uu.ravel(), vv.ravel()))
    return np.vstack(pts)


def cylinder_surface_points(radius, half_len, n=1000):
    side_area = 2 * np.pi * radius * 2 * half_len
    cap_area = np.pi * radius ** 2
    total = side_area + 2 * cap_area
    n_side = max(8, int(n * side_area / total))
    n_cap = max(4, (n - n_side) // 2)
    k = max(2, int(np.sqrt(n_side / 2)))
    phi = np.linspace(0, 2 * np.pi, 2 * k, endpoint=False)
    z = np.linspace(-half_len, half_len, max(2, n_side // (2 * k)))
    pp, zz = np.meshgrid(phi, z)
    side = np.column_stack([radius * np.cos(pp.ravel()),
                            radius * np.sin(pp.ravel()), zz.ravel()])
    kc = max(2, int(np.sqrt(n_cap)))
    r = np.linspace(0, radius, kc)
    pc, rc = np.meshgrid(np.linspace(0, 2 * np.pi, kc, endpoint=False), r)
    caps = []
    for sign in (1.0, -1.0):
        caps.append(np.column_stack([rc.ravel() * np.cos(pc.ravel()),
                                     rc.ravel() * np.sin(pc.ravel()),
                                     np.full(rc.size, sign * half_len)]))
    return np.vstack([side] + caps)


def capsule_surface_points(a, b, radius, n=1000):
    """Points on a capsule: lateral tube + hemispherical caps, world frame."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    axis = b - a
    length = np.linalg.norm(axis)
    z = axis / length if length > 1e-12 else np.array([0.0, 0.0, 1.0])
    ref = np.array([1.0, 0.0, 0.0])
    if abs(np.dot(ref, z)) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    x = ref - np.dot(ref, z) * z
    x /= np.linalg.norm(x)
    y = np.cross(z, x)

    tube_area = 2 * np.pi * radius * length
    cap_area = 2 * np.pi * radius ** 2
    total = tube_area + 2 * cap_area
    n_tube = max(8, int(n * tube_area / total)) if length > 1e-12 else 0
    n_cap = max(8, (n - n_tube) // 2)

    pts = []
    if n_tube:
        k = max(3, int(np.sqrt(n_tube / 2)))
        phi = np.linspace(0, 2 * np.pi, 2 * k, endpoint=False)
        t = np.linspace(0, 1, max(2, n_tube // (2 * k)))
        pp, tt = np.meshgrid(phi, t)
        centers = a[None, :] + tt.ravel()[:, None] * axis[None, :]
        normal = (np.cos(pp.ravel())[:, None] * x[None, :]
                  + np.sin(pp.ravel())[:, None] * y[None, :])
        pts.append(centers + radius * normal)
    kc = max(3, int(np.sqrt(n_cap)))
    theta = np.linspace(0, np.pi / 2, kc)
    phi = np.linspace(0, 2 * np.pi, 2 * kc, endpoint=False)
    tt, pp = np.meshgrid(theta, phi)
    local = np.column_stack([
        np.sin(tt.ravel()) * np.cos(pp.ravel()),
        np.sin(tt.ravel()) * np.sin(pp.ravel()),
        np.cos(tt.ravel()),
    ])
    frame = np.vstack([x, y, z])
    pts.append(b[None, :] + radius * (local @ frame))               # +z cap
    pts.append(a[None, :] + radius * ((local * [1, 1, -1]) @ frame))  # -z cap
    return np.vstack(pts)


# strictly-inside margin: keeps the oracle sound against the checker's
# 1e-10-accurate exact minimum (penetrations shallower than this are below
# what 1000 surface samples could catch anyway)
INSIDE_MARGIN = 1e-7


def points_in_box(points, center, rot, half) -> bool:
    local = (points - center) @ rot
    return bool(np.any(np.all(np.abs(local) < half - INSIDE_MARGIN, axis=1)))


def points_in_cylinder(points, center, rot, radius, half_len) -> bool:
    local = (points - center) @ rot
    radial = np.hypot(local[:, 0], local[:, 1])
    return bool(np.any((radial < radius - INSIDE_MARGIN)
                       & (np.abs(local[:, 2]) < half_len - INSIDE_MARGIN)))


def points_in_capsule(points, a, b, radius) -> bool:
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom < 1e-18:
        d = np.linalg.norm(points - a, axis=1)
        return bool(np.any(d < radius - INSIDE_MARGIN))
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    closest = a[None, :] + t[:, None] * ab[None, :]
    d = np.linalg.norm(points - closest, axis=1)
    return bool(np.any(d < radius - INSIDE_MARGIN))


def _frame_for_axis(z):
    ref = np.array([1.0, 0.0, 0.0])
    if abs(float(np.dot(ref, z))) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    x = ref - np.dot(ref, z) * z
    x /= np.linalg.norm(x)
    return np.vstack([x, np.cross(z, x), z])


class SamplingOracle:
    """Brute-force collision decision for whole robot states.

    Surface points (1000 per body) are sampled once in canonical frames and
    transformed per state; a pair collides when any surface point of one body
    lies strictly inside the other. Bounding-sphere pruning only skips pairs
    that provably cannot touch.
    """

    def __init__(self, geom, capsule_frames, capsule_a_local, capsule_b_local,
                 capsule_radii, capsule_names, self_pairs, tool_pairs,
                 points_per_body=1000):
        self.geom = geom
        self.frames = capsule_frames
        self.a_local = capsule_a_local
        self.b_local = capsule_b_local
        self.radii = capsule_radii
        self.names = capsule_names
        self.pairs = list(self_pairs) + list(tool_pairs)
        # canonical capsule points: z-aligned, a at origin
        self.cap_canonical = []
        for i in range(len(capsule_names)):
            length = float(np.linalg.norm(capsule_b_local[i] - capsule_a_local[i]))
            pts = capsule_surface_points(np.zeros(3),
                                         np.array([0.0, 0.0, max(length, 1e-9)]),
                                         capsule_radii[i], points_per_body)
            self.cap_canonical.append(pts)
        self.box_pts = [geom.box_c[j] + box_surface_points(geom.box_h[j],
                                                           points_per_body)
                        @ geom.box_rt[j]
                        for j in range(len(geom.box_names))]
        self.cyl_pts = [geom.cyl_c[j] + cylinder_surface_points(
            geom.cyl_r[j], geom.cyl_hl[j], points_per_body) @ geom.cyl_rt[j]
            for j in range(len(geom.cyl_names))]
        self.box_bound = np.linalg.norm(geom.box_h, axis=1) \
            if len(geom.box_names) else np.zeros(0)
        self.cyl_bound = (np.hypot(geom.cyl_r, geom.cyl_hl)
                          if len(geom.cyl_names) else np.zeros(0))

    def collides(self, A, B) -> bool:
        """A, B: (C,3) world capsule endpoints for one state."""
        n_caps = len(self.names)
        cap_world = [None] * n_caps

        def cap_points(i):
            if cap_world[i] is None:
                axis = B[i] - A[i]
                length = np.linalg.norm(axis)
                z = axis / length if length > 1e-12 else np.array([0.0, 0.0, 1.0])
                frame = _frame_for_axis(z)
                cap_world[i] = A[i] + self.cap_canonical[i] @ frame
            return cap_world[i]

        mid = 0.5 * (A + B)
        half = 0.5 * np.linalg.norm(B - A, axis=1) + self.radii
        for i in range(n_caps):
            for j in range(len(self.box_pts)):
                d = np.linalg.norm(mid[i] - self.geom.box_c[j])
                if d > half[i] + self.box_bound[j] + 1e-6:
                    continue
                if points_in_box(cap_points(i), self.geom.box_c[j],
                                 self.geom.box_rt[j].T, self.geom.box_h[j]):
                    return True
                if points_in_capsule(self.box_pts[j], A[i], B[i], self.radii[i]):
                    return True
            for j in range(len(self.cyl_pts)):
                d = np.linalg.norm(mid[i] - self.geom.cyl_c[j])
                if d > half[i] + self.cyl_bound[j] + 1e-6:
                    continue
                if points_in_cylinder(cap_points(i), self.geom.cyl_c[j],
                                      self.geom.cyl_rt[j].T, self.geom.cyl_r[j],
                                      self.geom.cyl_hl[j]):
                    return True
                if points_in_capsule(self.cyl_pts[j], A[i], B[i], self.radii[i]):
                    return True
        for i, j in self.pairs:
            d = np.linalg.norm(mid[i] - mid[j])
            if d > half[i] + half[j] + 1e-6:
                continue
            if points_in_capsule(cap_points(i), A[j], B[j], self.radii[j]):
                return True
            if points_in_capsule(cap_points(j), A[i], B[i], self.radii[i]):
                return True
        return False
