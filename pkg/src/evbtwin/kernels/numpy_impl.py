"""Pure-NumPy kernel backend.

Batched, vectorized implementations of the hot numeric primitives: forward
kinematics of the 7-joint chain and exact clearance primitives between
segments (capsule axes) and convex shapes. Shape SDFs are exact signed
distances of convex bodies, so the minimum along a segment is found by
ternary search on a convex 1-D function.

All functions here must stay numerically identical in meaning to
``numba_impl``; the test suite runs against whichever backend the
``TWIN_NUMBA`` env flag selects.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_TERNARY_ITERS = 56  # (2/3)^56 ~ 1.4e-10: far below the oracle margin on meter scales


def _rodrigues(axis: np.ndarray, theta) -> np.ndarray:
    """Rotation matrices about a fixed unit axis for angles theta (...,)."""
    theta = np.asarray(theta, dtype=float)
    ax, ay, az = axis
    c = np.cos(theta)
    s = np.sin(theta)
    one_c = 1.0 - c
    out = np.empty(theta.shape + (3, 3))
    out[..., 0, 0] = c + ax * ax * one_c
    out[..., 0, 1] = ax * ay * one_c - az * s
    out[..., 0, 2] = ax * az * one_c + ay * s
    out[..., 1, 0] = ay * ax * one_c + az * s
    out[..., 1, 1] = c + ay * ay * one_c
    out[..., 1, 2] = ay * az * one_c - ax * s
    out[..., 2, 0] = az * ax * one_c - ay * s
    out[..., 2, 1] = az * ay * one_c + ax * s
    out[..., 2, 2] = c + az * az * one_c
    return out


def fk_frames(q, jpos, jrot, jaxes, jtypes, fpos, frot):
    """Single-state FK.

    Returns (pos (8,3), rot (8,3,3), axes_world (7,3)): frames 0..6 are the
    post-motion joint frames, frame 7 is the flange.
    """
    pos = np.zeros(3)
    rot = np.eye(3)
    out_pos = np.empty((8, 3))
    out_rot = np.empty((8, 3, 3))
    axes_world = np.empty((7, 3))
    for i in range(7):
        pos = pos + rot @ jpos[i]
        rot = rot @ jrot[i]
        axis_w = rot @ jaxes[i]
        axes_world[i] = axis_w
        if jtypes[i] == 0:  # prismatic
            pos = pos + axis_w * q[i]
        else:
            rot = rot @ _rodrigues(jaxes[i], q[i])
        out_pos[i] = pos
        out_rot[i] = rot
    out_pos[7] = pos + rot @ fpos
    out_rot[7] = rot @ frot
    return out_pos, out_rot, axes_world


def fk_frames_batch(Q, jpos, jrot, jaxes, jtypes, fpos, frot):
    """FK for a batch of joint states Q (M,7) -> pos (M,8,3), rot (M,8,3,3)."""
    Q = np.asarray(Q, dtype=float)
    m = Q.shape[0]
    pos = np.zeros((m, 3))
    rot = np.broadcast_to(np.eye(3), (m, 3, 3)).copy()
    out_pos = np.empty((m, 8, 3))
    out_rot = np.empty((m, 8, 3, 3))
    for i in range(7):
        pos = pos + rot @ jpos[i]
        rot = rot @ jrot[i]
        if jtypes[i] == 0:
            axis_w = rot @ jaxes[i]
            pos = pos + axis_w * Q[:, i:i + 1]
        else:
            rot = rot @ _rodrigues(jaxes[i], Q[:, i])
        out_pos[:, i] = pos
        out_rot[:, i] = rot
    out_pos[:, 7] = pos + rot @ fpos
    out_rot[:, 7] = rot @ frot
    return out_pos, out_rot


def seg_seg_dist(P0, P1, Q0, Q1):
    """Minimum distance between segments [P0,P1] and [Q0,Q1], batched (M,3)."""
    P0 = np.atleast_2d(P0)
    P1 = np.atleast_2d(P1)
    Q0 = np.atleast_2d(Q0)
    Q1 = np.atleast_2d(Q1)
    d1 = P1 - P0
    d2 = Q1 - Q0
    r = P0 - Q0
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    denom = a * e - b * b

    eps = 1e-15
    s = np.where(denom > eps, (b * f - c * e) / np.where(denom > eps, denom, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = np.where(e > eps, (b * s + f) / np.where(e > eps, e, 1.0), 0.0)
    # re-clamp s for t pushed to the boundary
    t_cl = np.clip(t, 0.0, 1.0)
    need = t != t_cl
    s = np.where(need, np.clip(np.where(a > eps, (t_cl * b - c) / np.where(a > eps, a, 1.0), 0.0), 0.0, 1.0), s)
    # degenerate first segment
    s = np.where(a <= eps, 0.0, s)
    t_cl = np.where(a <= eps, np.clip(np.where(e > eps, f / np.where(e > eps, e, 1.0), 0.0), 0.0, 1.0), t_cl)
    cp = P0 + s[:, None] * d1
    cq = Q0 + t_cl[:, None] * d2
    return np.linalg.norm(cp - cq, axis=1)


def _box_sdf_local(p, h):
    """Exact signed distance of points p (M,3) to boxes with half-extents h (M,3)."""
    q = np.abs(p) - h
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(np.max(q, axis=-1), 0.0)
    return outside + inside


def _cyl_sdf_local(p, rad, hl):
    """Exact signed distance to z-aligned cylinders (radius rad, half-length hl)."""
    dr = np.hypot(p[..., 0], p[..., 1]) - rad
    dz = np.abs(p[..., 2]) - hl
    out = np.hypot(np.maximum(dr, 0.0), np.maximum(dz, 0.0))
    ins = np.minimum(np.maximum(dr, dz), 0.0)
    return out + ins


def _seg_convex_min(a, b, sdf):
    """Min of a convex sdf along segments a->b (local frame), via ternary search."""
    lo = np.zeros(a.shape[0])
    hi = np.ones(a.shape[0])
    d = b - a
    for _ in range(_TERNARY_ITERS):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        g1 = sdf(a + m1[:, None] * d)
        g2 = sdf(a + m2[:, None] * d)
        take_left = g1 <= g2
        hi = np.where(take_left, m2, hi)
        lo = np.where(take_left, lo, m1)
    mid = 0.5 * (lo + hi)
    g_mid = sdf(a + mid[:, None] * d)
    g0 = sdf(a)
    g1 = sdf(b)
    return np.minimum(np.minimum(g0, g1), g_mid)


def seg_box_sdf(P0, P1, C, RT, H):
    """Min signed distance of segments [P0,P1] to boxes (center C, world->box
    rotation RT, half-extents H); all batched (M, ...)."""
    a = np.einsum("mij,mj->mi", RT, P0 - C)
    b = np.einsum("mij,mj->mi", RT, P1 - C)
    return _seg_convex_min(a, b, lambda p: _box_sdf_local(p, H))


def seg_cyl_sdf(P0, P1, C, RT, RAD, HL):
    """Min signed distance of segments to cylinders (z-aligned in local frame)."""
    a = np.einsum("mij,mj->mi", RT, P0 - C)
    b = np.einsum("mij,mj->mi", RT, P1 - C)
    return _seg_convex_min(a, b, lambda p: _cyl_sdf_local(p, RAD, HL))


def _caps_vs_shapes(A, B, RAD, centers, rts, bound, exact_rows):
    """Shared pair-matrix schema: bounding-sphere bound, midpoint Lipschitz
    bound, then the exact segment minimum on the few surviving pairs."""
    r = A.shape[0]
    n = len(centers)
    mid = 0.5 * (A + B)
    half = 0.5 * np.linalg.norm(B - A, axis=1)
    rel = mid[:, None, :] - centers[None, :, :]                      # (R,N,3)
    out = (np.linalg.norm(rel, axis=2) - half[:, None]
           - bound[None, :] - RAD[:, None])
    need = out <= 0.0
    if not need.any():
        return out
    ri, ni = np.nonzero(need)
    p_local = np.einsum("kij,kj->ki", rts[ni], rel[ri, ni])
    g_mid = exact_rows.point_sdf(p_local, ni)
    lo = g_mid - half[ri] - RAD[ri]
    out[ri, ni] = lo
    deeper = lo <= 0.0
    if not deeper.any():
        return out
    ri, ni = ri[deeper], ni[deeper]
    a_l = np.einsum("kij,kj->ki", rts[ni], A[ri] - centers[ni])
    b_l = np.einsum("kij,kj->ki", rts[ni], B[ri] - centers[ni])
    out[ri, ni] = exact_rows.seg_sdf(a_l, b_l, ni) - RAD[ri]
    return out


class _BoxRows:
    def __init__(self, h):
        self.h = h

    def point_sdf(self, p, ni):
        return _box_sdf_local(p, self.h[ni])

    def seg_sdf(self, a, b, ni):
        h = self.h[ni]
        return _seg_convex_min(a, b, lambda p: _box_sdf_local(p, h))


class _CylRows:
    def __init__(self, r, hl):
        self.r = r
        self.hl = hl

    def point_sdf(self, p, ni):
        return _cyl_sdf_local(p, self.r[ni], self.hl[ni])

    def seg_sdf(self, a, b, ni):
        r, hl = self.r[ni], self.hl[ni]
        return _seg_convex_min(a, b, lambda p: _cyl_sdf_local(p, r, hl))


def capsules_vs_boxes(A, B, RAD, box_c, box_rt, box_h):
    """Clearance matrix (R, NB): capsule axes [A,B] with radii RAD against
    oriented boxes. Culled far pairs carry a conservative lower bound."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    RAD = np.asarray(RAD, dtype=float)
    bound = np.sqrt((box_h * box_h).sum(axis=1))
    return _caps_vs_shapes(A, B, RAD, box_c, box_rt, bound, _BoxRows(box_h))


def capsules_vs_cylinders(A, B, RAD, cyl_c, cyl_rt, cyl_r, cyl_hl):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    RAD = np.asarray(RAD, dtype=float)
    bound = np.hypot(cyl_r, cyl_hl)
    return _caps_vs_shapes(A, B, RAD, cyl_c, cyl_rt, bound,
                           _CylRows(cyl_r, cyl_hl))


_DEG = 180.0 / np.pi
_RAD = np.pi / 180.0
_WIRE_SCALE = np.array([1e3] + [_DEG] * 6)
_WIRE_CLAMP = np.array([1.0] + [0.1] * 6)


def run_tracking_cycles(desired, q0, corr0, lo, hi):
    """Loopback servo recurrence over a whole phase: per cycle, integrate the
    pending correction, report quantized actuals, compute the next clamped
    correction toward the desired setpoint. Returns (q per cycle, final q,
    pending correction)."""
    desired = np.asarray(desired, dtype=float)
    q = np.asarray(q0, dtype=float).copy()
    corr = np.asarray(corr0, dtype=float).copy()
    n = desired.shape[0]
    out = np.empty_like(desired)
    for k in range(n):
        q = np.minimum(np.maximum(q + corr, lo), hi)
        out[k] = q
        rep = np.rint(q * _WIRE_SCALE * 1e6) * 1e-6
        c = np.clip((desired[k] - rep / _WIRE_SCALE) * _WIRE_SCALE,
                    -_WIRE_CLAMP, _WIRE_CLAMP)
        corr = np.rint(c * 1e6) * 1e-6 / _WIRE_SCALE
    return out, q, corr
