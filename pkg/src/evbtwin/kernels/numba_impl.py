"""Numba-JIT kernel backend.

Same contract as ``numpy_impl`` but compiled per-element loops. First call
pays JIT compilation (cached on disk afterwards via cache=True).
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

_TERNARY_ITERS = 56


@njit(cache=True)
def _rodrigues_into(axis, theta, out):
    ax, ay, az = axis[0], axis[1], axis[2]
    c = np.cos(theta)
    s = np.sin(theta)
    one_c = 1.0 - c
    out[0, 0] = c + ax * ax * one_c
    out[0, 1] = ax * ay * one_c - az * s
    out[0, 2] = ax * az * one_c + ay * s
    out[1, 0] = ay * ax * one_c + az * s
    out[1, 1] = c + ay * ay * one_c
    out[1, 2] = ay * az * one_c - ax * s
    out[2, 0] = az * ax * one_c - ay * s
    out[2, 1] = az * ay * one_c + ax * s
    out[2, 2] = c + az * az * one_c


@njit(cache=True, inline="always")
def _mat3_mul_into(a, b, out):
    for r in range(3):
        a0, a1, a2 = a[r, 0], a[r, 1], a[r, 2]
        out[r, 0] = a0 * b[0, 0] + a1 * b[1, 0] + a2 * b[2, 0]
        out[r, 1] = a0 * b[0, 1] + a1 * b[1, 1] + a2 * b[2, 1]
        out[r, 2] = a0 * b[0, 2] + a1 * b[1, 2] + a2 * b[2, 2]


@njit(cache=True)
def _fk_frames_core(q, jpos, jrot, jaxes, jtypes, fpos, frot, out_pos, out_rot, axes_world):
    px, py, pz = 0.0, 0.0, 0.0
    rot = np.eye(3)
    tmp = np.empty((3, 3))
    scratch = np.empty((3, 3))
    for i in range(7):
        ox, oy, oz = jpos[i, 0], jpos[i, 1], jpos[i, 2]
        px += rot[0, 0] * ox + rot[0, 1] * oy + rot[0, 2] * oz
        py += rot[1, 0] * ox + rot[1, 1] * oy + rot[1, 2] * oz
        pz += rot[2, 0] * ox + rot[2, 1] * oy + rot[2, 2] * oz
        _mat3_mul_into(rot, jrot[i], scratch)
        rot, scratch = scratch, rot
        ax, ay, az = jaxes[i, 0], jaxes[i, 1], jaxes[i, 2]
        wx = rot[0, 0] * ax + rot[0, 1] * ay + rot[0, 2] * az
        wy = rot[1, 0] * ax + rot[1, 1] * ay + rot[1, 2] * az
        wz = rot[2, 0] * ax + rot[2, 1] * ay + rot[2, 2] * az
        axes_world[i, 0] = wx
        axes_world[i, 1] = wy
        axes_world[i, 2] = wz
        if jtypes[i] == 0:
            px += wx * q[i]
            py += wy * q[i]
            pz += wz * q[i]
        else:
            _rodrigues_into(jaxes[i], q[i], tmp)
            _mat3_mul_into(rot, tmp, scratch)
            rot, scratch = scratch, rot
        out_pos[i, 0] = px
        out_pos[i, 1] = py
        out_pos[i, 2] = pz
        out_rot[i] = rot
    fx, fy, fz = fpos[0], fpos[1], fpos[2]
    out_pos[7, 0] = px + rot[0, 0] * fx + rot[0, 1] * fy + rot[0, 2] * fz
    out_pos[7, 1] = py + rot[1, 0] * fx + rot[1, 1] * fy + rot[1, 2] * fz
    out_pos[7, 2] = pz + rot[2, 0] * fx + rot[2, 1] * fy + rot[2, 2] * fz
    _mat3_mul_into(rot, frot, scratch)
    out_rot[7] = scratch


def fk_frames(q, jpos, jrot, jaxes, jtypes, fpos, frot):
    out_pos = np.empty((8, 3))
    out_rot = np.empty((8, 3, 3))
    axes_world = np.empty((7, 3))
    _fk_frames_core(np.asarray(q, dtype=float), jpos, jrot, jaxes, jtypes,
                    fpos, frot, out_pos, out_rot, axes_world)
    return out_pos, out_rot, axes_world


@njit(cache=True)
def _fk_frames_batch_core(Q, jpos, jrot, jaxes, jtypes, fpos, frot, out_pos, out_rot):
    axes_world = np.empty((7, 3))
    for m in range(Q.shape[0]):
        _fk_frames_core(Q[m], jpos, jrot, jaxes, jtypes, fpos, frot,
                        out_pos[m], out_rot[m], axes_world)


def fk_frames_batch(Q, jpos, jrot, jaxes, jtypes, fpos, frot):
    Q = np.ascontiguousarray(Q, dtype=float)
    m = Q.shape[0]
    out_pos = np.empty((m, 8, 3))
    out_rot = np.empty((m, 8, 3, 3))
    _fk_frames_batch_core(Q, jpos, jrot, jaxes, jtypes, fpos, frot, out_pos, out_rot)
    return out_pos, out_rot


@njit(cache=True)
def _seg_seg_one(p0, p1, q0, q1):
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * r[0] + d2[1] * r[1] + d2[2] * r[2]
    c = d1[0] * r[0] + d1[1] * r[1] + d1[2] * r[2]
    b = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
    denom = a * e - b * b
    eps = 1e-15
    if a <= eps:
        s = 0.0
        t = 0.0 if e <= eps else min(max(f / e, 0.0), 1.0)
    else:
        if denom > eps:
            s = min(max((b * f - c * e) / denom, 0.0), 1.0)
        else:
            s = 0.0
        if e > eps:
            t = (b * s + f) / e
        else:
            t = 0.0
        if t < 0.0 or t > 1.0:
            t = min(max(t, 0.0), 1.0)
            s = min(max((t * b - c) / a, 0.0), 1.0)
    dx = (p0[0] + s * d1[0]) - (q0[0] + t * d2[0])
    dy = (p0[1] + s * d1[1]) - (q0[1] + t * d2[1])
    dz = (p0[2] + s * d1[2]) - (q0[2] + t * d2[2])
    return np.sqrt(dx * dx + dy * dy + dz * dz)


@njit(cache=True)
def _seg_seg_dist_core(P0, P1, Q0, Q1, out):
    for m in range(P0.shape[0]):
        out[m] = _seg_seg_one(P0[m], P1[m], Q0[m], Q1[m])


def seg_seg_dist(P0, P1, Q0, Q1):
    P0 = np.ascontiguousarray(np.atleast_2d(P0), dtype=float)
    P1 = np.ascontiguousarray(np.atleast_2d(P1), dtype=float)
    Q0 = np.ascontiguousarray(np.atleast_2d(Q0), dtype=float)
    Q1 = np.ascontiguousarray(np.atleast_2d(Q1), dtype=float)
    out = np.empty(P0.shape[0])
    _seg_seg_dist_core(P0, P1, Q0, Q1, out)
    return out


@njit(cache=True, inline="always")
def _box_sdf_local_one(px, py, pz, hx, hy, hz):
    qx = abs(px) - hx
    qy = abs(py) - hy
    qz = abs(pz) - hz
    ox = qx if qx > 0.0 else 0.0
    oy = qy if qy > 0.0 else 0.0
    oz = qz if qz > 0.0 else 0.0
    outside = np.sqrt(ox * ox + oy * oy + oz * oz)
    m = qx
    if qy > m:
        m = qy
    if qz > m:
        m = qz
    inside = m if m < 0.0 else 0.0
    return outside + inside


@njit(cache=True, inline="always")
def _cyl_sdf_local_one(px, py, pz, rad, hl):
    dr = np.sqrt(px * px + py * py) - rad
    dz = abs(pz) - hl
    odr = dr if dr > 0.0 else 0.0
    odz = dz if dz > 0.0 else 0.0
    outside = np.sqrt(odr * odr + odz * odz)
    m = dr if dr > dz else dz
    inside = m if m < 0.0 else 0.0
    return outside + inside


@njit(cache=True)
def _seg_box_one(a, b, h):
    d = b - a
    lo = 0.0
    hi = 1.0
    for _ in range(_TERNARY_ITERS):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        g1 = _box_sdf_local_one(a[0] + m1 * d[0], a[1] + m1 * d[1], a[2] + m1 * d[2],
                                h[0], h[1], h[2])
        g2 = _box_sdf_local_one(a[0] + m2 * d[0], a[1] + m2 * d[1], a[2] + m2 * d[2],
                                h[0], h[1], h[2])
        if g1 <= g2:
            hi = m2
        else:
            lo = m1
    mid = 0.5 * (lo + hi)
    g = _box_sdf_local_one(a[0] + mid * d[0], a[1] + mid * d[1], a[2] + mid * d[2],
                           h[0], h[1], h[2])
    g0 = _box_sdf_local_one(a[0], a[1], a[2], h[0], h[1], h[2])
    g1 = _box_sdf_local_one(b[0], b[1], b[2], h[0], h[1], h[2])
    if g0 < g:
        g = g0
    if g1 < g:
        g = g1
    return g


@njit(cache=True)
def _seg_box_sdf_core(P0, P1, C, RT, H, out):
    for m in range(P0.shape[0]):
        a = RT[m] @ (P0[m] - C[m])
        b = RT[m] @ (P1[m] - C[m])
        out[m] = _seg_box_one(a, b, H[m])


def seg_box_sdf(P0, P1, C, RT, H):
    P0 = np.ascontiguousarray(P0, dtype=float)
    P1 = np.ascontiguousarray(P1, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    RT = np.ascontiguousarray(RT, dtype=float)
    H = np.ascontiguousarray(H, dtype=float)
    out = np.empty(P0.shape[0])
    _seg_box_sdf_core(P0, P1, C, RT, H, out)
    return out


@njit(cache=True)
def _caps_boxes_core(A, B, RAD, bc, brt, bh, bbound, out):
    r = A.shape[0]
    nb = bc.shape[0]
    for i in range(r):
        ax, ay, az = A[i, 0], A[i, 1], A[i, 2]
        bx, by, bz = B[i, 0], B[i, 1], B[i, 2]
        mx, my, mz = 0.5 * (ax + bx), 0.5 * (ay + by), 0.5 * (az + bz)
        dx, dy, dz = bx - ax, by - ay, bz - az
        half = 0.5 * np.sqrt(dx * dx + dy * dy + dz * dz)
        rad = RAD[i]
        for j in range(nb):
            # bounding-sphere lower bound on the clearance
            cx = mx - bc[j, 0]
            cy = my - bc[j, 1]
            cz = mz - bc[j, 2]
            lo = np.sqrt(cx * cx + cy * cy + cz * cz) - half - bbound[j] - rad
            if lo > 0.0:
                out[i, j] = lo
                continue
            # midpoint Lipschitz bound in the box frame
            px = brt[j, 0, 0] * cx + brt[j, 0, 1] * cy + brt[j, 0, 2] * cz
            py = brt[j, 1, 0] * cx + brt[j, 1, 1] * cy + brt[j, 1, 2] * cz
            pz = brt[j, 2, 0] * cx + brt[j, 2, 1] * cy + brt[j, 2, 2] * cz
            g_mid = _box_sdf_local_one(px, py, pz, bh[j, 0], bh[j, 1], bh[j, 2])
            lo = g_mid - half - rad
            if lo > 0.0:
                out[i, j] = lo
                continue
            a_l = brt[j] @ (A[i] - bc[j])
            b_l = brt[j] @ (B[i] - bc[j])
            out[i, j] = _seg_box_one(a_l, b_l, bh[j]) - rad


def capsules_vs_boxes(A, B, RAD, box_c, box_rt, box_h):
    """Clearance matrix (R, NB): capsule axes [A,B] with radii RAD against
    oriented boxes. Culled far pairs carry a conservative lower bound."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    RAD = np.ascontiguousarray(RAD, dtype=float)
    bbound = np.sqrt((box_h * box_h).sum(axis=1))
    out = np.empty((A.shape[0], box_c.shape[0]))
    _caps_boxes_core(A, B, RAD, np.ascontiguousarray(box_c, dtype=float),
                     np.ascontiguousarray(box_rt, dtype=float),
                     np.ascontiguousarray(box_h, dtype=float), bbound, out)
    return out


@njit(cache=True)
def _caps_cyls_core(A, B, RAD, cc, crt, cr, chl, cbound, out):
    r = A.shape[0]
    nc = cc.shape[0]
    for i in range(r):
        mx = 0.5 * (A[i, 0] + B[i, 0])
        my = 0.5 * (A[i, 1] + B[i, 1])
        mz = 0.5 * (A[i, 2] + B[i, 2])
        dx = B[i, 0] - A[i, 0]
        dy = B[i, 1] - A[i, 1]
        dz = B[i, 2] - A[i, 2]
        half = 0.5 * np.sqrt(dx * dx + dy * dy + dz * dz)
        rad = RAD[i]
        for j in range(nc):
            cx = mx - cc[j, 0]
            cy = my - cc[j, 1]
            cz = mz - cc[j, 2]
            lo = np.sqrt(cx * cx + cy * cy + cz * cz) - half - cbound[j] - rad
            if lo > 0.0:
                out[i, j] = lo
                continue
            px = crt[j, 0, 0] * cx + crt[j, 0, 1] * cy + crt[j, 0, 2] * cz
            py = crt[j, 1, 0] * cx + crt[j, 1, 1] * cy + crt[j, 1, 2] * cz
            pz = crt[j, 2, 0] * cx + crt[j, 2, 1] * cy + crt[j, 2, 2] * cz
            g_mid = _cyl_sdf_local_one(px, py, pz, cr[j], chl[j])
            lo = g_mid - half - rad
            if lo > 0.0:
                out[i, j] = lo
                continue
            a_l = crt[j] @ (A[i] - cc[j])
            b_l = crt[j] @ (B[i] - cc[j])
            out[i, j] = _seg_cyl_one(a_l, b_l, cr[j], chl[j]) - rad


def capsules_vs_cylinders(A, B, RAD, cyl_c, cyl_rt, cyl_r, cyl_hl):
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    RAD = np.ascontiguousarray(RAD, dtype=float)
    cbound = np.hypot(cyl_r, cyl_hl)
    out = np.empty((A.shape[0], cyl_c.shape[0]))
    _caps_cyls_core(A, B, RAD, np.ascontiguousarray(cyl_c, dtype=float),
                    np.ascontiguousarray(cyl_rt, dtype=float),
                    np.ascontiguousarray(cyl_r, dtype=float),
                    np.ascontiguousarray(cyl_hl, dtype=float), cbound, out)
    return out


_DEG = 180.0 / np.pi
_RAD = np.pi / 180.0


@njit(cache=True)
def _tracking_core(desired, q0, corr0, lo, hi, out):
    q = q0.copy()
    corr = corr0.copy()
    n = desired.shape[0]
    for k in range(n):
        # integrate last cycle's correction, saturate at limits
        for i in range(7):
            v = q[i] + corr[i]
            if v < lo[i]:
                v = lo[i]
            elif v > hi[i]:
                v = hi[i]
            q[i] = v
            out[k, i] = v
        # controller reports actuals at wire resolution (micro mm / deg)
        rep0 = np.rint(q[0] * 1e3 * 1e6) * 1e-6
        c = (desired[k, 0] - rep0 * 1e-3) * 1e3
        if c > 1.0:
            c = 1.0
        elif c < -1.0:
            c = -1.0
        corr[0] = np.rint(c * 1e6) * 1e-6 * 1e-3
        for i in range(1, 7):
            rep = np.rint(q[i] * _DEG * 1e6) * 1e-6
            c = (desired[k, i] - rep * _RAD) * _DEG
            if c > 0.1:
                c = 0.1
            elif c < -0.1:
                c = -0.1
            corr[i] = np.rint(c * 1e6) * 1e-6 * _RAD
    return q, corr


def run_tracking_cycles(desired, q0, corr0, lo, hi):
    """Loopback servo recurrence over a whole phase: per cycle, integrate the
    pending correction, report quantized actuals, compute the next clamped
    correction toward the desired setpoint. Returns (q per cycle, final q,
    pending correction)."""
    desired = np.ascontiguousarray(desired, dtype=float)
    out = np.empty_like(desired)
    q, corr = _tracking_core(desired, np.ascontiguousarray(q0, dtype=float),
                             np.ascontiguousarray(corr0, dtype=float),
                             lo, hi, out)
    return out, q, corr


@njit(cache=True)
def _seg_cyl_one(a, b, rad, hl):
    d = b - a
    lo = 0.0
    hi = 1.0
    for _ in range(_TERNARY_ITERS):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        g1 = _cyl_sdf_local_one(a[0] + m1 * d[0], a[1] + m1 * d[1], a[2] + m1 * d[2], rad, hl)
        g2 = _cyl_sdf_local_one(a[0] + m2 * d[0], a[1] + m2 * d[1], a[2] + m2 * d[2], rad, hl)
        if g1 <= g2:
            hi = m2
        else:
            lo = m1
    mid = 0.5 * (lo + hi)
    g = _cyl_sdf_local_one(a[0] + mid * d[0], a[1] + mid * d[1], a[2] + mid * d[2], rad, hl)
    g0 = _cyl_sdf_local_one(a[0], a[1], a[2], rad, hl)
    g1 = _cyl_sdf_local_one(b[0], b[1], b[2], rad, hl)
    if g0 < g:
        g = g0
    if g1 < g:
        g = g1
    return g


@njit(cache=True)
def _seg_cyl_sdf_core(P0, P1, C, RT, RAD, HL, out):
    for m in range(P0.shape[0]):
        a = RT[m] @ (P0[m] - C[m])
        b = RT[m] @ (P1[m] - C[m])
        out[m] = _seg_cyl_one(a, b, RAD[m], HL[m])


def seg_cyl_sdf(P0, P1, C, RT, RAD, HL):
    P0 = np.ascontiguousarray(P0, dtype=float)
    P1 = np.ascontiguousarray(P1, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    RT = np.ascontiguousarray(RT, dtype=float)
    RAD = np.ascontiguousarray(RAD, dtype=float)
    HL = np.ascontiguousarray(HL, dtype=float)
    out = np.empty(P0.shape[0])
    _seg_cyl_sdf_core(P0, P1, C, RT, RAD, HL, out)
    return out
