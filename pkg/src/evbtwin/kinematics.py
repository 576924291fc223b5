"""Kinematics of the 7-DoF cell robot: prismatic track + 6R arm, hanging mount.

Joint states are plain float arrays of shape (7,): index 0 is the track
coordinate in meters, 1..6 the revolute angles in radians. The kinematic
chain is: world -> mount -> prismatic track -> six (fixed transform, revolute
axis) links -> flange offset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import SchemaError, UnreachableError
from .geometry import Pose6D, mat_to_quat, quat_angle, quat_to_mat

NUM_JOINTS = 7


@dataclass(frozen=True)
class CapsuleSpec:
    """Collision capsule rigidly attached to chain frame `frame` (0..7, 7=flange)."""

    name: str
    frame: int
    a_local: np.ndarray
    b_local: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class RobotModel:
    name: str
    track_axis: np.ndarray          # unit, in mount frame (mount is axis-aligned to world here)
    joint_pos: np.ndarray           # (7,3) fixed offsets before each joint
    joint_rot: np.ndarray           # (7,3,3)
    joint_axes: np.ndarray          # (7,3) unit, local
    joint_types: np.ndarray         # (7,) 0=prismatic, 1=revolute
    limits_lo: np.ndarray           # (7,) m / rad
    limits_hi: np.ndarray
    vel_limits: np.ndarray          # (7,) m/s / rad/s
    flange_pos: np.ndarray
    flange_rot: np.ndarray
    capsules: tuple = field(default=())
    self_check_pairs: tuple = field(default=())

    @property
    def flange_offset(self) -> Pose6D:
        return Pose6D(self.flange_pos, mat_to_quat(self.flange_rot))

    def to_dict(self) -> dict:
        """Chain description for clients that animate the robot (consoles)."""
        return {
            "name": self.name,
            "joints": [{
                "position": [float(v) for v in self.joint_pos[i]],
                "quaternion": [float(v) for v in mat_to_quat(self.joint_rot[i])],
                "axis": [float(v) for v in self.joint_axes[i]],
                "type": "prismatic" if self.joint_types[i] == 0 else "revolute",
            } for i in range(NUM_JOINTS)],
            "flange_offset": self.flange_offset.to_dict(),
            "limits": [[float(a), float(b)]
                       for a, b in zip(self.limits_lo, self.limits_hi)],
            "capsules": [{
                "name": c.name, "frame": c.frame,
                "a": [float(v) for v in c.a_local],
                "b": [float(v) for v in c.b_local],
                "radius": c.radius,
            } for c in self.capsules],
        }


def _ro(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def load_robot(source) -> RobotModel:
    """Load a robot fixture from a JSON path, file object, or parsed dict."""
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)

    try:
        track_axis = np.array(doc["track_axis"], dtype=float)
        track_lim = doc["track_limits_m"]
        links = doc["links"]
        vel = doc["vel_limits"]
    except KeyError as exc:
        raise SchemaError(f"robot fixture missing field {exc}") from exc
    if len(links) != 6:
        raise SchemaError(f"expected 6 revolute links, got {len(links)}")
    n = np.linalg.norm(track_axis)
    if abs(n - 1.0) > 1e-9:
        raise SchemaError("track_axis must be a unit vector")

    mount = doc.get("mount", {"position": [0, 0, 0], "quaternion": [1, 0, 0, 0]})

    jpos = np.zeros((7, 3))
    jrot = np.zeros((7, 3, 3))
    jaxes = np.zeros((7, 3))
    jtypes = np.zeros(7, dtype=np.int64)
    lo = np.zeros(7)
    hi = np.zeros(7)
    vlim = np.zeros(7)

    jpos[0] = mount["position"]
    jrot[0] = quat_to_mat(np.array(mount["quaternion"], dtype=float))
    jaxes[0] = track_axis
    jtypes[0] = 0
    lo[0], hi[0] = float(track_lim[0]), float(track_lim[1])
    vlim[0] = float(vel["track_m_s"])

    for i, link in enumerate(links, start=1):
        q = np.array(link["quaternion"], dtype=float)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise SchemaError(f"link {i} quaternion not unit norm")
        axis = np.array(link["axis"], dtype=float)
        na = np.linalg.norm(axis)
        if abs(na - 1.0) > 1e-9:
            raise SchemaError(f"link {i} axis not unit")
        jpos[i] = link["position"]
        jrot[i] = quat_to_mat(q)
        jaxes[i] = axis
        jtypes[i] = 1
        lo[i], hi[i] = float(link["limits_rad"][0]), float(link["limits_rad"][1])
        vlim[i] = float(vel["joints_rad_s"][i - 1])

    if np.any(lo >= hi):
        raise SchemaError("joint limits must satisfy min < max")

    fl = doc.get("flange_offset", {"position": [0, 0, 0], "quaternion": [1, 0, 0, 0]})
    fpos = np.array(fl["position"], dtype=float)
    frot = quat_to_mat(np.array(fl["quaternion"], dtype=float))

    capsules = []
    for c in doc.get("collision", {}).get("capsules", []):
        capsules.append(CapsuleSpec(c["name"], int(c["frame"]),
                                    _ro(c["a"]), _ro(c["b"]), float(c["radius"])))
    pairs = tuple(tuple(p) for p in doc.get("collision", {}).get("self_pairs", []))

    return RobotModel(
        name=doc.get("name", "robot"),
        track_axis=_ro(track_axis),
        joint_pos=_ro(jpos), joint_rot=_ro(jrot), joint_axes=_ro(jaxes),
        joint_types=_ro(jtypes).astype(np.int64),
        limits_lo=_ro(lo), limits_hi=_ro(hi), vel_limits=_ro(vlim),
        flange_pos=_ro(fpos), flange_rot=_ro(frot),
        capsules=tuple(capsules), self_check_pairs=pairs,
    )


def clamp_to_limits(model: RobotModel, q: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(q, dtype=float), model.limits_lo, model.limits_hi)


def within_limits(model: RobotModel, q: np.ndarray, tol: float = 1e-12) -> bool:
    q = np.asarray(q, dtype=float)
    return bool(np.all(q >= model.limits_lo - tol) and np.all(q <= model.limits_hi + tol))


def fk_link_frames(model: RobotModel, q: np.ndarray):
    """All chain frames: positions (8,3), rotations (8,3,3), world joint axes (7,3)."""
    return kernels.fk_frames(np.asarray(q, dtype=float),
                             model.joint_pos, model.joint_rot, model.joint_axes,
                             model.joint_types, model.flange_pos, model.flange_rot)


def fk_link_frames_batch(model: RobotModel, Q: np.ndarray):
    return kernels.fk_frames_batch(np.asarray(Q, dtype=float),
                                   model.joint_pos, model.joint_rot, model.joint_axes,
                                   model.joint_types, model.flange_pos, model.flange_rot)


def forward_kinematics(model: RobotModel, q: np.ndarray) -> Pose6D:
    """Flange pose in the world frame. Pure; defined for out-of-limit q too."""
    pos, rot, _ = fk_link_frames(model, q)
    return Pose6D(pos[7], mat_to_quat(rot[7]))


def jacobian(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """Geometric Jacobian of the flange, 6x7 (linear rows 0..2, angular 3..5)."""
    pos, _, axes = fk_link_frames(model, q)
    p_f = pos[7]
    J = np.zeros((6, 7))
    for i in range(7):
        z = axes[i]
        if model.joint_types[i] == 0:
            J[0:3, i] = z
        else:
            J[0:3, i] = np.cross(z, p_f - pos[i])
            J[3:6, i] = z
    return J


def _pose_error(target: Pose6D, pos: np.ndarray, rot: np.ndarray):
    """Position and axis-angle orientation error twist from current to target."""
    e = np.empty(6)
    e[0:3] = target.position - pos
    r_err = target.rotation_matrix() @ rot.T
    # rotation vector of r_err
    c = (np.trace(r_err) - 1.0) * 0.5
    c = min(1.0, max(-1.0, c))
    angle = np.arccos(c)
    if angle < 1e-12:
        e[3:6] = 0.0
    else:
        axis = np.array([r_err[2, 1] - r_err[1, 2],
                         r_err[0, 2] - r_err[2, 0],
                         r_err[1, 0] - r_err[0, 1]])
        axis_norm = np.linalg.norm(axis)
        if axis_norm < 1e-12:
            # angle ~ pi: extract axis from the diagonal
            k = int(np.argmax(np.diag(r_err)))
            ax = np.sqrt(max(0.0, (r_err[k, k] + 1.0) * 0.5))
            axis = r_err[:, k] / (2.0 * ax)
            axis[k] = ax
            e[3:6] = angle * axis / np.linalg.norm(axis)
        else:
            e[3:6] = angle * axis / axis_norm
    return e


@dataclass
class IKOptions:
    tol_pos: float = 1e-6
    tol_rot: float = 1e-6
    max_iters: int = 200
    damping: float = 0.05
    step_clamp_rad: float = 0.2
    step_clamp_m: float = 0.05
    track_weight: float = 0.5   # null-space pull of the track toward the seed


def _clamped_step(model: RobotModel, q: np.ndarray, dq: np.ndarray,
                  opts: "IKOptions") -> np.ndarray:
    """One step of dq, direction-preserving speed clamp, then joint limits."""
    scale = 1.0
    if abs(dq[0]) > opts.step_clamp_m:
        scale = min(scale, opts.step_clamp_m / abs(dq[0]))
    m_rev = np.max(np.abs(dq[1:]))
    if m_rev > opts.step_clamp_rad:
        scale = min(scale, opts.step_clamp_rad / m_rev)
    return clamp_to_limits(model, q + scale * dq)


@dataclass
class IKResult:
    q: np.ndarray
    iterations: int
    pos_err: float
    rot_err: float
    residual_log: list


def inverse_kinematics(model: RobotModel, target: Pose6D, seed: np.ndarray,
                       opts: IKOptions | None = None) -> IKResult:
    """Damped-least-squares IK to a flange pose.

    Deterministic (no restarts). The redundant track coordinate is pulled
    toward its seed value through the null space, so solutions prefer minimal
    carriage travel. Raises UnreachableError when max_iters is exhausted; the
    exception carries the best residual and a non-increasing residual log.
    """
    if opts is None:
        opts = IKOptions()
    q = clamp_to_limits(model, seed)
    lam2 = opts.damping * opts.damping
    eye6 = np.eye(6)

    best = np.inf
    best_pos = np.inf
    best_rot = np.inf
    ns_active = True
    log = []

    for it in range(opts.max_iters + 1):
        pos, rot, axes = fk_link_frames(model, q)
        e = _pose_error(target, pos[7], rot[7])
        pos_err = float(np.linalg.norm(e[0:3]))
        rot_err = quat_angle(target.orientation, mat_to_quat(rot[7]))
        combined = pos_err + rot_err
        if combined < best:
            best = combined
            best_pos, best_rot = pos_err, rot_err
        log.append(best)
        if pos_err < opts.tol_pos and rot_err < opts.tol_rot:
            return IKResult(q=q, iterations=it, pos_err=pos_err, rot_err=rot_err,
                            residual_log=log)
        if it == opts.max_iters:
            break

        J = np.zeros((6, 7))
        p_f = pos[7]
        for i in range(7):
            z = axes[i]
            if model.joint_types[i] == 0:
                J[0:3, i] = z
            else:
                J[0:3, i] = np.cross(z, p_f - pos[i])
                J[3:6, i] = z

        # Fixed damping stalls just above tol near singular directions
        # (per-iteration contraction ~ lam^2/(sigma^2+lam^2)), so the damping
        # tracks the error once the solve is in its terminal phase.
        combined_err = pos_err + rot_err
        lam_eff2 = lam2 if combined_err >= 5e-3 else max(2e-4, combined_err) ** 2

        jjt = J @ J.T + lam_eff2 * eye6
        y = np.linalg.solve(jjt, e)
        dq = J.T @ y
        # null-space pull: keep the track near the seed. The damped projector
        # leaks ~lambda^2 of the pull into task space, so latch it off once
        # the task error gets small or it stalls convergence right at tol.
        if ns_active and (pos_err < 100.0 * opts.tol_pos and rot_err < 100.0 * opts.tol_rot):
            ns_active = False
        if ns_active:
            z_ns = np.zeros(7)
            z_ns[0] = opts.track_weight * (seed[0] - q[0])
            dq += z_ns - J.T @ np.linalg.solve(jjt, J @ z_ns)

        # active-set pass: joints the step would pin at a limit cannot carry
        # their share of the correction; re-solve with those columns frozen so
        # the free joints absorb the error instead of stalling at the boundary.
        q_try = _clamped_step(model, q, dq, opts)
        pinned = ((q_try <= model.limits_lo + 1e-12) & (dq < 0)) | \
                 ((q_try >= model.limits_hi - 1e-12) & (dq > 0))
        if np.any(pinned) and not np.all(pinned):
            Jf = J.copy()
            Jf[:, pinned] = 0.0
            dq2 = Jf.T @ np.linalg.solve(Jf @ Jf.T + lam_eff2 * eye6, e)
            dq2[pinned] = dq[pinned]   # still let them travel to the limit
            q = _clamped_step(model, q, dq2, opts)
        else:
            q = q_try

    raise UnreachableError(
        f"IK did not converge in {opts.max_iters} iterations "
        f"(best residual {best_pos:.3e} m / {best_rot:.3e} rad)",
        best_pos_err=best_pos, best_rot_err=best_rot, residual_log=log)


def random_state(model: RobotModel, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(model.limits_lo, model.limits_hi)
