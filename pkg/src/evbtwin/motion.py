"""Collision checking and collision-free motion planning.

Robot links are capsules (declared in the robot fixture), tools are capsules
along the tool axis, obstacles are oriented boxes and cylinders. Clearances
come from exact convex signed-distance kernels, so the checker never misses a
true intersection; a verdict is "colliding" iff some pair clearance < 0.

Continuous checks are discretized at a fixed per-coordinate resolution
(0.005 m track / 0.01 rad joints). Planning is direct interpolation when the
straight segment is free, otherwise a seeded bidirectional RRT with shortcut
smoothing; identical inputs and seed give byte-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import (CollisionOnPathError, GoalInCollisionError,
                     PlanningTimeoutError, StartInCollisionError,
                     UnreachableError)
from .geometry import Pose6D
from .kinematics import (RobotModel, clamp_to_limits, fk_link_frames,
                         fk_link_frames_batch, forward_kinematics,
                         inverse_kinematics, within_limits)
from .scene import CompState, Scene, ToolSpec

DEFAULT_RESOLUTION = np.array([0.005, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01])
# weighted joint-space metric: 1 m of track counts as 2 rad (resolution ratio)
METRIC_WEIGHTS = np.array([2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0])

RRT_MAX_ITERS = 10_000
RRT_EXTEND = 0.35
SHORTCUT_ATTEMPTS = 100


@dataclass
class CollisionReport:
    colliding: bool
    pairs: list
    min_clearance_m: float
    sample_index: int | None = None
    sample_q: np.ndarray | None = None


@dataclass(frozen=True)
class Trajectory:
    waypoints: np.ndarray               # (N, 7)
    resolution: np.ndarray = field(default_factory=lambda: DEFAULT_RESOLUTION.copy())

    def __len__(self):
        return len(self.waypoints)

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]


@dataclass(frozen=True)
class TimedTrajectory:
    waypoints: np.ndarray               # (N, 7)
    times: np.ndarray                   # (N,) seconds, monotone, starts at 0

    @property
    def duration_s(self) -> float:
        return float(self.times[-1]) if len(self.times) else 0.0

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    def sample(self, t: float) -> np.ndarray:
        """Linear interpolation at time t (clamped to the time range)."""
        times = self.times
        if t <= times[0]:
            return self.waypoints[0].copy()
        if t >= times[-1]:
            return self.waypoints[-1].copy()
        i = int(np.searchsorted(times, t, side="right")) - 1
        t0, t1 = times[i], times[i + 1]
        if t1 <= t0:
            return self.waypoints[i + 1].copy()
        a = (t - t0) / (t1 - t0)
        return (1.0 - a) * self.waypoints[i] + a * self.waypoints[i + 1]


@dataclass(frozen=True)
class StaticGeometry:
    """Obstacles compiled to kernel-ready arrays (world frame)."""

    box_names: tuple
    box_c: np.ndarray       # (B,3)
    box_rt: np.ndarray      # (B,3,3) world->box
    box_h: np.ndarray       # (B,3)
    cyl_names: tuple
    cyl_c: np.ndarray
    cyl_rt: np.ndarray
    cyl_r: np.ndarray
    cyl_hl: np.ndarray


def compile_obstacles(scene: Scene, ignore_ids=()) -> StaticGeometry:
    """Collision geometry: statics plus components that are not Removed."""
    ignore = set(ignore_ids)
    box_names, box_c, box_rt, box_h = [], [], [], []
    cyl_names, cyl_c, cyl_rt, cyl_r, cyl_hl = [], [], [], [], []

    def add(name, shape, pose: Pose6D):
        rot = pose.rotation_matrix()
        if shape.kind == "box":
            box_names.append(name)
            box_c.append(pose.position)
            box_rt.append(rot.T)
            box_h.append(shape.half_extents())
        else:
            cyl_names.append(name)
            cyl_c.append(pose.position)
            cyl_rt.append(rot.T)
            cyl_r.append(shape.radius)
            cyl_hl.append(shape.length * 0.5)

    for o in scene.statics:
        if o.id in ignore:
            continue
        add(o.id, o.shape, scene.frame_pose(o.frame).compose(o.pose))
    base = scene.frame_pose(scene.evb_base_frame)
    for c in scene.components:
        if c.id in ignore or c.state is CompState.REMOVED:
            continue
        add(c.id, c.shape, base.compose(c.local_pose))

    return StaticGeometry(
        box_names=tuple(box_names),
        box_c=np.asarray(box_c, dtype=float).reshape(-1, 3),
        box_rt=np.asarray(box_rt, dtype=float).reshape(-1, 3, 3),
        box_h=np.asarray(box_h, dtype=float).reshape(-1, 3),
        cyl_names=tuple(cyl_names),
        cyl_c=np.asarray(cyl_c, dtype=float).reshape(-1, 3),
        cyl_rt=np.asarray(cyl_rt, dtype=float).reshape(-1, 3, 3),
        cyl_r=np.asarray(cyl_r, dtype=float),
        cyl_hl=np.asarray(cyl_hl, dtype=float),
    )


# tool capsule is rigid on the flange; these neighbours are never tested
# against it (permanently adjacent bodies)
_TOOL_ADJACENT = ("wrist", "flange_hub")


@lru_cache(maxsize=32)
def _capsule_table(model: RobotModel, tool: ToolSpec | None):
    """Per-capsule (frame index, local a, local b, radius, name) arrays."""
    frames = [c.frame for c in model.capsules]
    a_loc = [c.a_local for c in model.capsules]
    b_loc = [c.b_local for c in model.capsules]
    radii = [c.radius for c in model.capsules]
    names = [c.name for c in model.capsules]
    if tool is not None:
        frames.append(7)
        a_loc.append(tool.capsule_a)
        b_loc.append(tool.capsule_b)
        radii.append(tool.capsule_radius)
        names.append("tool")
    return (np.array(frames), np.array(a_loc, dtype=float),
            np.array(b_loc, dtype=float), np.array(radii, dtype=float),
            tuple(names))


def _capsule_segments(fk_pos, fk_rot, frames, a_loc, b_loc):
    """World endpoints for capsules over a batch: fk_pos (M,8,3) -> (M,C,3)."""
    fr = fk_rot[:, frames]                      # (M,C,3,3)
    fp = fk_pos[:, frames]                      # (M,C,3)
    A = fp + np.einsum("mcij,cj->mci", fr, a_loc)
    B = fp + np.einsum("mcij,cj->mci", fr, b_loc)
    return A, B


def _self_pair_indices(model: RobotModel, names):
    idx = {n: i for i, n in enumerate(names)}
    return [(idx[a], idx[b]) for a, b in model.self_check_pairs]


def _tool_pair_indices(names):
    if "tool" not in names:
        return []
    t = names.index("tool")
    return [(i, t) for i, n in enumerate(names)
            if n != "tool" and n not in _TOOL_ADJACENT]


def _clearance_rows(geom: StaticGeometry, A, B, radii):
    """Clearances of every capsule against every obstacle.

    A, B: (M,C,3); returns (box (M,C,Bn), cyl (M,C,Cn)) clearance arrays.
    Far pairs carry a conservative lower bound instead of the exact clearance
    (the kernels cull internally; the colliding verdict is never affected).
    """
    m, c, _ = A.shape
    nb = len(geom.box_names)
    nc = len(geom.cyl_names)
    A_flat = A.reshape(-1, 3)
    B_flat = B.reshape(-1, 3)
    rad_flat = np.tile(radii, m)
    box_cl = np.empty((m, c, 0))
    cyl_cl = np.empty((m, c, 0))
    if nb:
        box_cl = kernels.capsules_vs_boxes(
            A_flat, B_flat, rad_flat, geom.box_c, geom.box_rt,
            geom.box_h).reshape(m, c, nb)
    if nc:
        cyl_cl = kernels.capsules_vs_cylinders(
            A_flat, B_flat, rad_flat, geom.cyl_c, geom.cyl_rt, geom.cyl_r,
            geom.cyl_hl).reshape(m, c, nc)
    return box_cl, cyl_cl


def _pair_clearances(pairs, A, B, radii):
    """Capsule-capsule clearances for index pairs over a batch -> (M,P)."""
    if not pairs:
        return np.empty((A.shape[0], 0))
    i = np.array([p[0] for p in pairs])
    j = np.array([p[1] for p in pairs])
    m = A.shape[0]
    p = len(pairs)
    d = kernels.seg_seg_dist(A[:, i].reshape(-1, 3), B[:, i].reshape(-1, 3),
                             A[:, j].reshape(-1, 3), B[:, j].reshape(-1, 3))
    return d.reshape(m, p) - (radii[i] + radii[j])[None, :]


def check_states(geom: StaticGeometry, model: RobotModel, Q: np.ndarray,
                 tool: ToolSpec | None = None):
    """Batched verdicts: (colliding (M,), min_clearance (M,))."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    frames, a_loc, b_loc, radii, names = _capsule_table(model, tool)
    fk_pos, fk_rot = fk_link_frames_batch(model, Q)
    A, B = _capsule_segments(fk_pos, fk_rot, frames, a_loc, b_loc)
    box_cl, cyl_cl = _clearance_rows(geom, A, B, radii)
    pair_idx = _self_pair_indices(model, names) + _tool_pair_indices(names)
    pair_cl = _pair_clearances(pair_idx, A, B, radii)
    m = Q.shape[0]
    min_cl = np.full(m, np.inf)
    for arr in (box_cl.reshape(m, -1), cyl_cl.reshape(m, -1), pair_cl):
        if arr.shape[1]:
            min_cl = np.minimum(min_cl, arr.min(axis=1))
    return min_cl < 0.0, min_cl


def check_state(scene: Scene, model: RobotModel, q: np.ndarray,
                tool: ToolSpec | None = None, ignore_ids=(),
                geom: StaticGeometry | None = None) -> CollisionReport:
    """Full collision report for one configuration."""
    if geom is None:
        geom = compile_obstacles(scene, ignore_ids)
    q = np.asarray(q, dtype=float)
    frames, a_loc, b_loc, radii, names = _capsule_table(model, tool)
    fk_pos, fk_rot = fk_link_frames_batch(model, q[None, :])
    A, B = _capsule_segments(fk_pos, fk_rot, frames, a_loc, b_loc)
    box_cl, cyl_cl = _clearance_rows(geom, A, B, radii)
    pair_idx = _self_pair_indices(model, names) + _tool_pair_indices(names)
    pair_cl = _pair_clearances(pair_idx, A, B, radii)

    pairs = []
    min_cl = np.inf
    for ci in range(len(names)):
        for bi in range(len(geom.box_names)):
            cl = box_cl[0, ci, bi]
            min_cl = min(min_cl, cl)
            if cl < 0.0:
                pairs.append((names[ci], geom.box_names[bi]))
        for yi in range(len(geom.cyl_names)):
            cl = cyl_cl[0, ci, yi]
            min_cl = min(min_cl, cl)
            if cl < 0.0:
                pairs.append((names[ci], geom.cyl_names[yi]))
    for k, (i, j) in enumerate(pair_idx):
        cl = pair_cl[0, k]
        min_cl = min(min_cl, cl)
        if cl < 0.0:
            pairs.append((names[i], names[j]))
    return CollisionReport(colliding=bool(pairs), pairs=pairs,
                           min_clearance_m=float(min_cl))


def _segment_samples(q_a, q_b, resolution) -> np.ndarray:
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    delta = np.abs(q_b - q_a)
    with np.errstate(divide="ignore"):
        n = int(np.max(np.ceil(delta / resolution)))
    n = max(n, 1)
    ts = np.linspace(0.0, 1.0, n + 1)
    out = q_a + ts[:, None] * (q_b - q_a)
    out[0] = q_a   # exact endpoints: phase chaining compares bitwise
    out[-1] = q_b
    return out


def check_segment(scene: Scene, model: RobotModel, q_a, q_b, step: float = 1.0,
                  tool: ToolSpec | None = None, ignore_ids=(),
                  geom: StaticGeometry | None = None) -> CollisionReport:
    """Discretized continuous check of the straight joint-space segment.

    `step` scales the base resolution (0.005 m / 0.01 rad); the first
    colliding sample is reported.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    if geom is None:
        geom = compile_obstacles(scene, ignore_ids)
    samples = _segment_samples(q_a, q_b, DEFAULT_RESOLUTION * step)
    colliding, min_cl = check_states(geom, model, samples, tool)
    idx = np.nonzero(colliding)[0]
    if len(idx) == 0:
        return CollisionReport(colliding=False, pairs=[],
                               min_clearance_m=float(min_cl.min()))
    first = int(idx[0])
    rep = check_state(scene, model, samples[first], tool, geom=geom)
    rep.sample_index = first
    rep.sample_q = samples[first]
    rep.min_clearance_m = float(min_cl.min())
    return rep


def _weighted_dist(a, b) -> float:
    return float(np.linalg.norm((np.asarray(a) - np.asarray(b)) * METRIC_WEIGHTS))


def _densify(waypoints, resolution) -> np.ndarray:
    """Insert interpolated points so consecutive steps respect the resolution."""
    out = [np.asarray(waypoints[0], dtype=float)]
    for nxt in waypoints[1:]:
        seg = _segment_samples(out[-1], nxt, resolution)
        out.extend(seg[1:])
    return np.array(out)


def plan_joint(scene: Scene, model: RobotModel, q_start, q_goal, seed: int,
               tool: ToolSpec | None = None, ignore_ids=(),
               geom: StaticGeometry | None = None) -> Trajectory:
    """Collision-free joint-space trajectory from q_start to q_goal.

    Direct interpolation when the straight segment is free; otherwise a
    bidirectional RRT seeded from `seed`, followed by deterministic shortcut
    smoothing. Raises StartInCollision / GoalInCollision / PlanningTimeout.
    """
    q_start = np.asarray(q_start, dtype=float)
    q_goal = np.asarray(q_goal, dtype=float)
    if geom is None:
        geom = compile_obstacles(scene, ignore_ids)

    col, _ = check_states(geom, model, q_start[None, :], tool)
    if col[0]:
        raise StartInCollisionError(str(check_state(
            scene, model, q_start, tool, geom=geom).pairs))
    col, _ = check_states(geom, model, q_goal[None, :], tool)
    if col[0]:
        raise GoalInCollisionError(str(check_state(
            scene, model, q_goal, tool, geom=geom).pairs))
    if not within_limits(model, q_start) or not within_limits(model, q_goal):
        raise ValueError("endpoints must be within joint limits")

    if np.array_equal(q_start, q_goal):
        return Trajectory(waypoints=q_start[None, :].copy())

    def segment_free(a, b) -> bool:
        samples = _segment_samples(a, b, DEFAULT_RESOLUTION)
        colliding, _ = check_states(geom, model, samples, tool)
        return not bool(colliding.any())

    if segment_free(q_start, q_goal):
        return Trajectory(waypoints=_densify([q_start, q_goal], DEFAULT_RESOLUTION))

    rng = np.random.Generator(np.random.PCG64(seed))
    # bidirectional RRT over (nodes, parents)
    trees = ([(q_start, -1)], [(q_goal, -1)])

    def nearest(tree, q):
        pts = np.array([n[0] for n in tree])
        d = np.linalg.norm((pts - q) * METRIC_WEIGHTS, axis=1)
        return int(np.argmin(d))

    def steer(q_from, q_to):
        d = _weighted_dist(q_from, q_to)
        if d <= RRT_EXTEND:
            return np.asarray(q_to, dtype=float)
        return q_from + (q_to - q_from) * (RRT_EXTEND / d)

    def extend(tree, q_rand):
        """One RRT extend; returns index of the new node or None."""
        i = nearest(tree, q_rand)
        q_new = steer(tree[i][0], q_rand)
        if segment_free(tree[i][0], q_new):
            tree.append((q_new, i))
            return len(tree) - 1
        return None

    def connect(tree, q_target):
        """Greedy connect toward q_target; returns node index if reached."""
        while True:
            i = nearest(tree, q_target)
            q_new = steer(tree[i][0], q_target)
            if not segment_free(tree[i][0], q_new):
                return None
            tree.append((q_new, i))
            if np.allclose(q_new, q_target):
                return len(tree) - 1

    path = None
    a, b = 0, 1
    for _ in range(RRT_MAX_ITERS):
        q_rand = rng.uniform(model.limits_lo, model.limits_hi)
        new_idx = extend(trees[a], q_rand)
        if new_idx is not None:
            hit = connect(trees[b], trees[a][new_idx][0])
            if hit is not None:
                # stitch: tree a path (reversed) + tree b path
                pa = []
                i = new_idx
                while i >= 0:
                    pa.append(trees[a][i][0])
                    i = trees[a][i][1]
                pb = []
                i = hit
                while i >= 0:
                    pb.append(trees[b][i][0])
                    i = trees[b][i][1]
                if a == 0:
                    path = list(reversed(pa)) + pb[1:]
                else:
                    path = list(reversed(pb)) + pa[1:]
                break
        a, b = b, a
    if path is None:
        raise PlanningTimeoutError(
            f"no path after {RRT_MAX_ITERS} RRT iterations")

    # deterministic shortcut smoothing
    for _ in range(SHORTCUT_ATTEMPTS):
        if len(path) <= 2:
            break
        i = int(rng.integers(0, len(path) - 1))
        j = int(rng.integers(0, len(path) - 1))
        if abs(i - j) < 2:
            continue
        i, j = min(i, j), max(i, j)
        if segment_free(path[i], path[j]):
            path = path[:i + 1] + path[j:]
    return Trajectory(waypoints=_densify(path, DEFAULT_RESOLUTION))


def sample_pose_line(pose_a: Pose6D, pose_b: Pose6D, step_m: float):
    """Poses along the straight TCP line a->b: lerp position, slerp rotation."""
    dist = pose_a.pos_error(pose_b)
    ang = pose_a.rot_error(pose_b)
    n = max(int(np.ceil(dist / step_m)), int(np.ceil(ang / 0.02)), 1)
    if dist == 0.0 and ang == 0.0:
        return [pose_a]
    return [pose_a.interpolate(pose_b, t) for t in np.linspace(0.0, 1.0, n + 1)]


def plan_linear_cartesian(scene: Scene, model: RobotModel, pose_a: Pose6D,
                          pose_b: Pose6D, step_m: float, seed_q,
                          tool: ToolSpec | None = None,
                          tcp_offset: Pose6D | None = None,
                          ignore_ids=(),
                          geom: StaticGeometry | None = None) -> Trajectory:
    """Straight-line TCP move from pose_a to pose_b.

    Poses are TCP poses when tcp_offset is given, flange poses otherwise.
    Every sample is solved by IK seeded from the previous one and re-verified
    against the line at 1e-5 m; every waypoint is collision-checked.
    """
    if geom is None:
        geom = compile_obstacles(scene, ignore_ids)
    offset_inv = tcp_offset.inverse() if tcp_offset is not None else None

    def flange_target(tcp_pose: Pose6D) -> Pose6D:
        return tcp_pose.compose(offset_inv) if offset_inv is not None else tcp_pose

    targets = sample_pose_line(pose_a, pose_b, step_m)
    q = np.asarray(seed_q, dtype=float)
    waypoints = []
    for k, tcp_pose in enumerate(targets):
        try:
            res = inverse_kinematics(model, flange_target(tcp_pose), q)
        except UnreachableError as exc:
            raise UnreachableError(
                f"linear move unreachable at sample {k}/{len(targets) - 1}: {exc}",
                best_pos_err=exc.best_pos_err, best_rot_err=exc.best_rot_err,
                residual_log=exc.residual_log) from exc
        if waypoints and _weighted_dist(waypoints[-1], res.q) > 0.5:
            raise UnreachableError(
                f"IK branch jump at sample {k} of linear move")
        q = res.q
        fk = forward_kinematics(model, q)
        tcp_fk = fk.compose(tcp_offset) if tcp_offset is not None else fk
        if tcp_fk.pos_error(tcp_pose) > 1e-5:
            raise UnreachableError(
                f"linear move off the line at sample {k}: "
                f"{tcp_fk.pos_error(tcp_pose):.2e} m")
        waypoints.append(q)
    W = np.array(waypoints)
    colliding, _ = check_states(geom, model, W, tool)
    if colliding.any():
        first = int(np.nonzero(colliding)[0][0])
        rep = check_state(scene, model, W[first], tool, geom=geom)
        raise CollisionOnPathError(
            f"sample {first} of linear move collides: {rep.pairs}")
    return Trajectory(waypoints=W)


def time_parameterize(model: RobotModel, traj: Trajectory,
                      vel_scale: float = 1.0) -> TimedTrajectory:
    """Constant-velocity timing: segment duration is set by the slowest joint."""
    if not 0.0 < vel_scale <= 1.0:
        raise ValueError("vel_scale must be in (0, 1]")
    W = np.asarray(traj.waypoints, dtype=float)
    times = np.zeros(len(W))
    for i in range(1, len(W)):
        dq = np.abs(W[i] - W[i - 1])
        times[i] = times[i - 1] + float(np.max(dq / (model.vel_limits * vel_scale)))
    return TimedTrajectory(waypoints=W, times=times)
