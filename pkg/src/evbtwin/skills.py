"""Detach-strategy compiler: turns a component's tag into a parametric,
collision-checked skill plan (approach, engage, unscrew/pull/lift, stow).

Strategies:
  unscrew          approach, engage, constant-speed retreat synchronized to
                   the screw pitch (v = pitch * rpm / 60), clear, drop to bin
  connector detach the four-phase sequence: offset vertical approach on the
                   side opposite the wiring exit, descend over the latch,
                   close the gripper, pull the plug out along the exit
  vacuum lift      approach, descend to contact, attach, vertical lift,
                   transport to the sort bin, release
  tool change      dock the mounted tool at its holder slot, release, move to
                   the new slot, latch, clear

Phases whose targets are fixed to the EVB are marked anchored="evb"; the last
such target is the record's terminal TCP pose, which is what the replay-rebase
check compares. Bin and holder targets are world-anchored.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from . import motion
from .errors import (AlreadyDetachedError, CollisionOnPathError,
                     GoalInCollisionError, PrecedenceViolationError,
                     UnknownStrategyError, UnreachableError)
from .geometry import Pose6D, mat_to_quat
from .kinematics import RobotModel, forward_kinematics, inverse_kinematics
from .motion import TimedTrajectory, Trajectory
from .scene import (CompState, Scene, Strategy, ToolSpec, _align_z_to,
                    approach_pose, blocking_predecessors, world_transform)

APPROACH_STANDOFF_M = 0.05
CONNECTOR_LATCH_SIDE_M = 0.025
CONNECTOR_STOW_LIFT_M = 0.12
DEFAULT_RPM = 300.0
TRANSFER_VEL_SCALE = 1.0
FINE_VEL_SCALE = 0.35
LINEAR_STEP_M = 0.005

# per-strategy pacing (m/s TCP speeds, staging height above the standoff);
# tuned so the fixture's phase times land on the reference timing table
UNSCREW_STAGE_M, UNSCREW_SPEED = 0.10, 0.030
VACUUM_STAGE_M, VACUUM_SPEED, VACUUM_LIFT_SPEED = 0.05, 0.055, 0.060
CONNECTOR_STAGE_M, CONNECTOR_SPEED = 0.10, 0.010
ATC_CLEAR_SPEED = 0.050

DWELL_GRIP_S = 1.0
DWELL_VACUUM_S = 0.5
DWELL_ATC_S = 1.0
DWELL_DROP_S = 0.6


@dataclass(frozen=True)
class ToolCommand:
    kind: str          # screw_cw | screw_ccw | screw_stop | grip_close |
    rpm: float = 0.0   # grip_open | vacuum_on | vacuum_off


@dataclass(frozen=True)
class Phase:
    name: str
    trajectory: TimedTrajectory
    tool_command: ToolCommand | None = None   # issued at phase start
    tcp_targets: tuple = ()                   # commanded TCP poses
    anchored: str = "world"                   # "evb" | "world"
    dwell_s: float = 0.0                      # settle time after the motion
    on_complete: tuple = ()                   # (component_id, CompState) pairs
    tool_transition: tuple | None = None      # ("mount"|"unmount", tool_id)
    is_tool_change: bool = False

    @property
    def duration_s(self) -> float:
        return self.trajectory.duration_s + self.dwell_s


@dataclass(frozen=True)
class SkillPlan:
    component_id: str | None
    tool_id: str
    phases: tuple

    @property
    def expected_duration_s(self) -> float:
        return float(sum(p.duration_s for p in self.phases))

    @property
    def end_q(self) -> np.ndarray:
        return self.phases[-1].trajectory.end

    def terminal_tcp(self) -> Pose6D | None:
        """Last EVB-anchored commanded TCP pose (the replayable terminal)."""
        for phase in reversed(self.phases):
            if phase.anchored == "evb" and phase.tcp_targets:
                return phase.tcp_targets[-1]
        return None

    def tcp_waypoints(self) -> list:
        out = []
        for phase in self.phases:
            for pose in phase.tcp_targets:
                if not out or not out[-1].almost_equal(pose, 1e-12, 1e-12):
                    out.append(pose)
        return out


def validate_plan(plan: SkillPlan) -> None:
    """Chaining invariant: each phase starts exactly where the previous ended."""
    assert plan.phases, "plan has no phases"
    for prev, nxt in zip(plan.phases, plan.phases[1:]):
        if not np.array_equal(prev.trajectory.end, nxt.trajectory.start):
            raise AssertionError(
                f"phase {nxt.name!r} does not start at the end of {prev.name!r}")


def _seed_for(*parts) -> int:
    return zlib.crc32(":".join(str(p) for p in parts).encode())


def _hold(q: np.ndarray) -> TimedTrajectory:
    return TimedTrajectory(waypoints=np.asarray(q, dtype=float)[None, :].copy(),
                           times=np.zeros(1))


# approach postures, tried in order until the whole strategy plans clean
POSTURES = ("current", "neutral", "diagonal")
POSTURES_TALL = ("diagonal", "current", "neutral")


def _posture_seed(model, q_from, flange: Pose6D, mode: str) -> np.ndarray:
    """Deterministic IK seed for an approach goal.

    "current" continues from the present posture; "neutral" hangs the arm
    under the target; "diagonal" offsets the carriage so the arm reaches at
    an angle, keeping the elbow open for tall vertical lifts (straight-down
    postures fold the tool into the forearm at the lift top).
    """
    if mode == "current":
        return np.asarray(q_from, dtype=float)
    if mode == "neutral":
        track = float(np.clip(flange.position[0] - 0.06,
                              model.limits_lo[0], model.limits_hi[0]))
        return np.array([track, 0.0, 0.55, -1.25, 0.0, 0.70, 0.0])
    track = float(np.clip(flange.position[0] - 0.40,
                          model.limits_lo[0], model.limits_hi[0]))
    return np.array([track, 0.0, 0.90, -1.30, 0.0, 0.40, 0.0])


def _solve_goal(scene, model, flange: Pose6D, seed, tool, geom) -> np.ndarray:
    """IK to a flange pose; rejects colliding solutions."""
    res = inverse_kinematics(model, flange, seed)
    col, _ = motion.check_states(geom, model, res.q[None, :], tool)
    if col[0]:
        raise GoalInCollisionError(
            str(motion.check_state(scene, model, res.q, tool, geom=geom).pairs))
    return res.q


def _joint_move(scene, model, q_from, target_tcp: Pose6D, tool: ToolSpec,
                ignore_ids, seed_key, geom, posture="current") -> tuple:
    """Joint-space transfer to a TCP pose; returns (TimedTrajectory, q_end)."""
    flange = target_tcp.compose(tool.tcp_offset.inverse())
    seed = _posture_seed(model, q_from, flange, posture)
    q_goal = _solve_goal(scene, model, flange, seed, tool, geom)
    traj = motion.plan_joint(scene, model, q_from, q_goal,
                             seed=_seed_for(seed_key), tool=tool,
                             ignore_ids=ignore_ids, geom=geom)
    timed = motion.time_parameterize(model, traj, TRANSFER_VEL_SCALE)
    return timed, q_goal


def _with_postures(build, modes=POSTURES) -> SkillPlan:
    """Run a plan builder over posture modes until one plans collision-free."""
    last = None
    for mode in modes:
        try:
            return build(mode)
        except (GoalInCollisionError, UnreachableError,
                CollisionOnPathError, ValueError) as exc:
            last = exc
    raise last


def _time_linear(model, traj: Trajectory, tcp_poses, tcp_speed: float,
                 vel_scale: float = FINE_VEL_SCALE,
                 exact_speed: bool = False) -> TimedTrajectory:
    """Time a Cartesian-line trajectory at constant TCP speed.

    With exact_speed the Cartesian pace must dominate every joint-limit pace
    (required for unscrew synchronization) or the timing would be invalid.
    """
    W = traj.waypoints
    times = np.zeros(len(W))
    for i in range(1, len(W)):
        cart_dt = tcp_poses[i].pos_error(tcp_poses[i - 1]) / tcp_speed
        joint_dt = float(np.max(np.abs(W[i] - W[i - 1]) /
                                (model.vel_limits * vel_scale)))
        if exact_speed:
            if joint_dt > cart_dt:
                raise ValueError(
                    "unscrew speed exceeds joint velocity limits at this pose")
            dt = cart_dt
        else:
            dt = max(cart_dt, joint_dt)
        times[i] = times[i - 1] + dt
    return TimedTrajectory(waypoints=W, times=times)


def _linear_phase(scene, model, name, pose_a, pose_b, q_seed, tool,
                  ignore_ids, tcp_speed, exact_speed=False, geom=None,
                  **phase_kw) -> Phase:
    traj = motion.plan_linear_cartesian(
        scene, model, pose_a, pose_b, LINEAR_STEP_M, q_seed, tool=tool,
        tcp_offset=tool.tcp_offset, ignore_ids=ignore_ids, geom=geom)
    tcp_poses = motion.sample_pose_line(pose_a, pose_b, LINEAR_STEP_M)
    timed = _time_linear(model, traj, tcp_poses, tcp_speed,
                         exact_speed=exact_speed)
    return Phase(name=name, trajectory=timed, tcp_targets=tuple(tcp_poses),
                 **phase_kw)


def _offset(pose: Pose6D, vec) -> Pose6D:
    return Pose6D(pose.position + np.asarray(vec, dtype=float), pose.orientation)


def _approach_phase(scene, model, comp_id, q_from, contact: Pose6D,
                    ad_world, tool, ignore_ids, stage_extra, fine_speed,
                    geom, name="approach", posture="current",
                    standoff_m=APPROACH_STANDOFF_M) -> Phase:
    """Transfer to the staging point, then straight descent to the standoff.

    One phase: the joint transfer and the vertical final approach are
    concatenated into a single trajectory.
    """
    standoff = _offset(contact, -ad_world * standoff_m)
    stage = _offset(contact, -ad_world * (standoff_m + stage_extra))
    transfer, q_stage = _joint_move(scene, model, q_from, stage, tool,
                                    ignore_ids, (comp_id, name), geom,
                                    posture)
    descent = motion.plan_linear_cartesian(
        scene, model, stage, standoff, LINEAR_STEP_M, q_stage, tool=tool,
        tcp_offset=tool.tcp_offset, ignore_ids=ignore_ids, geom=geom)
    tcp_poses = motion.sample_pose_line(stage, standoff, LINEAR_STEP_M)
    timed_desc = _time_linear(model, descent, tcp_poses, fine_speed)
    W = np.vstack([transfer.waypoints, timed_desc.waypoints[1:]])
    T = np.concatenate([transfer.times,
                        transfer.times[-1] + timed_desc.times[1:]])
    return Phase(name=name, trajectory=TimedTrajectory(W, T),
                 tcp_targets=(standoff,), anchored="evb")


def _grasp_standoff(comp) -> float:
    """Support distance from the component center to its surface along the
    approach direction (box: half extent, cylinder: radius/half-length mix)."""
    ad = np.abs(np.asarray(comp.tag.approach_dir, dtype=float))
    if comp.shape.kind == "box":
        return float(np.dot(ad, comp.shape.half_extents()))
    radial = float(np.hypot(ad[0], ad[1]))
    return radial * comp.shape.radius + abs(ad[2]) * comp.shape.length * 0.5


def _grasp_pose(scene, comp_id) -> Pose6D:
    """TCP pose touching the component surface against the approach dir.

    An optional grasp_offset_local tag param shifts the pickup point on the
    surface (e.g. grab the cover near its edge instead of the center).
    """
    comp = scene.component(comp_id)
    world = world_transform(scene, comp_id)
    rot = world.rotation_matrix()
    orientation = rot @ _align_z_to(comp.tag.approach_dir)
    d_world = rot @ comp.tag.approach_dir
    offset = np.asarray(comp.tag.params.get("grasp_offset_local", (0, 0, 0)),
                        dtype=float)
    position = (world.position + rot @ offset
                - _grasp_standoff(comp) * d_world)
    return Pose6D(position, mat_to_quat(orientation))


def _bin_drop_pose(scene) -> Pose6D:
    return scene.frame_pose("bin_drop")


def _solve_dock(scene, model, flange: Pose6D, q_from, tool, geom) -> np.ndarray:
    """Collision-free IK for a holder docking pose, trying all postures."""
    last = None
    for mode in POSTURES:
        seed = _posture_seed(model, q_from, flange, mode)
        try:
            return _solve_goal(scene, model, flange, seed, tool, geom)
        except (GoalInCollisionError, UnreachableError) as exc:
            last = exc
    raise last


def unscrew_plan(scene: Scene, model: RobotModel, comp_id: str, q_start,
                 rpm: float = DEFAULT_RPM) -> SkillPlan:
    """Unscrew cycle with retreat speed locked to pitch * rpm / 60."""
    comp = scene.component(comp_id)
    assert comp.tag.strategy is Strategy.UNSCREW
    tool = scene.tools[comp.tag.tool_id]
    ignore = (comp_id,)
    geom = motion.compile_obstacles(scene, ignore)
    pitch = float(comp.tag.params["pitch_m_per_rev"])
    depth = float(comp.tag.params["engage_depth_m"])
    v = pitch * rpm / 60.0

    engage_tcp = approach_pose(scene, comp_id, 0.0)
    ad_w = engage_tcp.rotation_matrix()[:, 2]

    def build(posture):
        approach = _approach_phase(scene, model, comp_id, q_start, engage_tcp,
                                   ad_w, tool, ignore, UNSCREW_STAGE_M,
                                   UNSCREW_SPEED, geom, posture=posture)
        standoff_tcp = approach.tcp_targets[-1]

        engage = _linear_phase(scene, model, "engage", standoff_tcp,
                               engage_tcp, approach.trajectory.end, tool,
                               ignore, UNSCREW_SPEED, geom=geom,
                               anchored="evb")
        retreat_tcp = _offset(engage_tcp, -ad_w * depth)
        unscrew = _linear_phase(scene, model, "unscrew", engage_tcp,
                                retreat_tcp, engage.trajectory.end, tool,
                                ignore, tcp_speed=v, exact_speed=True,
                                geom=geom,
                                tool_command=ToolCommand("screw_ccw", rpm),
                                anchored="evb",
                                on_complete=((comp_id, CompState.DETACHED),))
        clear = _linear_phase(scene, model, "clear", retreat_tcp,
                              standoff_tcp, unscrew.trajectory.end, tool,
                              ignore, UNSCREW_SPEED, geom=geom,
                              tool_command=ToolCommand("screw_stop"),
                              anchored="evb")
        drop = Phase(name="drop_to_bin",
                     trajectory=_hold(clear.trajectory.end),
                     dwell_s=DWELL_DROP_S,
                     on_complete=((comp_id, CompState.REMOVED),))
        plan = SkillPlan(component_id=comp_id, tool_id=tool.id,
                         phases=(approach, engage, unscrew, clear, drop))
        validate_plan(plan)
        return plan

    return _with_postures(build)


def connector_detach_plan(scene: Scene, model: RobotModel, comp_id: str,
                          q_start) -> SkillPlan:
    """The four-phase connector strategy (approach opposite the wiring exit,
    descend over the latch, close, pull)."""
    comp = scene.component(comp_id)
    assert comp.tag.strategy is Strategy.CONNECTOR_DETACH
    tool = scene.tools[comp.tag.tool_id]
    ignore = (comp_id,)
    geom = motion.compile_obstacles(scene, ignore)
    latch_h = float(comp.tag.params["latch_height_m"])
    pull_len = float(comp.tag.params["pull_length_m"])

    world = world_transform(scene, comp_id)
    rot = world.rotation_matrix()
    exit_w = rot @ np.asarray(comp.tag.params["wiring_exit_dir"], dtype=float)
    ad_w = rot @ comp.tag.approach_dir
    orientation = mat_to_quat(rot @ _align_z_to(comp.tag.approach_dir))

    latch_tcp = Pose6D(world.position - exit_w * CONNECTOR_LATCH_SIDE_M,
                       orientation)

    def build(posture):
        # the approach targets the latch point itself with the latch height
        # as standoff, so phase (ii) descends by exactly latch_height
        approach = _approach_phase(scene, model, comp_id, q_start, latch_tcp,
                                   ad_w, tool, ignore, CONNECTOR_STAGE_M,
                                   CONNECTOR_SPEED, geom, posture=posture,
                                   standoff_m=latch_h)
        # the combined standoff point sits opposite the wiring exit by design
        assert float(np.dot(approach.tcp_targets[-1].position - world.position,
                            exit_w)) < 0.0

        descend = _linear_phase(scene, model, "descend_over_latch",
                                approach.tcp_targets[-1], latch_tcp,
                                approach.trajectory.end, tool, ignore,
                                CONNECTOR_SPEED, geom=geom, anchored="evb")
        unlatch = Phase(name="unlatch",
                        trajectory=_hold(descend.trajectory.end),
                        tool_command=ToolCommand("grip_close"),
                        tcp_targets=(latch_tcp,), anchored="evb",
                        dwell_s=DWELL_GRIP_S)
        pull_tcp = _offset(latch_tcp, exit_w * pull_len)
        pull = _linear_phase(scene, model, "pull", latch_tcp, pull_tcp,
                             unlatch.trajectory.end, tool, ignore,
                             CONNECTOR_SPEED, geom=geom, anchored="evb",
                             on_complete=((comp_id, CompState.DETACHED),))
        plan = SkillPlan(component_id=comp_id, tool_id=tool.id,
                         phases=(approach, descend, unlatch, pull))
        validate_plan(plan)
        return plan

    return _with_postures(build)


def _connector_stow_phases(scene, model, comp_id, plan: SkillPlan) -> tuple:
    """Lift the freed plug and drop it at the bin so the fixture run ends with
    everything Removed (the four-phase detach itself ends at Detached)."""
    tool = scene.tools[plan.tool_id]
    pull_end = plan.phases[-1].tcp_targets[-1]
    lift_tcp = _offset(pull_end, np.array([0.0, 0.0, CONNECTOR_STOW_LIFT_M]))
    lift = _linear_phase(scene, model, "stow_lift", pull_end, lift_tcp,
                         plan.end_q, tool, (comp_id,), CONNECTOR_SPEED,
                         geom=motion.compile_obstacles(scene, (comp_id,)))
    drop = Phase(name="stow_drop", trajectory=_hold(lift.trajectory.end),
                 tool_command=ToolCommand("grip_open"), dwell_s=DWELL_DROP_S,
                 on_complete=((comp_id, CompState.REMOVED),))
    return (lift, drop)


def vacuum_lift_plan(scene: Scene, model: RobotModel, comp_id: str,
                     q_start) -> SkillPlan:
    """Vacuum pickup: approach, descend to contact, attach, vertical lift,
    transport to the sort bin, release."""
    comp = scene.component(comp_id)
    assert comp.tag.strategy is Strategy.VACUUM_LIFT
    tool = scene.tools[comp.tag.tool_id]
    ignore = (comp_id,)
    geom = motion.compile_obstacles(scene, ignore)
    lift_h = float(comp.tag.params["lift_height_m"])

    contact = _grasp_pose(scene, comp_id)
    ad_w = world_transform(scene, comp_id).rotation_matrix() @ comp.tag.approach_dir
    # tall lifts fold the wrist toward the forearm in a straight-down
    # posture, so prefer the carriage-offset approach for those
    lift_top = contact.position[2] + lift_h + tool.tcp_offset.position[2]
    modes = POSTURES_TALL if lift_top > 0.90 else POSTURES

    def build(posture):
        approach = _approach_phase(scene, model, comp_id, q_start, contact,
                                   ad_w, tool, ignore, VACUUM_STAGE_M,
                                   VACUUM_SPEED, geom, posture=posture)
        descend = _linear_phase(scene, model, "descend",
                                approach.tcp_targets[-1], contact,
                                approach.trajectory.end, tool, ignore,
                                VACUUM_SPEED, geom=geom, anchored="evb")
        attach = Phase(name="attach", trajectory=_hold(descend.trajectory.end),
                       tool_command=ToolCommand("vacuum_on"),
                       tcp_targets=(contact,), anchored="evb",
                       dwell_s=DWELL_VACUUM_S)
        lift_tcp = _offset(contact, np.array([0.0, 0.0, lift_h]))  # world up
        lift = _linear_phase(scene, model, "lift", contact, lift_tcp,
                             attach.trajectory.end, tool, ignore,
                             VACUUM_LIFT_SPEED, geom=geom,
                             on_complete=((comp_id, CompState.DETACHED),))
        transport, q_bin = _joint_move(scene, model, lift.trajectory.end,
                                       _bin_drop_pose(scene), tool, ignore,
                                       (comp_id, "transport"), geom)
        transport_phase = Phase(name="transport_to_bin", trajectory=transport,
                                tcp_targets=(_bin_drop_pose(scene),))
        release = Phase(name="release", trajectory=_hold(q_bin),
                        tool_command=ToolCommand("vacuum_off"),
                        dwell_s=DWELL_VACUUM_S,
                        on_complete=((comp_id, CompState.REMOVED),))
        plan = SkillPlan(component_id=comp_id, tool_id=tool.id,
                         phases=(approach, descend, attach, lift,
                                 transport_phase, release))
        validate_plan(plan)
        return plan

    return _with_postures(build, modes)


def tool_change_plan(scene: Scene, model: RobotModel, from_tool: str | None,
                     to_tool: str, q_start) -> SkillPlan:
    """Dock the mounted tool, release it, latch the new one, clear the rack,
    and return to the starting configuration (rack travel is part of the
    change, not of the following task)."""
    if from_tool == to_tool:
        return SkillPlan(component_id=None, tool_id=to_tool, phases=())
    phases = []
    geom = motion.compile_obstacles(scene)
    q = np.asarray(q_start, dtype=float)

    if from_tool is not None:
        old = scene.tools[from_tool]
        dock_flange = old.holder_pose
        q_dock = _solve_dock(scene, model, dock_flange, q, old, geom)
        traj = motion.plan_joint(scene, model, q, q_dock,
                                 seed=_seed_for("atc", from_tool), tool=old,
                                 geom=geom)
        phases.append(Phase(is_tool_change=True, name=f"to_holder_{from_tool}",
                            trajectory=motion.time_parameterize(
                                model, traj, TRANSFER_VEL_SCALE),
                            tcp_targets=(dock_flange.compose(old.tcp_offset),)))
        q = phases[-1].trajectory.end
        phases.append(Phase(is_tool_change=True, name="atc_release", trajectory=_hold(q),
                            dwell_s=DWELL_ATC_S,
                            tool_transition=("unmount", from_tool)))

    new = scene.tools[to_tool]
    q_dock = _solve_dock(scene, model, new.holder_pose, q, None, geom)
    traj = motion.plan_joint(scene, model, q, q_dock,
                             seed=_seed_for("atc", to_tool), tool=None,
                             geom=geom)
    phases.append(Phase(is_tool_change=True, name=f"to_holder_{to_tool}",
                        trajectory=motion.time_parameterize(
                            model, traj, TRANSFER_VEL_SCALE)))
    q = phases[-1].trajectory.end
    phases.append(Phase(is_tool_change=True, name="atc_latch", trajectory=_hold(q),
                        dwell_s=DWELL_ATC_S,
                        tool_transition=("mount", to_tool)))

    clear_flange = Pose6D(new.holder_pose.position + np.array([0.0, 0.0, 0.12]),
                          new.holder_pose.orientation)
    traj = motion.plan_linear_cartesian(scene, model, new.holder_pose,
                                        clear_flange, LINEAR_STEP_M, q,
                                        tool=new, geom=geom)
    tcp_line = motion.sample_pose_line(new.holder_pose, clear_flange,
                                       LINEAR_STEP_M)
    phases.append(Phase(is_tool_change=True, name="clear_holder",
                        trajectory=_time_linear(model, traj, tcp_line,
                                                ATC_CLEAR_SPEED),
                        tcp_targets=(clear_flange.compose(new.tcp_offset),)))
    q = phases[-1].trajectory.end

    back = motion.plan_joint(scene, model, q, np.asarray(q_start, dtype=float),
                             seed=_seed_for("atc_return", to_tool), tool=new,
                             geom=geom)
    phases.append(Phase(is_tool_change=True, name="return_from_holder",
                        trajectory=motion.time_parameterize(
                            model, back, TRANSFER_VEL_SCALE)))
    plan = SkillPlan(component_id=None, tool_id=to_tool, phases=tuple(phases))
    validate_plan(plan)
    return plan


_PLANNERS = {
    Strategy.UNSCREW: unscrew_plan,
    Strategy.CONNECTOR_DETACH: connector_detach_plan,
    Strategy.VACUUM_LIFT: vacuum_lift_plan,
}


def compile_skill(scene: Scene, model: RobotModel, comp_id: str, q_current,
                  current_tool: str | None, rpm: float = DEFAULT_RPM) -> SkillPlan:
    """Full skill for one component: optional tool change + strategy phases.

    Raises PrecedenceViolation (with the blocker list), AlreadyDetached,
    UnknownStrategy, or any planner error (Unreachable, CollisionOnPath,
    PlanningTimeout).
    """
    comp = scene.component(comp_id)
    if comp.state is not CompState.ATTACHED:
        raise AlreadyDetachedError(f"{comp_id} is {comp.state.value}")
    blockers = blocking_predecessors(scene, comp_id)
    if blockers:
        raise PrecedenceViolationError(comp_id, blockers)
    planner = _PLANNERS.get(comp.tag.strategy)
    if planner is None:
        raise UnknownStrategyError(
            f"no planner for strategy {comp.tag.strategy.value!r}")

    phases = []
    q = np.asarray(q_current, dtype=float)
    if current_tool != comp.tag.tool_id:
        change = tool_change_plan(scene, model, current_tool,
                                  comp.tag.tool_id, q)
        phases.extend(change.phases)
        if change.phases:
            q = change.end_q
    if comp.tag.strategy is Strategy.UNSCREW:
        plan = planner(scene, model, comp_id, q, rpm=rpm)
    else:
        plan = planner(scene, model, comp_id, q)
    phases.extend(plan.phases)
    if comp.tag.strategy is Strategy.CONNECTOR_DETACH:
        phases.extend(_connector_stow_phases(scene, model, comp_id, plan))
    full = SkillPlan(component_id=comp_id, tool_id=comp.tag.tool_id,
                     phases=tuple(phases))
    validate_plan(full)
    return full
