import numpy as np
import pytest

from evbtwin import motion
from evbtwin.errors import (CollisionOnPathError, GoalInCollisionError,
                            StartInCollisionError)
from evbtwin.geometry import Pose6D
from evbtwin.kinematics import forward_kinematics, inverse_kinematics, random_state
from evbtwin.motion import (DEFAULT_RESOLUTION, check_segment, check_state,
                            check_states, compile_obstacles, plan_joint,
                            plan_linear_cartesian, time_parameterize,
                            Trajectory)
from evbtwin.scene import CompState, set_component_state

from . import oracles


def oracle_state_collides(geom, model, q, tool):
    """Surface-sampling decision, built from scratch (tests/oracles.py)."""
    frames, a_loc, b_loc, radii, names = motion._capsule_table(model, tool)
    fk_pos, fk_rot = motion.fk_link_frames_batch(model, q[None, :])
    A, B = motion._capsule_segments(fk_pos, fk_rot, frames, a_loc, b_loc)
    A, B = A[0], B[0]

    cap_pts = [oracles.capsule_surface_points(A[i], B[i], radii[i], 1000)
               for i in range(len(names))]
    box_pts = [geom.box_c[j] + oracles.box_surface_points(geom.box_h[j], 1000)
               @ geom.box_rt[j] for j in range(len(geom.box_names))]
    cyl_pts = [geom.cyl_c[j] + oracles.cylinder_surface_points(
        geom.cyl_r[j], geom.cyl_hl[j], 1000) @ geom.cyl_rt[j]
        for j in range(len(geom.cyl_names))]

    def near(center, bound, i):
        mid = 0.5 * (A[i] + B[i])
        r = 0.5 * np.linalg.norm(B[i] - A[i]) + radii[i]
        return np.linalg.norm(mid - center) <= bound + r + 1e-6

    for i in range(len(names)):
        for j in range(len(geom.box_names)):
            if not near(geom.box_c[j], np.linalg.norm(geom.box_h[j]), i):
                continue
            if oracles.points_in_box(cap_pts[i], geom.box_c[j],
                                     geom.box_rt[j].T, geom.box_h[j]):
                return True
            if oracles.points_in_capsule(box_pts[j], A[i], B[i], radii[i]):
                return True
        for j in range(len(geom.cyl_names)):
            if not near(geom.cyl_c[j], np.hypot(geom.cyl_r[j], geom.cyl_hl[j]), i):
                continue
            if oracles.points_in_cylinder(cap_pts[i], geom.cyl_c[j],
                                          geom.cyl_rt[j].T, geom.cyl_r[j],
                                          geom.cyl_hl[j]):
                return True
            if oracles.points_in_capsule(cyl_pts[j], A[i], B[i], radii[i]):
                return True
    pair_idx = motion._self_pair_indices(model, names) + \
        motion._tool_pair_indices(names)
    for i, j in pair_idx:
        if oracles.points_in_capsule(cap_pts[i], A[j], B[j], radii[j]):
            return True
        if oracles.points_in_capsule(cap_pts[j], A[i], B[i], radii[i]):
            return True
    return False


def test_home_state_is_free(scene, model, home):
    rep = check_state(scene, model, home, tool=scene.tools["screwdriver"])
    assert not rep.colliding
    assert rep.pairs == []
    assert rep.min_clearance_m > 0


def test_flange_through_cover_collides(scene, model, home):
    # command the tool 0.2 m below the EVB top surface, through the cover
    tool = scene.tools["screwdriver"]
    target = Pose6D(np.array([2.0, 1.0, 0.30]),
                    np.array([0.0, 1.0, 0.0, 0.0]))
    res = inverse_kinematics(model, target.compose(tool.tcp_offset.inverse()),
                             home)
    rep = check_state(scene, model, res.q, tool=tool)
    assert rep.colliding
    assert ("tool", "cover") in rep.pairs


def test_report_symmetry_under_body_order(scene, model, home):
    import dataclasses
    tool = scene.tools["screwdriver"]
    q = home + np.array([0.5, 0.2, 0.3, -0.4, 0.1, -0.2, 0.3])
    rep_a = check_state(scene, model, q, tool=tool)
    reversed_scene = dataclasses.replace(
        scene, statics=tuple(reversed(scene.statics)),
        components=tuple(reversed(scene.components)))
    rep_b = check_state(reversed_scene, model, q, tool=tool)
    assert rep_a.colliding == rep_b.colliding
    assert sorted(rep_a.pairs) == sorted(rep_b.pairs)


def test_detached_still_blocks_removed_does_not(scene, model, home):
    tool = scene.tools["screwdriver"]
    target = Pose6D(np.array([2.0, 1.0, 0.35]), np.array([0.0, 1.0, 0.0, 0.0]))
    q = inverse_kinematics(model, target.compose(tool.tcp_offset.inverse()),
                           home).q
    assert check_state(scene, model, q, tool=tool).colliding
    detached = set_component_state(scene, "cover", CompState.DETACHED)
    assert check_state(detached, model, q, tool=tool).colliding
    removed = set_component_state(detached, "cover", CompState.REMOVED)
    rep = removed and check_state(removed, model, q, tool=tool)
    assert all(b != "cover" for _, b in rep.pairs)


def test_checker_vs_surface_sampling_oracle(scene, model):
    geom = compile_obstacles(scene)
    tool = scene.tools["screwdriver"]
    rng = np.random.default_rng(31)
    n = 600
    Q = rng.uniform(model.limits_lo, model.limits_hi, size=(n, 7))
    verdicts, _ = check_states(geom, model, Q, tool)
    false_pos = 0
    for k in range(n):
        oracle = oracle_state_collides(geom, model, Q[k], tool)
        if oracle:
            assert verdicts[k], f"false negative at state {k}"
        elif verdicts[k]:
            false_pos += 1
    assert false_pos / n < 0.02


def test_check_segment_endpoints_and_step(scene, model, home):
    tool = scene.tools["screwdriver"]
    q_b = home.copy()
    q_b[0] -= 0.4
    rep = check_segment(scene, model, home, q_b, tool=tool)
    assert not rep.colliding
    # colliding endpoint reported at parameter 0
    q_bad = np.array([2.0, 0, 0, 0, 0, 0, 0])
    rep = check_segment(scene, model, q_bad, home, tool=tool)
    assert rep.colliding
    assert rep.sample_index == 0
    with pytest.raises(ValueError):
        check_segment(scene, model, home, q_b, step=0.0, tool=tool)


def test_check_segment_agrees_with_finer_sampling(scene, model, home):
    tool = scene.tools["screwdriver"]
    rng = np.random.default_rng(32)
    geom = compile_obstacles(scene)
    for _ in range(20):
        q_b = np.clip(home + rng.uniform(-0.6, 0.6, 7),
                      model.limits_lo, model.limits_hi)
        coarse = check_segment(scene, model, home, q_b, tool=tool, geom=geom)
        fine = check_segment(scene, model, home, q_b, step=0.1, tool=tool,
                             geom=geom)
        if not coarse.colliding:
            assert not fine.colliding


def test_plan_joint_trivial_and_direct(scene, model, home):
    tool = scene.tools["screwdriver"]
    traj = plan_joint(scene, model, home, home, seed=1, tool=tool)
    assert len(traj) == 1
    q_goal = home.copy()
    q_goal[0] -= 0.3
    q_goal[1] += 0.25
    traj = plan_joint(scene, model, home, q_goal, seed=1, tool=tool)
    # direct interpolation: straight segment at resolution
    diffs = np.diff(traj.waypoints, axis=0)
    assert np.all(np.abs(diffs) <= DEFAULT_RESOLUTION + 1e-12)
    assert np.array_equal(traj.waypoints[0], home)
    assert np.array_equal(traj.waypoints[-1], q_goal)
    steps = diffs / np.linalg.norm(diffs, axis=1, keepdims=True)
    assert np.allclose(steps, steps[0], atol=1e-9)  # collinear = straight


def test_plan_joint_rejects_colliding_endpoints(scene, model, home):
    tool = scene.tools["screwdriver"]
    q_bad = np.array([2.0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(StartInCollisionError):
        plan_joint(scene, model, q_bad, home, seed=1, tool=tool)
    with pytest.raises(GoalInCollisionError):
        plan_joint(scene, model, home, q_bad, seed=1, tool=tool)


def test_plan_joint_detour_and_revalidation(scene, model, home):
    # goal on the far side of the pack, below its top: the straight segment
    # sweeps through the box, so the planner must detour
    tool = scene.tools["screwdriver"]
    start = home
    goal_tcp = Pose6D(np.array([2.9, 1.0, 0.42]), np.array([0.0, 1.0, 0.0, 0.0]))
    goal = inverse_kinematics(model, goal_tcp.compose(tool.tcp_offset.inverse()),
                              np.array([2.85, 0, 0.9, -1.3, 0, 0.4, 0])).q
    geom = compile_obstacles(scene)
    traj = plan_joint(scene, model, start, goal, seed=7, tool=tool)
    # revalidate at 10x finer sampling
    for a, b in zip(traj.waypoints[:-1], traj.waypoints[1:]):
        rep = check_segment(scene, model, a, b, step=0.1, tool=tool, geom=geom)
        assert not rep.colliding
    assert np.array_equal(traj.waypoints[0], start)
    assert np.array_equal(traj.waypoints[-1], goal)


def test_plan_joint_deterministic(scene, model, home):
    tool = scene.tools["screwdriver"]
    start = home
    goal_tcp = Pose6D(np.array([2.9, 1.0, 0.42]), np.array([0.0, 1.0, 0.0, 0.0]))
    goal = inverse_kinematics(model, goal_tcp.compose(tool.tcp_offset.inverse()),
                              np.array([2.85, 0, 0.9, -1.3, 0, 0.4, 0])).q
    t1 = plan_joint(scene, model, start, goal, seed=42, tool=tool)
    t2 = plan_joint(scene, model, start, goal, seed=42, tool=tool)
    assert np.array_equal(t1.waypoints, t2.waypoints)
    assert t1.waypoints.tobytes() == t2.waypoints.tobytes()


def test_plan_linear_cartesian_vertical_retreat(scene, model, home):
    tool = scene.tools["screwdriver"]
    from evbtwin.scene import approach_pose
    start_tcp = approach_pose(scene, "cover_screw_1", 0.0)
    end_tcp = approach_pose(scene, "cover_screw_1", 0.10)
    seed = inverse_kinematics(
        model, start_tcp.compose(tool.tcp_offset.inverse()),
        np.array([start_tcp.position[0], 0, 0.7, -1.4, 0, 0.7, 0]),
    ).q
    traj = plan_linear_cartesian(scene, model, start_tcp, end_tcp, 0.005,
                                 seed, tool=tool, tcp_offset=tool.tcp_offset,
                                 ignore_ids=("cover_screw_1",))
    zs = []
    for q in traj.waypoints:
        tcp = forward_kinematics(model, q).compose(tool.tcp_offset)
        lateral = np.linalg.norm(tcp.position[:2] - start_tcp.position[:2])
        assert lateral < 1e-5
        zs.append(tcp.position[2])
    assert all(b >= a - 1e-9 for a, b in zip(zs, zs[1:]))  # monotone up

    single = plan_linear_cartesian(scene, model, start_tcp, start_tcp, 0.005,
                                   traj.waypoints[0], tool=tool,
                                   tcp_offset=tool.tcp_offset,
                                   ignore_ids=("cover_screw_1",))
    assert len(single) == 1


def test_plan_linear_cartesian_blocked_path(scene, model, home):
    tool = scene.tools["screwdriver"]
    # drag the TCP sideways through the attached cover
    a = Pose6D(np.array([1.6, 1.0, 0.46]), np.array([0.0, 1.0, 0.0, 0.0]))
    b = Pose6D(np.array([2.4, 1.0, 0.46]), np.array([0.0, 1.0, 0.0, 0.0]))
    seed = np.array([1.55, 0, 0.8, -1.2, 0, 0.4, 0])
    with pytest.raises(CollisionOnPathError):
        plan_linear_cartesian(scene, model, a, b, 0.01, seed, tool=tool,
                              tcp_offset=tool.tcp_offset)


def test_time_parameterize(model):
    w = np.zeros((3, 7))
    w[1, 1] = 1.0
    w[2, 1] = 1.0
    traj = Trajectory(waypoints=w)
    timed = time_parameterize(model, traj, 1.0)
    assert timed.times[0] == 0.0
    assert timed.times[1] == pytest.approx(1.0 / model.vel_limits[1])
    assert timed.times[2] == timed.times[1]  # zero-length segment
    half = time_parameterize(model, traj, 0.5)
    assert half.times[1] == pytest.approx(2.0 / model.vel_limits[1])
    single = time_parameterize(model, Trajectory(waypoints=w[:1]), 1.0)
    assert single.duration_s == 0.0
    with pytest.raises(ValueError):
        time_parameterize(model, traj, 0.0)


def test_timed_trajectory_sampling(model):
    w = np.zeros((2, 7))
    w[1, 1] = 1.0
    timed = time_parameterize(model, Trajectory(waypoints=w), 1.0)
    mid = timed.sample(timed.duration_s / 2)
    assert mid[1] == pytest.approx(0.5)
    assert timed.sample(-1.0)[1] == 0.0
    assert timed.sample(timed.duration_s + 1.0)[1] == 1.0
