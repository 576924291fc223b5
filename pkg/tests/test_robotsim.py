import numpy as np
import pytest

from evbtwin import link
from evbtwin.robotsim import (GRIPPER_CLOSED, GRIPPER_OPEN, VACUUM_OFF,
                              VACUUM_ON, RobotController, SimState,
                              set_tool_command, step_sim)
from evbtwin.skills import ToolCommand


def test_step_sim_integration(model, home):
    sim = SimState(q_actual=home.copy())
    out = step_sim(model, sim, np.zeros(7), 0.012)
    assert np.array_equal(out.q_actual, home)
    assert out.clock_us == 12000

    corr = np.zeros(7)
    corr[1] = np.deg2rad(0.1)
    cur = sim
    for _ in range(100):
        cur = step_sim(model, cur, corr, 0.012)
    assert cur.q_actual[1] == pytest.approx(home[1] + np.deg2rad(10.0))

    # saturates at the limit
    corr = np.zeros(7)
    corr[0] = 5.0
    sat = step_sim(model, SimState(q_actual=home.copy()), corr, 0.012)
    assert sat.q_actual[0] == model.limits_hi[0]
    with pytest.raises(ValueError):
        step_sim(model, sim, np.zeros(7), 0.0)


def test_set_tool_command():
    sim = SimState(q_actual=np.zeros(7))
    sim = set_tool_command(sim, ToolCommand("screw_ccw", 300.0))
    assert sim.tool_rpm == 300.0
    sim = set_tool_command(sim, ToolCommand("screw_stop"))
    assert sim.tool_rpm == 0.0
    sim = set_tool_command(sim, ToolCommand("grip_close"))
    assert sim.gripper == GRIPPER_CLOSED
    sim = set_tool_command(sim, ToolCommand("vacuum_off"))
    sim2 = set_tool_command(sim, ToolCommand("vacuum_off"))
    assert sim2.vacuum == VACUUM_OFF          # idempotent
    with pytest.raises(ValueError):
        set_tool_command(sim, ToolCommand("warp_drive"))


def test_rpm_reported_on_wire_next_frame(model, home):
    ctrl = RobotController(model, home)
    frame = ctrl.cycle(None)
    assert frame.tool_rpm == 0.0
    reply = link.frame_cl2c(frame.ipoc, np.zeros(7),
                            digital_out=link.pack_dout(screw_ccw=True, rpm=300))
    frame = ctrl.cycle(reply)
    assert frame.tool_rpm == 300.0
    assert ctrl.sim.tool_rpm == 300.0

    reply = link.frame_cl2c(frame.ipoc, np.zeros(7),
                            digital_out=link.pack_dout(grip_close=True,
                                                       vacuum_on=True))
    frame = ctrl.cycle(reply)
    assert frame.tool_rpm == 0.0
    assert frame.digital_in & link.DIN_GRIP_CLOSED
    assert frame.digital_in & link.DIN_VACUUM_ON
    assert ctrl.sim.gripper == GRIPPER_CLOSED
    assert ctrl.sim.vacuum == VACUUM_ON


def test_controller_tracks_timed_trajectory(model, home, scene):
    """End-to-end: stream a planned trajectory through the wire-level cycle
    and settle within 1e-6 rad."""
    from evbtwin.motion import plan_joint, time_parameterize
    goal = home.copy()
    goal[0] -= 0.3
    goal[2] += 0.25
    tool = scene.tools["screwdriver"]
    traj = time_parameterize(model, plan_joint(scene, model, home, goal,
                                               seed=3, tool=tool), 1.0)
    ctrl = RobotController(model, home)
    client = link.ClientState()
    reply_bytes = None
    cycle_s = 0.012
    n = int(np.ceil(traj.duration_s / cycle_s))
    for k in range(1, n + 1):
        frame_bytes = ctrl.cycle_bytes(reply_bytes)
        inbound = link.decode_frame(frame_bytes)
        t = min(k * cycle_s, traj.duration_s)
        client, reply = link.client_step(client, inbound, traj.sample(t))
        reply_bytes = link.encode_frame(reply)
    for _ in range(20):   # settle
        frame_bytes = ctrl.cycle_bytes(reply_bytes)
        inbound = link.decode_frame(frame_bytes)
        client, reply = link.client_step(client, inbound, goal)
        reply_bytes = link.encode_frame(reply)
    assert np.max(np.abs(ctrl.sim.q_actual - goal)) < 1e-6
    assert ctrl.link_state.mode == link.RUNNING


def test_malformed_reply_counts_as_miss(model, home):
    ctrl = RobotController(model, home)
    ctrl.cycle_bytes(None)
    ctrl.cycle_bytes(b"garbage\n")
    assert ctrl.link_state.consecutive_misses == 1
    assert ctrl.link_state.mode == link.HOLDING
