import socket
import threading

import numpy as np

from evbtwin import link
from evbtwin.motion import plan_joint, time_parameterize
from evbtwin.transport import RemoteControllerProxy, run_robotsim_udp


def free_port():
    s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def test_udp_loopback_tracks_trajectory(model, scene, home):
    """twin-server side proxy and a robotsim process-style loop on localhost:
    the plant tracks a streamed trajectory over real datagrams."""
    port = free_port()
    addr = f"127.0.0.1:{port}"
    proxy = RemoteControllerProxy(model, home, addr, cycle_ms=12.0,
                                  timeout_cycles=2000)

    goal = home.copy()
    goal[0] -= 0.25
    goal[2] += 0.2
    tool = scene.tools["screwdriver"]
    traj = time_parameterize(model, plan_joint(scene, model, home, goal,
                                               seed=5, tool=tool), 1.0)
    cycle_s = 0.012
    n_cycles = int(np.ceil(traj.duration_s / cycle_s)) + 60

    stop = threading.Event()
    result = {}

    def controller_side():
        result["controller"] = run_robotsim_udp(
            model, home, addr, cycle_ms=12.0, time_scale=0.0,
            max_cycles=n_cycles, stop=stop)

    worker = threading.Thread(target=controller_side, daemon=True)
    worker.start()

    client = link.ClientState()
    reply = None
    try:
        for k in range(1, n_cycles + 1):
            inbound = proxy.cycle(reply)
            t = min(k * cycle_s, traj.duration_s)
            client, reply = link.client_step(client, inbound, traj.sample(t))
    finally:
        stop.set()
        worker.join(timeout=30)
        proxy.close()

    controller = result["controller"]
    assert np.max(np.abs(controller.sim.q_actual - goal)) < 1e-5
    assert controller.link_state.mode == link.RUNNING
    assert controller.link_state.replies_accepted > n_cycles * 0.9
    # the proxy mirrored the plant to wire resolution
    assert np.max(np.abs(proxy.sim.q_actual - controller.sim.q_actual)) < 1e-5
