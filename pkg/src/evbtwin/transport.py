"""UDP binding of the cyclic protocol.

The controller endpoint (robotsim process) owns the timing loop: every cycle
it sends the actual-state frame and applies whatever reply arrived for the
previous frame. The twin server binds a datagram socket and answers each
frame with corrections (at-most-once, unordered semantics; stale replies are
ignored by the controller's ipoc check).
"""

from __future__ import annotations

import socket
import time
from dataclasses import replace

import numpy as np

from . import link
from .errors import LinkFaultedError, WireOrderError, WireParseError, WireRangeError
from .robotsim import GRIPPER_CLOSED, GRIPPER_OPEN, VACUUM_OFF, VACUUM_ON, RobotController, SimState


def parse_addr(text: str) -> tuple:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


class RemoteControllerProxy:
    """Session-side stand-in for RobotController when the controller runs in
    another process over UDP. Mirrors the plant state from received frames."""

    def __init__(self, model, q0, listen_addr: str,
                 cycle_ms: float = link.DEFAULT_CYCLE_MS,
                 timeout_cycles: int = 500):
        self.model = model
        self.cycle_s = cycle_ms * 1e-3
        self.sim = SimState(q_actual=np.asarray(q0, dtype=float))
        self.link_state = link.LinkState()
        self.timeout_s = timeout_cycles * self.cycle_s
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind(parse_addr(listen_addr))
        self.sock.settimeout(self.timeout_s)
        self.peer = None

    def cycle(self, reply: link.CyclicFrame | None) -> link.CyclicFrame:
        """Send the pending reply, then block for the next controller frame."""
        if reply is not None and self.peer is not None:
            self.sock.sendto(link.encode_frame(reply), self.peer)
        while True:
            try:
                data, addr = self.sock.recvfrom(4096)
            except socket.timeout:
                self.link_state = replace(self.link_state, mode=link.FAULTED)
                raise LinkFaultedError("no controller frame within timeout")
            self.peer = addr
            try:
                frame = link.decode_frame(data)
            except (WireParseError, WireOrderError, WireRangeError):
                continue
            if frame.direction != link.C2C:
                continue
            self._mirror(frame)
            return frame

    def _mirror(self, frame: link.CyclicFrame):
        q = link.wire_to_si(frame.track_mm, frame.joints_deg)
        self.sim = SimState(
            q_actual=q,
            tool_rpm=frame.tool_rpm,
            gripper=(GRIPPER_CLOSED if frame.digital_in & link.DIN_GRIP_CLOSED
                     else GRIPPER_OPEN),
            vacuum=(VACUUM_ON if frame.digital_in & link.DIN_VACUUM_ON
                    else VACUUM_OFF),
            clock_us=self.sim.clock_us + int(round(self.cycle_s * 1e6)),
        )
        self.link_state = replace(
            self.link_state,
            ipoc_next=frame.ipoc + 1, last_sent=frame.ipoc,
            cycles=self.link_state.cycles + 1)

    def close(self):
        self.sock.close()


def run_robotsim_udp(model, q0, connect_addr: str,
                     cycle_ms: float = link.DEFAULT_CYCLE_MS,
                     time_scale: float = 1.0, max_cycles: int | None = None,
                     stop=None):
    """Standalone controller endpoint: cyclic UDP loop against a twin server.

    time_scale 1.0 paces the loop in real time; 0 runs as fast as replies
    arrive. Returns the controller (with final plant state) when stopped.
    """
    controller = RobotController(model, q0, cycle_ms)
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    peer = parse_addr(connect_addr)
    cycle_s = cycle_ms * 1e-3
    wait_s = cycle_s if time_scale <= 0 else cycle_s / time_scale
    sock.settimeout(wait_s)
    reply = None
    cycles = 0
    try:
        while max_cycles is None or cycles < max_cycles:
            if stop is not None and stop.is_set():
                break
            tick = time.monotonic()
            out = controller.cycle(reply)
            sock.sendto(link.encode_frame(out), peer)
            reply = None
            try:
                data, _ = sock.recvfrom(4096)
                try:
                    reply = link.decode_frame(data)
                except (WireParseError, WireOrderError, WireRangeError):
                    reply = None
            except socket.timeout:
                pass
            cycles += 1
            if time_scale > 0:
                rest = cycle_s / time_scale - (time.monotonic() - tick)
                if rest > 0:
                    time.sleep(rest)
    finally:
        sock.close()
    return controller
