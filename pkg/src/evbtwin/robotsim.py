"""Simulated physical twin: perfect-integrator servo plant plus tool signals.

The controller endpoint of the cyclic link: each cycle it applies the clamped
corrections from the client reply, saturates at joint limits, advances the
clock, and reports actuals + tool feedback in the next outbound frame.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import link
from .errors import WireOrderError, WireParseError, WireRangeError
from .kinematics import RobotModel, clamp_to_limits

GRIPPER_OPEN = "open"
GRIPPER_CLOSED = "closed"
VACUUM_ON = "on"
VACUUM_OFF = "off"


@dataclass(frozen=True)
class SimState:
    q_actual: np.ndarray
    tool_rpm: float = 0.0
    gripper: str = GRIPPER_OPEN
    vacuum: str = VACUUM_OFF
    clock_us: int = 0


def step_sim(model: RobotModel, sim: SimState, corrections_si,
             dt_s: float) -> SimState:
    """Integrate pre-clamped corrections; saturate at limits; advance clock."""
    if dt_s <= 0:
        raise ValueError("dt must be > 0")
    q = clamp_to_limits(model, sim.q_actual + np.asarray(corrections_si, dtype=float))
    return replace(sim, q_actual=q, clock_us=sim.clock_us + int(round(dt_s * 1e6)))


def set_tool_command(sim: SimState, command) -> SimState:
    """Apply a skill ToolCommand (kind + rpm); rpm ramps instantaneously."""
    kind = command.kind if hasattr(command, "kind") else str(command)
    rpm = float(getattr(command, "rpm", 0.0))
    if kind == "screw_cw" or kind == "screw_ccw":
        return replace(sim, tool_rpm=rpm)
    if kind == "screw_stop":
        return replace(sim, tool_rpm=0.0)
    if kind == "grip_close":
        return replace(sim, gripper=GRIPPER_CLOSED)
    if kind == "grip_open":
        return replace(sim, gripper=GRIPPER_OPEN)
    if kind == "vacuum_on":
        return replace(sim, vacuum=VACUUM_ON)
    if kind == "vacuum_off":
        return replace(sim, vacuum=VACUUM_OFF)
    raise ValueError(f"unknown tool command {kind!r}")


def _apply_dout(sim: SimState, dout: int) -> SimState:
    """Tool signals commanded over the wire (DOUT bits of the reply)."""
    cmd = link.unpack_dout(dout)
    rpm = 0.0
    if cmd["screw_cw"] or cmd["screw_ccw"]:
        rpm = cmd["rpm"]
    return replace(
        sim,
        tool_rpm=rpm,
        gripper=GRIPPER_CLOSED if cmd["grip_close"] else GRIPPER_OPEN,
        vacuum=VACUUM_ON if cmd["vacuum_on"] else VACUUM_OFF,
    )


def _din_bits(sim: SimState) -> int:
    bits = 0
    if sim.gripper == GRIPPER_CLOSED:
        bits |= link.DIN_GRIP_CLOSED
    if sim.vacuum == VACUUM_ON:
        bits |= link.DIN_VACUUM_ON
    return bits


class RobotController:
    """Controller endpoint: cyclic link state machine driving the sim plant."""

    def __init__(self, model: RobotModel, q0, cycle_ms: float = link.DEFAULT_CYCLE_MS):
        self.model = model
        self.cycle_s = cycle_ms * 1e-3
        self.sim = SimState(q_actual=clamp_to_limits(model, np.asarray(q0, dtype=float)))
        self.link_state = link.LinkState()

    def cycle(self, reply: link.CyclicFrame | None) -> link.CyclicFrame:
        """One control cycle: apply last cycle's reply, step the plant, emit
        the next frame with fresh actuals."""
        self.link_state, corrections, dout = link.apply_reply(
            self.link_state, reply)
        if dout is not None:
            self.sim = _apply_dout(self.sim, dout)
        self.sim = step_sim(self.model, self.sim, corrections, self.cycle_s)
        # outbound reports post-step actuals at the new ipoc
        return link.frame_c2c(self.link_state.last_sent, self.sim.q_actual,
                              tool_rpm=self.sim.tool_rpm,
                              digital_in=_din_bits(self.sim))

    def cycle_bytes(self, reply_bytes: bytes | None) -> bytes:
        """Wire-level cycle; malformed replies count as misses."""
        reply = None
        if reply_bytes is not None:
            try:
                reply = link.decode_frame(reply_bytes)
            except (WireParseError, WireOrderError, WireRangeError):
                reply = None
        return link.encode_frame(self.cycle(reply))

    def reset_fault(self):
        self.link_state = link.reset_link(self.link_state)
