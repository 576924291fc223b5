"""Cyclic bidirectional external-control protocol (RSI-style semantics).

Every cycle the controller broadcasts actual positions and tool feedback with
a monotone IPOC counter; the client echoes the IPOC with relative position
corrections, clamped per cycle to +-1.0 mm on the track and +-0.1 deg per
joint. A missing or stale reply holds the robot (zero correction); ten
consecutive misses latch the Faulted state until an explicit reset.

Wire format is ASCII key=value, fixed key order, '\\n'-terminated:

    controller -> client:
        IPOC=<u64>;E1=<mm>;A1=<deg>;...;A6=<deg>;RPM=<f>;DIN=<int>
    client -> controller:
        IPOC=<u64>;CE1=<mm>;CA1=<deg>;...;CA6=<deg>;DOUT=<int>

Values are rendered with six decimals (micro-units are the wire resolution).
Units are mm/deg on the wire only; everything else in this package is m/rad.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ClampViolationError, WireOrderError, WireParseError, WireRangeError

C2C = "controller_to_client"
CL2C = "client_to_controller"

CLAMP_MM = 1.0
CLAMP_DEG = 0.1
FAULT_MISS_LIMIT = 10
DEFAULT_CYCLE_MS = 12.0
DEFAULT_PORT = 49152

_C2C_KEYS = ("IPOC", "E1", "A1", "A2", "A3", "A4", "A5", "A6", "RPM", "DIN")
_CL2C_KEYS = ("IPOC", "CE1", "CA1", "CA2", "CA3", "CA4", "CA5", "CA6", "DOUT")

# digital-out bit assignments (client commands the tool through DOUT)
DOUT_GRIP_CLOSE = 1 << 0
DOUT_VACUUM_ON = 1 << 1
DOUT_SCREW_CW = 1 << 2
DOUT_SCREW_CCW = 1 << 3
DOUT_RPM_SHIFT = 16

# digital-in bit assignments (controller reports tool state)
DIN_GRIP_CLOSED = 1 << 0
DIN_VACUUM_ON = 1 << 1

_CLAMP_WIRE = np.array([CLAMP_MM] + [CLAMP_DEG] * 6)


def pack_dout(grip_close=False, vacuum_on=False, screw_cw=False,
              screw_ccw=False, rpm=0.0) -> int:
    bits = 0
    if grip_close:
        bits |= DOUT_GRIP_CLOSE
    if vacuum_on:
        bits |= DOUT_VACUUM_ON
    if screw_cw:
        bits |= DOUT_SCREW_CW
    if screw_ccw:
        bits |= DOUT_SCREW_CCW
    return bits | (int(round(rpm)) << DOUT_RPM_SHIFT)


def unpack_dout(dout: int) -> dict:
    return {
        "grip_close": bool(dout & DOUT_GRIP_CLOSE),
        "vacuum_on": bool(dout & DOUT_VACUUM_ON),
        "screw_cw": bool(dout & DOUT_SCREW_CW),
        "screw_ccw": bool(dout & DOUT_SCREW_CCW),
        "rpm": float(dout >> DOUT_RPM_SHIFT),
    }


@dataclass(frozen=True)
class CyclicFrame:
    direction: str                  # C2C | CL2C
    ipoc: int
    track_mm: float = 0.0           # C2C actuals
    joints_deg: tuple = (0.0,) * 6
    tool_rpm: float = 0.0
    digital_in: int = 0
    corrections: tuple = (0.0,) * 7  # CL2C: mm, deg x6
    digital_out: int = 0


def wire_to_si(track_mm: float, joints_deg) -> np.ndarray:
    q = np.empty(7)
    q[0] = track_mm * 1e-3
    q[1:] = np.deg2rad(joints_deg)
    return q


def si_to_wire(q: np.ndarray) -> tuple:
    return float(q[0] * 1e3), tuple(float(v) for v in np.rad2deg(q[1:]))


def corrections_to_si(corr_wire) -> np.ndarray:
    c = np.empty(7)
    c[0] = corr_wire[0] * 1e-3
    c[1:] = np.deg2rad(corr_wire[1:])
    return c


def _q6(x: float) -> float:
    """Wire resolution: micro-units."""
    return round(float(x), 6)


def frame_c2c(ipoc: int, q_si: np.ndarray, tool_rpm: float = 0.0,
              digital_in: int = 0) -> CyclicFrame:
    track_mm, joints_deg = si_to_wire(q_si)
    return CyclicFrame(direction=C2C, ipoc=ipoc, track_mm=_q6(track_mm),
                       joints_deg=tuple(_q6(j) for j in joints_deg),
                       tool_rpm=_q6(tool_rpm), digital_in=int(digital_in))


def frame_cl2c(ipoc: int, corrections_wire, digital_out: int = 0) -> CyclicFrame:
    return CyclicFrame(direction=CL2C, ipoc=ipoc,
                       corrections=tuple(_q6(c) for c in corrections_wire),
                       digital_out=int(digital_out))


def encode_frame(f: CyclicFrame) -> bytes:
    """Canonical ASCII rendering; rejects out-of-clamp corrections."""
    if f.ipoc < 0:
        raise ClampViolationError("ipoc must be non-negative")
    if f.direction == C2C:
        parts = [f"IPOC={f.ipoc}", f"E1={f.track_mm:.6f}"]
        parts += [f"A{i + 1}={v:.6f}" for i, v in enumerate(f.joints_deg)]
        parts.append(f"RPM={f.tool_rpm:.6f}")
        parts.append(f"DIN={f.digital_in}")
    elif f.direction == CL2C:
        for value, clamp in zip(f.corrections, _CLAMP_WIRE):
            if abs(value) > clamp + 1e-9:
                raise ClampViolationError(
                    f"correction {value} exceeds per-cycle clamp {clamp}")
        parts = [f"IPOC={f.ipoc}", f"CE1={f.corrections[0]:.6f}"]
        parts += [f"CA{i + 1}={v:.6f}" for i, v in enumerate(f.corrections[1:])]
        parts.append(f"DOUT={f.digital_out}")
    else:
        raise ClampViolationError(f"unknown direction {f.direction!r}")
    return (";".join(parts) + "\n").encode("ascii")


def decode_frame(data: bytes) -> CyclicFrame:
    """Strict parse: known keys only, declared order, clamped ranges."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise WireParseError("frame is not ASCII") from exc
    if not text.endswith("\n"):
        raise WireParseError("frame missing newline terminator")
    fields = text[:-1].split(";")
    keys = []
    values = {}
    for item in fields:
        if "=" not in item:
            raise WireParseError(f"malformed field {item!r}")
        k, v = item.split("=", 1)
        if k in values:
            raise WireParseError(f"duplicate key {k!r}")
        keys.append(k)
        values[k] = v

    key_set = set(keys)
    if key_set == set(_C2C_KEYS):
        expect = _C2C_KEYS
        direction = C2C
    elif key_set == set(_CL2C_KEYS):
        expect = _CL2C_KEYS
        direction = CL2C
    else:
        unknown = key_set - set(_C2C_KEYS) - set(_CL2C_KEYS)
        if unknown:
            raise WireParseError(f"unknown keys {sorted(unknown)}")
        raise WireParseError(f"missing keys for either direction: {keys}")
    if tuple(keys) != expect:
        raise WireOrderError(f"keys out of order: {keys}")

    def _int(key):
        try:
            return int(values[key])
        except ValueError as exc:
            raise WireParseError(f"{key} is not an integer") from exc

    def _float(key):
        try:
            return float(values[key])
        except ValueError as exc:
            raise WireParseError(f"{key} is not a number") from exc

    ipoc = _int("IPOC")
    if ipoc < 0:
        raise WireRangeError("IPOC must be non-negative")
    if direction == C2C:
        return CyclicFrame(
            direction=C2C, ipoc=ipoc, track_mm=_float("E1"),
            joints_deg=tuple(_float(f"A{i + 1}") for i in range(6)),
            tool_rpm=_float("RPM"), digital_in=_int("DIN"))
    corr = [_float("CE1")] + [_float(f"CA{i + 1}") for i in range(6)]
    for value, clamp in zip(corr, _CLAMP_WIRE):
        if abs(value) > clamp + 1e-9:
            raise WireRangeError(
                f"correction {value} exceeds per-cycle clamp {clamp}")
    return CyclicFrame(direction=CL2C, ipoc=ipoc, corrections=tuple(corr),
                       digital_out=_int("DOUT"))


# -- controller state machine ---------------------------------------------------

RUNNING = "running"
HOLDING = "holding"
FAULTED = "faulted"


@dataclass(frozen=True)
class LinkState:
    ipoc_next: int = 1
    last_sent: int = 0
    consecutive_misses: int = 0
    mode: str = RUNNING
    cycles: int = 0
    replies_accepted: int = 0
    replies_stale: int = 0


def reset_link(state: LinkState) -> LinkState:
    """Explicit fault reset; the only way out of Faulted."""
    return LinkState(ipoc_next=state.ipoc_next, last_sent=state.last_sent)


def apply_reply(state: LinkState, reply: CyclicFrame | None):
    """Reply handling half of the controller cycle.

    Returns (state after accounting, corrections in SI units, digital_out of
    the accepted reply or None). Advances ipoc bookkeeping for the frame the
    caller is about to emit.
    """
    corrections = np.zeros(7)
    dout = None
    misses = state.consecutive_misses
    mode = state.mode
    accepted = state.replies_accepted
    stale = state.replies_stale

    fresh = (reply is not None and reply.direction == CL2C
             and reply.ipoc == state.last_sent and state.last_sent > 0)
    if reply is not None and not fresh:
        stale += 1
    if mode == FAULTED:
        pass                        # terminal until reset_link
    elif fresh:
        wire = np.clip(np.asarray(reply.corrections, dtype=float),
                       -_CLAMP_WIRE, _CLAMP_WIRE)
        corrections = corrections_to_si(wire)
        dout = reply.digital_out
        misses = 0
        mode = RUNNING
        accepted += 1
    elif state.last_sent > 0:       # a frame was out there and went unanswered
        misses += 1
        mode = FAULTED if misses >= FAULT_MISS_LIMIT else HOLDING

    new_state = LinkState(ipoc_next=state.ipoc_next + 1,
                          last_sent=state.ipoc_next,
                          consecutive_misses=misses, mode=mode,
                          cycles=state.cycles + 1,
                          replies_accepted=accepted, replies_stale=stale)
    return new_state, corrections, dout


def controller_step(state: LinkState, reply: CyclicFrame | None, q_actual,
                    tool_rpm: float = 0.0, digital_in: int = 0):
    """One controller cycle.

    Applies the reply to the previously sent frame (if fresh), then emits the
    next outbound frame. Returns (state, outbound frame, corrections in SI
    units, digital_out of the accepted reply or None).
    """
    new_state, corrections, dout = apply_reply(state, reply)
    outbound = frame_c2c(new_state.last_sent, np.asarray(q_actual, dtype=float),
                         tool_rpm=tool_rpm, digital_in=digital_in)
    return new_state, outbound, corrections, dout


# -- client state machine --------------------------------------------------------


@dataclass(frozen=True)
class ClientState:
    last_ipoc: int = 0
    frames_seen: int = 0
    digital_out: int = 0


def client_step(state: ClientState, inbound: CyclicFrame | None, desired_q):
    """One client step per received frame: echo the ipoc, reply clamped
    corrections toward desired_q. No inbound, no reply."""
    if inbound is None or inbound.direction != C2C:
        return state, None
    actual = wire_to_si(inbound.track_mm, inbound.joints_deg)
    delta = np.asarray(desired_q, dtype=float) - actual
    wire = np.empty(7)
    wire[0] = delta[0] * 1e3
    wire[1:] = np.rad2deg(delta[1:])
    wire = np.clip(wire, -_CLAMP_WIRE, _CLAMP_WIRE)
    reply = frame_cl2c(inbound.ipoc, wire, digital_out=state.digital_out)
    new_state = replace(state, last_ipoc=inbound.ipoc,
                        frames_seen=state.frames_seen + 1)
    return new_state, reply


# -- deterministic network impairment ---------------------------------------------


@dataclass(frozen=True)
class Impairment:
    loss_prob: float = 0.0
    duplicate_prob: float = 0.0
    delay_choices: tuple = (0,)
    delay_probs: tuple = (1.0,)

    def __post_init__(self):
        for p in (self.loss_prob, self.duplicate_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must be in [0, 1]")
        if abs(sum(self.delay_probs) - 1.0) > 1e-9:
            raise ValueError("delay_probs must sum to 1")


def impair(net: Impairment, frame, cycle_now: int, rng) -> list:
    """Delivery schedule for one frame: list of (delivery_cycle, frame).

    Deterministic given the rng (pass np.random.Generator or an int seed);
    duplicates preserve content.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.Generator(np.random.PCG64(rng))
    if rng.random() < net.loss_prob:
        return []
    copies = 2 if rng.random() < net.duplicate_prob else 1
    out = []
    for _ in range(copies):
        delay = int(rng.choice(net.delay_choices, p=net.delay_probs))
        out.append((cycle_now + delay, frame))
    return out
