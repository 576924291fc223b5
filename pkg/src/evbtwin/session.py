"""Teleoperation session: point-and-click detach commands executed through
the cyclic link against the simulated controller, with sequence recording,
deterministic serialization, and pose-rebased replay.

Scene state is a pure fold over completed records; one skill executes at a
time; all timestamps come from the simulated clock so identical seeds give
byte-identical sequence files and event logs.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import link, registration, skills
from .errors import (BusyError, EmptySessionError, LinkFaultedError,
                     ReplayAbortedError, SceneMismatchError, TwinError)
from .geometry import Pose6D
from .kinematics import RobotModel
from .registration import PoseUpdate
from .robotsim import RobotController
from .scene import Scene
from .skills import SkillPlan, compile_skill

JOINT_EVENT_HZ = 30.0
SETTLE_TOL_RAD = 2e-7
SETTLE_MAX_CYCLES = 1000
FORMAT_VERSION = 1

COMPLETED = "completed"
ABORTED = "aborted"


@dataclass(frozen=True)
class OperationRecord:
    index: int
    component_id: str
    strategy: str
    tool_id: str
    started_us: int
    duration_s: float
    outcome: str                      # completed | aborted
    group: str = ""
    abort_reason: str = ""
    terminal_tcp: Pose6D | None = None
    tcp_waypoints: tuple = ()
    skill_plan: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "component_id": self.component_id,
            "strategy": self.strategy,
            "tool_id": self.tool_id,
            "started_us": self.started_us,
            "duration_s": self.duration_s,
            "outcome": self.outcome,
            "group": self.group,
            "abort_reason": self.abort_reason,
            "terminal_tcp": self.terminal_tcp.to_dict() if self.terminal_tcp else None,
            "tcp_waypoints": [p.to_dict() for p in self.tcp_waypoints],
            "skill_plan": self.skill_plan,
        }

    @staticmethod
    def from_dict(d: dict) -> "OperationRecord":
        return OperationRecord(
            index=int(d["index"]),
            component_id=d["component_id"],
            strategy=d["strategy"],
            tool_id=d["tool_id"],
            started_us=int(d["started_us"]),
            duration_s=float(d["duration_s"]),
            outcome=d["outcome"],
            group=d.get("group", ""),
            abort_reason=d.get("abort_reason", ""),
            terminal_tcp=(Pose6D.from_dict(d["terminal_tcp"])
                          if d.get("terminal_tcp") else None),
            tcp_waypoints=tuple(Pose6D.from_dict(p)
                                for p in d.get("tcp_waypoints", [])),
            skill_plan=d.get("skill_plan", {}),
        )


def _plan_summary(plan: SkillPlan) -> dict:
    return {
        "tool_id": plan.tool_id,
        "expected_duration_s": plan.expected_duration_s,
        "phases": [{
            "name": p.name,
            "duration_s": p.duration_s,
            "anchored": p.anchored,
            "is_tool_change": p.is_tool_change,
            "tool_command": ([p.tool_command.kind, p.tool_command.rpm]
                             if p.tool_command else None),
        } for p in plan.phases],
    }


def canonical_json(doc) -> str:
    """Deterministic serialization: sorted keys, shortest-round-trip floats."""
    return json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


class _Subscriber:
    def __init__(self, maxsize: int):
        self.q = queue.Queue(maxsize=maxsize)


class Session:
    """Owns the authoritative scene, the simulated controller, the command
    queue (serialized by a lock), the record list and the event stream."""

    def __init__(self, scene: Scene, model: RobotModel, home_q,
                 start_tool: str = "screwdriver",
                 cycle_ms: float = link.DEFAULT_CYCLE_MS,
                 time_scale: float = 0.0, seed: int = 0,
                 fast_loop: bool = False):
        self.pristine_scene = scene
        self.scene = scene
        self.model = model
        self.home_q = np.asarray(home_q, dtype=float)
        self.current_tool = start_tool
        self.cycle_s = cycle_ms * 1e-3
        self.cycle_us = int(round(cycle_ms * 1e3))
        self.time_scale = time_scale
        self.seed = seed
        # fast_loop batches the per-cycle servo recurrence through a compiled
        # kernel with identical semantics (used by replay for throughput);
        # the default path exchanges link frames cycle by cycle
        self.fast_loop = fast_loop and time_scale <= 0
        self.records: list = []
        self.event_log: list = []
        self.q_planned = self.home_q.copy()
        self.controller = RobotController(model, self.home_q, cycle_ms)
        self.client_state = link.ClientState()
        self._exec_lock = threading.Lock()
        self._subs: dict = {}
        self._subs_lock = threading.Lock()
        self._next_sub = 0
        self._seq = 0
        self._pending_reply: link.CyclicFrame | None = None
        self._pending_corr = np.zeros(7)
        self._joint_event_every = max(1, int((1.0 / JOINT_EVENT_HZ) / self.cycle_s))
        self._cycle_count = 0

    # -- event stream -----------------------------------------------------------

    def subscribe(self, maxsize: int = 4096):
        """Late subscribers get a full snapshot first, then live events."""
        sub = _Subscriber(maxsize)
        with self._subs_lock:
            sid = self._next_sub
            self._next_sub += 1
            self._subs[sid] = sub
        sub.q.put(self.snapshot())
        return sid, sub.q

    def unsubscribe(self, sid: int):
        with self._subs_lock:
            self._subs.pop(sid, None)

    @property
    def busy(self) -> bool:
        return self._exec_lock.locked()

    def snapshot(self) -> dict:
        return {
            "type": "snapshot",
            "t_us": self.controller.sim.clock_us,
            "scene": self.scene.to_snapshot(),
            "robot": self.model.to_dict(),
            "tools": {tid: {"tcp_offset": t.tcp_offset.to_dict(),
                            "capsule": {"a": [float(v) for v in t.capsule_a],
                                        "b": [float(v) for v in t.capsule_b],
                                        "radius": t.capsule_radius}}
                      for tid, t in self.scene.tools.items()},
            "q": [float(v) for v in self.controller.sim.q_actual],
            "current_tool": self.current_tool,
            "records": [r.to_dict() for r in self.records],
            "busy": self._exec_lock.locked(),
        }

    def _emit(self, event: dict, log: bool = True):
        event = dict(event)
        event["seq"] = self._seq
        self._seq += 1
        if log:
            self.event_log.append(event)
        with self._subs_lock:
            subs = list(self._subs.values())
        for sub in subs:
            # ring semantics: the newest event always enters, the oldest
            # leaves; consumers detect the hole from the seq discontinuity
            # (the HTTP stream turns it into an explicit gap marker)
            try:
                sub.q.put_nowait(event)
            except queue.Full:
                try:
                    sub.q.get_nowait()
                except queue.Empty:
                    pass
                try:
                    sub.q.put_nowait(event)
                except queue.Full:
                    pass

    def heartbeat(self):
        self._emit({"type": "heartbeat", "t_us": self.controller.sim.clock_us},
                   log=False)

    # -- cyclic execution ---------------------------------------------------------

    def _one_cycle(self, desired_q):
        """Full-duplex loopback cycle: controller frame -> client reply.

        Frames are exchanged in memory; the constructors already quantize to
        the wire resolution, so semantics match the byte path exactly (the
        codec itself is exercised by the protocol suite and the UDP binding).
        """
        wall0 = time.monotonic() if self.time_scale > 0 else 0.0
        inbound = self.controller.cycle(self._pending_reply)
        self.client_state, reply = link.client_step(self.client_state, inbound,
                                                    desired_q)
        self._pending_reply = reply
        if self.controller.link_state.mode == link.FAULTED:
            raise LinkFaultedError("cyclic link faulted during execution")
        self._cycle_count += 1
        if self._cycle_count % self._joint_event_every == 0:
            sim = self.controller.sim
            self._emit({"type": "joint_state", "t_us": sim.clock_us,
                        "q": [float(v) for v in sim.q_actual],
                        "tool_rpm": sim.tool_rpm, "gripper": sim.gripper,
                        "vacuum": sim.vacuum})
        if self.time_scale > 0:
            remaining = self.cycle_s / self.time_scale - (time.monotonic() - wall0)
            if remaining > 0:
                time.sleep(remaining)

    def _set_tool_bits(self, command: skills.ToolCommand):
        d = link.unpack_dout(self.client_state.digital_out)
        kind = command.kind
        if kind == "screw_ccw":
            d.update(screw_ccw=True, screw_cw=False, rpm=command.rpm)
        elif kind == "screw_cw":
            d.update(screw_cw=True, screw_ccw=False, rpm=command.rpm)
        elif kind == "screw_stop":
            d.update(screw_cw=False, screw_ccw=False, rpm=0.0)
        elif kind == "grip_close":
            d["grip_close"] = True
        elif kind == "grip_open":
            d["grip_close"] = False
        elif kind == "vacuum_on":
            d["vacuum_on"] = True
        elif kind == "vacuum_off":
            d["vacuum_on"] = False
        self.client_state = replace(self.client_state,
                                    digital_out=link.pack_dout(**d))

    def _run_fast(self, desired: np.ndarray):
        """Batched cycles through the compiled servo recurrence (same math as
        the frame loop at wire quantization)."""
        from . import kernels
        sim = self.controller.sim
        q_rows, q_final, self._pending_corr = kernels.run_tracking_cycles(
            desired, sim.q_actual, self._pending_corr,
            self.model.limits_lo, self.model.limits_hi)
        n = len(desired)
        t0 = sim.clock_us
        for k in range(n):
            self._cycle_count += 1
            if self._cycle_count % self._joint_event_every == 0:
                self._emit({"type": "joint_state",
                            "t_us": t0 + (k + 1) * self.cycle_us,
                            "q": [float(v) for v in q_rows[k]],
                            "tool_rpm": sim.tool_rpm, "gripper": sim.gripper,
                            "vacuum": sim.vacuum})
        self.controller.sim = replace(sim, q_actual=q_final,
                                      clock_us=t0 + n * self.cycle_us)
        self.controller.link_state = replace(
            self.controller.link_state,
            ipoc_next=self.controller.link_state.ipoc_next + n,
            last_sent=self.controller.link_state.last_sent + n,
            cycles=self.controller.link_state.cycles + n,
            replies_accepted=self.controller.link_state.replies_accepted + n)

    def _execute_phase_fast(self, phase: skills.Phase):
        from . import robotsim
        if phase.tool_command is not None:
            self._set_tool_bits(phase.tool_command)
            self.controller.sim = robotsim.set_tool_command(
                self.controller.sim, phase.tool_command)
        traj = phase.trajectory
        end = traj.end
        if traj.duration_s > 0:
            n = max(1, int(np.ceil(traj.duration_s / self.cycle_s)))
            ts = np.minimum(np.arange(1, n + 1) * self.cycle_s, traj.duration_s)
            desired = np.empty((n, 7))
            for i in range(7):
                desired[:, i] = np.interp(ts, traj.times, traj.waypoints[:, i])
            desired[-1] = end
            self._run_fast(desired)
        settle = 0
        while np.max(np.abs(self.controller.sim.q_actual - end)) > SETTLE_TOL_RAD:
            self._run_fast(np.broadcast_to(end, (8, 7)))
            settle += 8
            if settle > SETTLE_MAX_CYCLES:
                raise LinkFaultedError(f"phase {phase.name!r} failed to settle")
        n_dwell = int(round(phase.dwell_s / self.cycle_s))
        if n_dwell:
            self._run_fast(np.broadcast_to(end, (n_dwell, 7)))

    def _execute_phase(self, rec_index: int, component_id: str,
                       phase: skills.Phase):
        self._emit({"type": "phase", "t_us": self.controller.sim.clock_us,
                    "record_index": rec_index, "component_id": component_id,
                    "phase": phase.name, "status": "start"})
        if self.fast_loop:
            self._execute_phase_fast(phase)
        else:
            if phase.tool_command is not None:
                self._set_tool_bits(phase.tool_command)
            traj = phase.trajectory
            n = max(1, int(np.ceil(traj.duration_s / self.cycle_s)))
            if traj.duration_s > 0:
                for k in range(1, n + 1):
                    t = min(k * self.cycle_s, traj.duration_s)
                    self._one_cycle(traj.sample(t))
            end = traj.end
            settle = 0
            while np.max(np.abs(self.controller.sim.q_actual - end)) > SETTLE_TOL_RAD:
                self._one_cycle(end)
                settle += 1
                if settle > SETTLE_MAX_CYCLES:
                    raise LinkFaultedError(
                        f"phase {phase.name!r} failed to settle")
            for _ in range(int(round(phase.dwell_s / self.cycle_s))):
                self._one_cycle(end)
        if phase.tool_transition is not None:
            action, tool_id = phase.tool_transition
            self.current_tool = tool_id if action == "mount" else None
            self._emit({"type": "tool", "t_us": self.controller.sim.clock_us,
                        "action": action, "tool_id": tool_id})
        for comp_id, new_state in phase.on_complete:
            self.scene = self.scene.with_component_state(comp_id, new_state)
            self._emit({"type": "component_state",
                        "t_us": self.controller.sim.clock_us,
                        "id": comp_id, "state": new_state.value})
        self._emit({"type": "phase", "t_us": self.controller.sim.clock_us,
                    "record_index": rec_index, "component_id": component_id,
                    "phase": phase.name, "status": "end"})

    # -- commands -----------------------------------------------------------------

    def handle_detach_command(self, component_id: str) -> OperationRecord:
        """Compile and execute the detach skill for one component.

        Appends a Completed record (scene updated) or an Aborted record
        (scene rolled back). Raises Busy if a skill is already executing;
        precedence and planning errors surface to the caller after the
        Aborted record is appended.
        """
        if not self._exec_lock.acquire(blocking=False):
            raise BusyError("a skill is already executing")
        try:
            index = len(self.records)
            started_us = self.controller.sim.clock_us
            scene_before = self.scene
            tool_before = self.current_tool
            comp = self.scene.component(component_id)
            try:
                plan = compile_skill(self.scene, self.model, component_id,
                                     self.q_planned, self.current_tool)
                for phase in plan.phases:
                    self._execute_phase(index, component_id, phase)
            except TwinError as exc:
                self.scene = scene_before
                self.current_tool = tool_before
                record = OperationRecord(
                    index=index, component_id=component_id,
                    strategy=comp.tag.strategy.value, tool_id=comp.tag.tool_id,
                    started_us=started_us, duration_s=0.0, outcome=ABORTED,
                    group=comp.group,
                    abort_reason=f"{type(exc).__name__}: {exc}")
                self.records.append(record)
                self._emit({"type": "record", "t_us": self.controller.sim.clock_us,
                            "index": index, "component_id": component_id,
                            "outcome": ABORTED,
                            "reason": record.abort_reason})
                raise
            self.q_planned = plan.end_q.copy()
            duration = (self.controller.sim.clock_us - started_us) * 1e-6
            record = OperationRecord(
                index=index, component_id=component_id,
                strategy=comp.tag.strategy.value, tool_id=plan.tool_id,
                started_us=started_us, duration_s=duration, outcome=COMPLETED,
                group=comp.group,
                terminal_tcp=plan.terminal_tcp(),
                tcp_waypoints=tuple(plan.tcp_waypoints()),
                skill_plan=_plan_summary(plan))
            self.records.append(record)
            self._emit({"type": "record", "t_us": self.controller.sim.clock_us,
                        "index": index, "component_id": component_id,
                        "outcome": COMPLETED, "duration_s": duration})
            return record
        finally:
            self._exec_lock.release()

    def apply_pose_update(self, update: PoseUpdate,
                          residual_gate_m: float = registration.RESIDUAL_GATE_M):
        self.scene = registration.rebase_scene(self.scene, update,
                                               residual_gate_m)
        self._emit({"type": "pose_update", "t_us": self.controller.sim.clock_us,
                    **update.to_dict()})

    # -- sequence files --------------------------------------------------------------

    def sequence_document(self) -> dict:
        completed = [r for r in self.records if r.outcome == COMPLETED]
        if not completed:
            raise EmptySessionError("no completed records to save")
        return {
            "format_version": FORMAT_VERSION,
            "evb_type_id": self.scene.evb_type_id,
            "scene_hash": self.scene.source_hash,
            "created_us": self.controller.sim.clock_us,
            "evb_base_pose": self.pristine_scene.frame_pose(
                self.pristine_scene.evb_base_frame).to_dict(),
            "records": [r.to_dict() for r in self.records],
        }

    def save_sequence(self, path) -> dict:
        doc = self.sequence_document()
        try:
            with open(path, "w") as fh:
                fh.write(canonical_json(doc))
        except OSError as exc:
            raise IOError(f"cannot write sequence file: {exc}") from exc
        return doc

    def replay_sequence(self, doc: dict, pose_update: PoseUpdate,
                        residual_gate_m: float = registration.RESIDUAL_GATE_M) -> dict:
        """Re-plan and re-execute a recorded sequence on the rebased scene.

        Requires a fresh session on the same scene fixture. Reports, per
        completed record, the replayed terminal TCP pose and its deviation
        from the recorded pose composed with the rigid rebase displacement.
        """
        if doc.get("scene_hash") != self.scene.source_hash:
            raise SceneMismatchError(
                "sequence was recorded on a different scene fixture")
        if self.records:
            raise SceneMismatchError("replay requires a fresh session")
        self.apply_pose_update(pose_update, residual_gate_m)

        recorded_base = Pose6D.from_dict(doc["evb_base_pose"])
        displacement = pose_update.transform.compose(recorded_base.inverse())

        report = {"records": [], "max_pos_dev_m": 0.0, "max_rot_dev_rad": 0.0}
        for rec_doc in sorted(doc["records"], key=lambda r: r["index"]):
            rec = OperationRecord.from_dict(rec_doc)
            if rec.outcome != COMPLETED:
                continue
            try:
                new_rec = self.handle_detach_command(rec.component_id)
            except TwinError as exc:
                raise ReplayAbortedError(rec.index, str(exc)) from exc
            expected = (displacement.compose(rec.terminal_tcp)
                        if rec.terminal_tcp is not None else None)
            entry = {"index": rec.index, "component_id": rec.component_id,
                     "terminal_tcp": (new_rec.terminal_tcp.to_dict()
                                      if new_rec.terminal_tcp else None)}
            if expected is not None and new_rec.terminal_tcp is not None:
                pos_dev = expected.pos_error(new_rec.terminal_tcp)
                rot_dev = expected.rot_error(new_rec.terminal_tcp)
                entry["expected_tcp"] = expected.to_dict()
                entry["pos_dev_m"] = pos_dev
                entry["rot_dev_rad"] = rot_dev
                report["max_pos_dev_m"] = max(report["max_pos_dev_m"], pos_dev)
                report["max_rot_dev_rad"] = max(report["max_rot_dev_rad"], rot_dev)
            report["records"].append(entry)
        return report


def load_sequence(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
