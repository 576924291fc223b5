"""Digital twin of the disassembly cell: frame tree, EVB components with
detach-strategy tags, static obstacles, tools.

A Scene is a value. Mutators return new Scene instances; the session module
owns the single authoritative copy and hands out snapshots.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import (AlreadyDetachedError, CycleError, DanglingRefError,
                     IllegalTransitionError, SchemaError, UnknownIdError)
from .geometry import Pose6D, mat_to_quat


class Strategy(str, Enum):
    UNSCREW = "unscrew"
    CONNECTOR_DETACH = "connector_detach"
    VACUUM_LIFT = "vacuum_lift"
    GRIP = "grip"


class CompState(str, Enum):
    ATTACHED = "attached"
    DETACHED = "detached"
    REMOVED = "removed"


_LEGAL_TRANSITIONS = {
    (CompState.ATTACHED, CompState.DETACHED),
    (CompState.DETACHED, CompState.REMOVED),
}

_REQUIRED_PARAMS = {
    Strategy.UNSCREW: ("pitch_m_per_rev", "engage_depth_m"),
    Strategy.CONNECTOR_DETACH: ("wiring_exit_dir", "latch_height_m", "pull_length_m"),
    Strategy.VACUUM_LIFT: ("lift_height_m",),
    Strategy.GRIP: (),
}


@dataclass(frozen=True)
class Shape:
    kind: str                   # "box" | "cylinder"
    extents: tuple = ()         # box: (lx, ly, lz) full lengths
    radius: float = 0.0         # cylinder
    length: float = 0.0         # cylinder, along local z

    def half_extents(self) -> np.ndarray:
        return np.array(self.extents) * 0.5

    def to_dict(self) -> dict:
        if self.kind == "box":
            return {"kind": "box", "extents": list(self.extents)}
        return {"kind": "cylinder", "radius": self.radius, "length": self.length}

    @staticmethod
    def from_dict(d: dict) -> "Shape":
        if d["kind"] == "box":
            ext = tuple(float(v) for v in d["extents"])
            if any(e <= 0 for e in ext):
                raise SchemaError(f"box extents must be positive: {ext}")
            return Shape("box", extents=ext)
        if d["kind"] == "cylinder":
            r, ln = float(d["radius"]), float(d["length"])
            if r <= 0 or ln <= 0:
                raise SchemaError("cylinder radius/length must be positive")
            return Shape("cylinder", radius=r, length=ln)
        raise SchemaError(f"unknown shape kind {d['kind']!r}")


@dataclass(frozen=True)
class Tag:
    strategy: Strategy
    approach_dir: np.ndarray     # unit, in component frame
    tool_id: str
    params: dict


@dataclass(frozen=True)
class Component:
    id: str
    shape: Shape
    local_pose: Pose6D           # in evb_base_frame
    tag: Tag
    mass_kg: float
    state: CompState = CompState.ATTACHED
    predecessors: tuple = ()
    group: str = ""


@dataclass(frozen=True)
class Obstacle:
    id: str
    shape: Shape
    pose: Pose6D
    frame: str = "world"


@dataclass(frozen=True, eq=False)
class ToolSpec:
    id: str
    kind: str                    # screwdriver | vacuum_gripper | connector_gripper
    holder_pose: Pose6D          # flange docking pose, world frame
    tcp_offset: Pose6D           # flange -> tool tip
    capsule_a: np.ndarray        # collision capsule in flange frame
    capsule_b: np.ndarray
    capsule_radius: float


@dataclass(frozen=True)
class Scene:
    frames: dict                 # name -> (parent_name | None, Pose6D)
    components: tuple
    statics: tuple
    tools: dict
    evb_base_frame: str
    feature_points: np.ndarray   # registration features, evb_base frame
    phase_labels: dict           # component group -> report label
    source_hash: str = ""
    evb_type_id: str = ""

    # -- lookups ------------------------------------------------------------

    def component(self, comp_id: str) -> Component:
        for c in self.components:
            if c.id == comp_id:
                return c
        raise UnknownIdError(f"unknown component {comp_id!r}")

    def has_component(self, comp_id: str) -> bool:
        return any(c.id == comp_id for c in self.components)

    def frame_pose(self, name: str) -> Pose6D:
        """World pose of a named frame."""
        if name not in self.frames:
            raise UnknownIdError(f"unknown frame {name!r}")
        pose = Pose6D.identity()
        chain = []
        cur = name
        while cur is not None:
            parent, local = self.frames[cur]
            chain.append(local)
            cur = parent
        for local in reversed(chain):
            pose = pose.compose(local)
        return pose

    # -- mutation (value semantics) ------------------------------------------

    def with_component_state(self, comp_id: str, new_state: CompState) -> "Scene":
        comp = self.component(comp_id)
        if (comp.state, new_state) not in _LEGAL_TRANSITIONS:
            raise IllegalTransitionError(
                f"{comp_id}: {comp.state.value} -> {new_state.value} is not allowed")
        comps = tuple(replace(c, state=new_state) if c.id == comp_id else c
                      for c in self.components)
        return replace(self, components=comps)

    def with_frame_pose(self, frame: str, pose: Pose6D) -> "Scene":
        if frame not in self.frames:
            raise UnknownIdError(f"unknown frame {frame!r}")
        parent, _ = self.frames[frame]
        frames = dict(self.frames)
        frames[frame] = (parent, pose)
        return replace(self, frames=frames)

    # -- reporting -------------------------------------------------------------

    def to_snapshot(self) -> dict:
        base = self.frame_pose(self.evb_base_frame)
        comps = []
        for c in self.components:
            wp = world_transform(self, c.id)
            comps.append({
                "id": c.id,
                "state": c.state.value,
                "group": c.group,
                "strategy": c.tag.strategy.value,
                "tool_id": c.tag.tool_id,
                "predecessors": list(c.predecessors),
                "shape": c.shape.to_dict(),
                "local_pose": c.local_pose.to_dict(),
                "world_pose": wp.to_dict(),
            })
        statics = []
        for o in self.statics:
            wp = self.frame_pose(o.frame).compose(o.pose)
            statics.append({"id": o.id, "shape": o.shape.to_dict(),
                            "world_pose": wp.to_dict()})
        return {
            "evb_type_id": self.evb_type_id,
            "scene_hash": self.source_hash,
            "evb_base_frame": self.evb_base_frame,
            "evb_base_pose": base.to_dict(),
            "components": comps,
            "statics": statics,
            "tools": sorted(self.tools),
        }


def set_component_state(scene: Scene, comp_id: str, new_state) -> Scene:
    if not isinstance(new_state, CompState):
        new_state = CompState(new_state)
    return scene.with_component_state(comp_id, new_state)


def world_transform(scene: Scene, ref_id: str) -> Pose6D:
    """World pose of a frame or a component (components live under evb_base)."""
    if ref_id in scene.frames:
        return scene.frame_pose(ref_id)
    if scene.has_component(ref_id):
        comp = scene.component(ref_id)
        return scene.frame_pose(scene.evb_base_frame).compose(comp.local_pose)
    raise UnknownIdError(f"unknown frame or component {ref_id!r}")


def _align_z_to(direction: np.ndarray) -> np.ndarray:
    """Rotation matrix whose +z column equals `direction` (unit), with a
    deterministic choice of the remaining axes."""
    z = np.asarray(direction, dtype=float)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(float(np.dot(ref, z))) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    x = ref - np.dot(ref, z) * z
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def approach_pose(scene: Scene, comp_id: str, standoff_m: float) -> Pose6D:
    """TCP pose standoff_m away from the component against its approach
    direction, tool axis aligned with the approach direction.

    The orientation is completed in the component frame, so the result is
    rigidly attached to the EVB: rebasing the pack moves approach poses with
    it exactly.
    """
    comp = scene.component(comp_id)
    if comp.state is not CompState.ATTACHED:
        raise AlreadyDetachedError(f"{comp_id} is {comp.state.value}, not attached")
    world = world_transform(scene, comp_id)
    r_local = _align_z_to(comp.tag.approach_dir)
    orientation = world.rotation_matrix() @ r_local
    d_world = world.rotation_matrix() @ comp.tag.approach_dir
    position = world.position - standoff_m * d_world
    return Pose6D(position, mat_to_quat(orientation))


def approach_dir_world(scene: Scene, comp_id: str) -> np.ndarray:
    comp = scene.component(comp_id)
    world = world_transform(scene, comp_id)
    return world.rotation_matrix() @ comp.tag.approach_dir


def blocking_predecessors(scene: Scene, comp_id: str) -> list:
    comp = scene.component(comp_id)
    return [p for p in comp.predecessors
            if scene.component(p).state is not CompState.REMOVED]


def topological_order(scene: Scene) -> list:
    """A valid disassembly order over component ids (stable w.r.t. input order)."""
    remaining = {c.id: set(c.predecessors) for c in scene.components}
    order = []
    while remaining:
        ready = [cid for cid in remaining if not remaining[cid]]
        if not ready:
            raise CycleError("precedence graph has a cycle")
        for cid in sorted(ready, key=lambda cid: [c.id for c in scene.components].index(cid)):
            order.append(cid)
            del remaining[cid]
            for deps in remaining.values():
                deps.discard(cid)
    return order


def _unit(v, what: str) -> np.ndarray:
    v = np.array(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise SchemaError(f"{what} must be a unit vector")
    v.setflags(write=False)
    return v


def _pose(d: dict) -> Pose6D:
    return Pose6D.from_dict(d)


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def load_scene(source) -> Scene:
    """Parse and validate a scene document (JSON path, file object or dict)."""
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)

    for key in ("frames", "components", "statics", "tools", "evb_base_frame"):
        if key not in doc:
            raise SchemaError(f"scene document missing field {key!r}")

    frames = {"world": (None, Pose6D.identity())}
    for f in doc["frames"]:
        try:
            name, parent = f["name"], f["parent"]
            pose = _pose(f["pose"])
        except KeyError as exc:
            raise SchemaError(f"frame missing field {exc}") from exc
        if name in frames:
            raise SchemaError(f"duplicate frame name {name!r}")
        frames[name] = (parent, pose)
    for name, (parent, _) in frames.items():
        if parent is not None and parent not in frames:
            raise DanglingRefError(f"frame {name!r} has unknown parent {parent!r}")
    # reject cycles / unrooted frames: walk each chain up to world
    for name in frames:
        seen = set()
        cur = name
        while cur is not None:
            if cur in seen:
                raise CycleError(f"frame graph cycle through {name!r}")
            seen.add(cur)
            cur = frames[cur][0]

    evb_base = doc["evb_base_frame"]
    if evb_base not in frames:
        raise DanglingRefError(f"evb_base_frame {evb_base!r} not among frames")

    tools = {}
    for t in doc["tools"]:
        try:
            tool = ToolSpec(
                id=t["id"], kind=t["kind"],
                holder_pose=_pose(t["holder_pose"]),
                tcp_offset=_pose(t["tcp_offset"]),
                capsule_a=np.array(t["capsule"]["a"], dtype=float),
                capsule_b=np.array(t["capsule"]["b"], dtype=float),
                capsule_radius=float(t["capsule"]["radius"]),
            )
        except KeyError as exc:
            raise SchemaError(f"tool missing field {exc}") from exc
        if tool.id in tools:
            raise SchemaError(f"duplicate tool id {tool.id!r}")
        tools[tool.id] = tool

    comp_ids = set()
    components = []
    for c in doc["components"]:
        try:
            tag_doc = c["tag"]
            strategy = Strategy(tag_doc["strategy"])
            tag = Tag(
                strategy=strategy,
                approach_dir=_unit(tag_doc["approach_dir"], f"{c['id']} approach_dir"),
                tool_id=tag_doc["tool_id"],
                params=dict(tag_doc.get("params", {})),
            )
            comp = Component(
                id=c["id"],
                shape=Shape.from_dict(c["shape"]),
                local_pose=_pose(c["local_pose"]),
                tag=tag,
                mass_kg=float(c.get("mass_kg", 0.0)),
                state=CompState(c.get("state", "attached")),
                predecessors=tuple(c.get("predecessors", [])),
                group=c.get("group", ""),
            )
        except KeyError as exc:
            raise SchemaError(f"component missing field {exc}") from exc
        if comp.id in comp_ids:
            raise SchemaError(f"duplicate component id {comp.id!r}")
        if comp.tag.tool_id not in tools:
            raise DanglingRefError(
                f"component {comp.id!r} references unknown tool {comp.tag.tool_id!r}")
        missing = [p for p in _REQUIRED_PARAMS[strategy] if p not in comp.tag.params]
        if missing:
            raise SchemaError(f"component {comp.id!r} tag missing params {missing}")
        if strategy is Strategy.CONNECTOR_DETACH:
            _unit(comp.tag.params["wiring_exit_dir"], f"{comp.id} wiring_exit_dir")
        comp_ids.add(comp.id)
        components.append(comp)

    for comp in components:
        for p in comp.predecessors:
            if p not in comp_ids:
                raise DanglingRefError(
                    f"component {comp.id!r} has unknown predecessor {p!r}")

    statics = []
    for o in doc["statics"]:
        frame = o.get("frame", "world")
        if frame not in frames:
            raise DanglingRefError(f"obstacle {o['id']!r} parented to unknown frame {frame!r}")
        statics.append(Obstacle(id=o["id"], shape=Shape.from_dict(o["shape"]),
                                pose=_pose(o["pose"]), frame=frame))

    feature_points = np.array(doc.get("feature_points", []), dtype=float).reshape(-1, 3)
    feature_points.setflags(write=False)

    scene = Scene(
        frames=frames,
        components=tuple(components),
        statics=tuple(statics),
        tools=tools,
        evb_base_frame=evb_base,
        feature_points=feature_points,
        phase_labels=dict(doc.get("phase_labels", {})),
        source_hash=hashlib.sha256(canonical_json(doc).encode()).hexdigest(),
        evb_type_id=doc.get("evb_type_id", ""),
    )
    topological_order(scene)   # raises CycleError on precedence cycles
    return scene
