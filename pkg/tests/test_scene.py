import copy
import json

import numpy as np
import pytest

from evbtwin.errors import (AlreadyDetachedError, CycleError, DanglingRefError,
                            IllegalTransitionError, SchemaError, UnknownIdError)
from evbtwin.geometry import Pose6D, quat_from_axis_angle
from evbtwin.scene import (CompState, approach_pose, load_scene,
                           set_component_state, topological_order,
                           world_transform)

from .conftest import SCENE_PATH


@pytest.fixture(scope="module")
def scene_doc():
    with open(SCENE_PATH) as fh:
        return json.load(fh)


def test_fixture_inventory(scene):
    groups = {}
    for c in scene.components:
        groups.setdefault(c.group, 0)
        groups[c.group] += 1
    assert groups == {"cover_screws": 4, "cover": 1, "connectors": 2,
                      "module_screws": 4, "modules": 2, "pipe": 1}
    assert len(scene.components) == 14
    assert set(scene.tools) == {"screwdriver", "vacuum_gripper",
                                "connector_gripper"}


def test_precedence_cycle_rejected(scene_doc):
    doc = copy.deepcopy(scene_doc)
    doc["components"][0]["predecessors"] = [doc["components"][1]["id"]]
    doc["components"][1]["predecessors"] = [doc["components"][0]["id"]]
    with pytest.raises(CycleError):
        load_scene(doc)


def test_empty_components_is_valid(scene_doc):
    doc = copy.deepcopy(scene_doc)
    doc["components"] = []
    scene = load_scene(doc)
    assert scene.components == ()
    assert topological_order(scene) == []


def test_schema_errors(scene_doc):
    doc = copy.deepcopy(scene_doc)
    del doc["components"][0]["shape"]
    with pytest.raises(SchemaError):
        load_scene(doc)

    doc = copy.deepcopy(scene_doc)
    doc["components"][0]["tag"]["tool_id"] = "laser"
    with pytest.raises(DanglingRefError):
        load_scene(doc)

    doc = copy.deepcopy(scene_doc)
    doc["components"][0]["predecessors"] = ["ghost"]
    with pytest.raises(DanglingRefError):
        load_scene(doc)

    doc = copy.deepcopy(scene_doc)
    doc["components"][0]["tag"]["params"] = {}
    with pytest.raises(SchemaError):
        load_scene(doc)

    doc = copy.deepcopy(scene_doc)
    doc["components"][0]["tag"]["approach_dir"] = [0, 0, -2]
    with pytest.raises(SchemaError):
        load_scene(doc)


def test_world_transform_identity_and_rotation(scene_doc):
    doc = copy.deepcopy(scene_doc)
    doc["frames"][0]["pose"] = {"position": [0, 0, 0], "quaternion": [1, 0, 0, 0]}
    scene = load_scene(doc)
    comp = scene.components[0]
    local = comp.local_pose.position
    assert np.allclose(world_transform(scene, comp.id).position, local)

    rot90 = quat_from_axis_angle([0, 0, 1], np.pi / 2)
    doc["frames"][0]["pose"] = {"position": [0, 0, 0],
                                "quaternion": [float(v) for v in rot90]}
    scene = load_scene(doc)
    world = world_transform(scene, comp.id).position
    assert np.allclose(world, [-local[1], local[0], local[2]], atol=1e-12)


def test_world_transform_matches_matrix_oracle(scene):
    rng = np.random.default_rng(21)
    # random chain of three frames, composed by plain 4x4 products
    def rand_pose():
        q = rng.normal(size=4)
        return Pose6D(rng.normal(size=3), q / np.linalg.norm(q))

    p1, p2, p3 = rand_pose(), rand_pose(), rand_pose()
    scene2 = scene.with_frame_pose(scene.evb_base_frame, p1)
    frames = dict(scene2.frames)
    frames["f2"] = (scene2.evb_base_frame, p2)
    frames["f3"] = ("f2", p3)
    import dataclasses
    scene2 = dataclasses.replace(scene2, frames=frames)

    def hom(p):
        t = np.eye(4)
        t[:3, :3] = p.rotation_matrix()
        t[:3, 3] = p.position
        return t

    expected = hom(p1) @ hom(p2) @ hom(p3)
    got = scene2.frame_pose("f3")
    assert np.allclose(hom(got), expected, atol=1e-12)


def test_world_transform_compose_property(scene):
    base = scene.frame_pose(scene.evb_base_frame)
    for comp in scene.components:
        direct = world_transform(scene, comp.id)
        composed = base.compose(comp.local_pose)
        assert direct.pos_error(composed) < 1e-12
        assert direct.rot_error(composed) < 1e-12


def test_unknown_id(scene):
    with pytest.raises(UnknownIdError):
        world_transform(scene, "nope")


def test_approach_pose_vertical_screw(scene):
    pose = approach_pose(scene, "cover_screw_1", 0.05)
    world = world_transform(scene, "cover_screw_1")
    # screw approach is straight down: standoff puts the TCP above the head
    assert np.allclose(pose.position, world.position + [0, 0, 0.05], atol=1e-12)
    assert np.allclose(pose.rotation_matrix()[:, 2], [0, 0, -1], atol=1e-12)
    zero = approach_pose(scene, "cover_screw_1", 0.0)
    assert np.allclose(zero.position, world.position, atol=1e-12)


def test_approach_pose_horizontal_screw(scene_doc):
    # a screw mounted horizontally: approach offset must be horizontal
    doc = copy.deepcopy(scene_doc)
    screw = copy.deepcopy(doc["components"][0])
    screw["id"] = "side_screw"
    screw["tag"]["approach_dir"] = [0.0, -1.0, 0.0]
    screw["local_pose"]["position"] = [0.0, -0.45, 0.25]
    doc["components"].append(screw)
    scene = load_scene(doc)
    pose = approach_pose(scene, "side_screw", 0.08)
    world = world_transform(scene, "side_screw")
    offset = pose.position - world.position
    assert abs(offset[2]) < 1e-12
    assert np.allclose(offset, [0.0, 0.08, 0.0], atol=1e-12)
    assert np.allclose(pose.rotation_matrix()[:, 2], [0, -1, 0], atol=1e-12)


def test_approach_pose_requires_attached(scene):
    scene = set_component_state(scene, "cover_screw_1", CompState.DETACHED)
    with pytest.raises(AlreadyDetachedError):
        approach_pose(scene, "cover_screw_1", 0.05)


def test_state_transitions(scene):
    s = set_component_state(scene, "cover_screw_1", CompState.DETACHED)
    s = set_component_state(s, "cover_screw_1", CompState.REMOVED)
    assert s.component("cover_screw_1").state is CompState.REMOVED
    with pytest.raises(IllegalTransitionError):
        set_component_state(s, "cover_screw_1", CompState.ATTACHED)
    with pytest.raises(IllegalTransitionError):
        set_component_state(scene, "cover_screw_1", CompState.REMOVED)
    # original scene untouched (value semantics)
    assert scene.component("cover_screw_1").state is CompState.ATTACHED


def test_removal_does_not_move_other_components(scene):
    before = {c.id: world_transform(scene, c.id) for c in scene.components}
    s = set_component_state(scene, "cover_screw_2", CompState.DETACHED)
    s = set_component_state(s, "cover_screw_2", CompState.REMOVED)
    for c in s.components:
        assert world_transform(s, c.id).pos_error(before[c.id]) < 1e-15


def test_topological_order_respects_precedence(scene):
    order = topological_order(scene)
    position = {cid: i for i, cid in enumerate(order)}
    for comp in scene.components:
        for pred in comp.predecessors:
            assert position[pred] < position[comp.id]


def test_scene_hash_stable(scene_doc):
    a = load_scene(copy.deepcopy(scene_doc))
    b = load_scene(copy.deepcopy(scene_doc))
    assert a.source_hash == b.source_hash
    changed = copy.deepcopy(scene_doc)
    changed["components"][0]["mass_kg"] = 9.99
    assert load_scene(changed).source_hash != a.source_hash
