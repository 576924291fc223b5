import json
from importlib import resources

import numpy as np
import pytest

from evbtwin import kernels
from evbtwin.kinematics import load_robot
from evbtwin.scene import load_scene

FIXTURES = resources.files("evbtwin") / "fixtures"
ROBOT_PATH = str(FIXTURES / "kr10_track.twin.json")
SCENE_PATH = str(FIXTURES / "phev_pack.scene.json")
COSTS_PATH = str(FIXTURES / "costs.json")
MANUAL_PATH = str(FIXTURES / "manual_times.json")
SUS_PATH = str(FIXTURES / "sus_survey.json")


@pytest.fixture(scope="session")
def model():
    return load_robot(ROBOT_PATH)


@pytest.fixture(scope="session")
def robot_doc():
    with open(ROBOT_PATH) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def home(robot_doc):
    return np.array(robot_doc["home"], dtype=float)


@pytest.fixture()
def scene():
    return load_scene(SCENE_PATH)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels(model):
    """Trigger JIT compilation once so timed tests measure the work, not the
    compiler (the on-disk cache makes later sessions cheap anyway)."""
    q = np.zeros((2, 7))
    kernels.fk_frames_batch(q, model.joint_pos, model.joint_rot,
                            model.joint_axes, model.joint_types,
                            model.flange_pos, model.flange_rot)
    seg = np.zeros((2, 3))
    seg2 = np.ones((2, 3))
    kernels.seg_seg_dist(seg, seg2, seg, seg2)
    kernels.capsules_vs_boxes(seg, seg2, np.ones(2), np.zeros((1, 3)),
                              np.eye(3)[None], np.ones((1, 3)))
    kernels.capsules_vs_cylinders(seg, seg2, np.ones(2), np.zeros((1, 3)),
                                  np.eye(3)[None], np.ones(1), np.ones(1))
    kernels.run_tracking_cycles(np.zeros((2, 7)), np.zeros(7), np.zeros(7),
                                model.limits_lo, model.limits_hi)
