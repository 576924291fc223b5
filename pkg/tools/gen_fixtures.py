"""Regenerate the canonical robot and scene fixtures.

Run from the repo root:  python tools/gen_fixtures.py
The JSON outputs are committed; this script exists so the numbers stay
reproducible and tunable in one place.
"""

import json
import math
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "evbtwin", "fixtures")

D2R = math.pi / 180.0
SQ2 = math.sqrt(0.5)

# chain geometry (meters)
D1 = 0.400
A1 = 0.025
A2 = 0.560
A3 = 0.035
D4 = 0.515
D6 = 0.090

TRACK_Y = 1.0
TRACK_Z = 1.8


def robot_fixture():
    rx180 = [0.0, 1.0, 0.0, 0.0]  # 180 deg about X: arm hangs downward
    ident = [1.0, 0.0, 0.0, 0.0]
    links = [
        {"name": "a1", "position": [0.0, 0.0, 0.0], "quaternion": rx180,
         "axis": [0.0, 0.0, 1.0], "limits_rad": [-170 * D2R, 170 * D2R]},
        {"name": "a2", "position": [A1, 0.0, D1], "quaternion": ident,
         "axis": [0.0, 1.0, 0.0], "limits_rad": [-100 * D2R, 135 * D2R]},
        {"name": "a3", "position": [0.0, 0.0, A2], "quaternion": ident,
         "axis": [0.0, 1.0, 0.0], "limits_rad": [-154 * D2R, 154 * D2R]},
        {"name": "a4", "position": [A3, 0.0, D4], "quaternion": ident,
         "axis": [0.0, 0.0, 1.0], "limits_rad": [-165 * D2R, 165 * D2R]},
        {"name": "a5", "position": [0.0, 0.0, 0.0], "quaternion": ident,
         "axis": [0.0, 1.0, 0.0], "limits_rad": [-130 * D2R, 130 * D2R]},
        {"name": "a6", "position": [0.0, 0.0, 0.0], "quaternion": ident,
         "axis": [0.0, 0.0, 1.0], "limits_rad": [-350 * D2R, 350 * D2R]},
    ]
    return {
        "name": "kr10_track",
        "track_axis": [1.0, 0.0, 0.0],
        "track_limits_m": [0.0, 2.9],
        "mount": {"position": [0.0, TRACK_Y, TRACK_Z], "quaternion": ident},
        "links": links,
        "flange_offset": {"position": [0.0, 0.0, D6], "quaternion": ident},
        "vel_limits": {"track_m_s": 0.08, "joints_rad_s": [0.14] * 6},
        "home": [0.6, 0.0, 0.90, -1.40, 0.0, 0.50, 0.0],
        "collision": {
            "capsules": [
                {"name": "carriage", "frame": 0, "a": [0.0, 0.0, -0.04],
                 "b": [0.0, 0.0, 0.08], "radius": 0.11},
                {"name": "swing", "frame": 1, "a": [0.0, 0.0, 0.06],
                 "b": [A1, 0.0, D1 - 0.02], "radius": 0.09},
                {"name": "upper_arm", "frame": 2, "a": [0.0, 0.0, 0.0],
                 "b": [0.0, 0.0, A2], "radius": 0.075},
                {"name": "forearm", "frame": 3, "a": [0.0, 0.0, 0.0],
                 "b": [A3, 0.0, D4 - 0.09], "radius": 0.055},
                {"name": "wrist", "frame": 5, "a": [0.0, 0.0, -0.10],
                 "b": [0.0, 0.0, 0.05], "radius": 0.050},
                {"name": "flange_hub", "frame": 6, "a": [0.0, 0.0, 0.03],
                 "b": [0.0, 0.0, D6], "radius": 0.05},
            ],
            "self_pairs": [
                ["carriage", "forearm"], ["carriage", "wrist"],
                ["carriage", "flange_hub"], ["swing", "forearm"],
                ["swing", "wrist"], ["swing", "flange_hub"],
                ["upper_arm", "wrist"], ["upper_arm", "flange_hub"],
            ],
        },
    }


# EVB pack: 1.5 x 0.8 x 0.5 m, 174 kg, base frame at the center of the
# bottom face. Tray interior x [-0.72, 0.72], y [-0.37, 0.37], above z 0.03.
PACK_AT = [2.0, 1.0, 0.0]


def _box(ident, extents, pos, frame=None, quat=None):
    d = {"id": ident,
         "shape": {"kind": "box", "extents": list(extents)},
         "pose": {"position": list(pos), "quaternion": list(quat or [1, 0, 0, 0])}}
    if frame:
        d["frame"] = frame
    return d


def _comp(cid, shape, pos, tag, group, mass=0.1, preds=(), quat=None):
    return {
        "id": cid, "shape": shape,
        "local_pose": {"position": list(pos), "quaternion": list(quat or [1, 0, 0, 0])},
        "tag": tag, "mass_kg": mass, "group": group,
        "predecessors": list(preds),
    }


def _unscrew_tag():
    return {"strategy": "unscrew", "approach_dir": [0.0, 0.0, -1.0],
            "tool_id": "screwdriver",
            "params": {"pitch_m_per_rev": 0.00125, "engage_depth_m": 0.018}}


def scene_fixture():
    screw_shape = {"kind": "cylinder", "radius": 0.008, "length": 0.03}
    cover_screws = [
        _comp(f"cover_screw_{i+1}", screw_shape, [sx, sy, 0.517], _unscrew_tag(),
              "cover_screws", mass=0.02, preds=())
        for i, (sx, sy) in enumerate([(-0.70, -0.35), (-0.70, 0.35),
                                      (0.70, 0.35), (0.70, -0.35)])
    ]
    cover = _comp(
        "cover", {"kind": "box", "extents": [1.5, 0.8, 0.03]}, [0.0, 0.0, 0.485],
        {"strategy": "vacuum_lift", "approach_dir": [0.0, 0.0, -1.0],
         "tool_id": "vacuum_gripper",
         "params": {"lift_height_m": 0.10,
                    "grasp_offset_local": [0.55, -0.25, 0.0]}},
        "cover", mass=9.0, preds=[c["id"] for c in cover_screws])

    def conn(cid, pos, exit_dir):
        return _comp(
            cid, {"kind": "box", "extents": [0.06, 0.05, 0.04]}, pos,
            {"strategy": "connector_detach", "approach_dir": [0.0, 0.0, -1.0],
             "tool_id": "connector_gripper",
             "params": {"wiring_exit_dir": list(exit_dir),
                        "latch_height_m": 0.03, "pull_length_m": 0.04}},
            "connectors", mass=0.15, preds=["cover"])

    connectors = [
        conn("connector_a", [-0.30, 0.25, 0.44], [0.0, 1.0, 0.0]),
        conn("connector_b", [0.30, -0.25, 0.44], [0.0, -1.0, 0.0]),
    ]

    mscrew_shape = {"kind": "cylinder", "radius": 0.006, "length": 0.026}
    module_screws = [
        _comp(f"module_screw_{i+1}", mscrew_shape, [sx, sy, 0.397], _unscrew_tag(),
              "module_screws", mass=0.015, preds=["cover"])
        for i, (sx, sy) in enumerate([(-0.58, 0.26), (-0.10, -0.26),
                                      (0.10, 0.26), (0.58, -0.26)])
    ]

    pipe = _comp(
        "coolant_pipe", {"kind": "cylinder", "radius": 0.02, "length": 0.6},
        [0.0, -0.10, 0.404],
        # the shape pose rotates local z onto world x, so the world-down
        # approach is local +x
        {"strategy": "vacuum_lift", "approach_dir": [1.0, 0.0, 0.0],
         "tool_id": "vacuum_gripper", "params": {"lift_height_m": 0.16}},
        "pipe", mass=0.8, preds=["cover"],
        quat=[SQ2, 0.0, SQ2, 0.0])   # cylinder axis along local x

    def module(mid, x, screws):
        preds = screws + ["connector_a", "connector_b", "coolant_pipe"]
        return _comp(
            mid, {"kind": "box", "extents": [0.60, 0.64, 0.35]}, [x, 0.0, 0.207],
            {"strategy": "vacuum_lift", "approach_dir": [0.0, 0.0, -1.0],
             "tool_id": "vacuum_gripper", "params": {"lift_height_m": 0.32}},
            "modules", mass=62.0, preds=preds)

    modules = [
        module("module_a", -0.34, ["module_screw_1", "module_screw_2"]),
        module("module_b", 0.34, ["module_screw_3", "module_screw_4"]),
    ]

    statics = [
        _box("floor", [6.0, 4.0, 0.10], [1.5, 1.0, -0.05]),
        _box("pillar_1", [0.12, 0.12, 2.2], [-0.45, 0.20, 1.1]),
        _box("pillar_2", [0.12, 0.12, 2.2], [-0.45, 1.80, 1.1]),
        _box("pillar_3", [0.12, 0.12, 2.2], [3.35, 0.20, 1.1]),
        _box("pillar_4", [0.12, 0.12, 2.2], [3.35, 1.80, 1.1]),
        _box("tool_stand", [0.10, 0.10, 0.42], [0.85, 0.72, 0.21]),
        _box("sort_bin", [0.50, 0.35, 0.20], [2.55, 0.33, 0.10]),
        # lower enclosure of the pack, rides with the EVB base frame
        _box("tray_floor", [1.5, 0.8, 0.03], [0.0, 0.0, 0.015], frame="evb_base"),
        _box("tray_wall_xn", [0.03, 0.8, 0.30], [-0.735, 0.0, 0.15], frame="evb_base"),
        _box("tray_wall_xp", [0.03, 0.8, 0.30], [0.735, 0.0, 0.15], frame="evb_base"),
        _box("tray_wall_yn", [1.5, 0.03, 0.30], [0.0, -0.385, 0.15], frame="evb_base"),
        _box("tray_wall_yp", [1.5, 0.03, 0.30], [0.0, 0.385, 0.15], frame="evb_base"),
    ]

    def tool(tid, kind, slot_y, tip_len, radius):
        # collision capsule stops one radius short of the tip so engaged
        # poses (tip on the part) stay clear of the surrounding surface
        return {
            "id": tid, "kind": kind,
            "holder_pose": {"position": [0.85, slot_y, 0.82],
                            "quaternion": [0.0, 1.0, 0.0, 0.0]},  # flange z down
            "tcp_offset": {"position": [0.0, 0.0, tip_len], "quaternion": [1, 0, 0, 0]},
            "capsule": {"a": [0.0, 0.0, 0.03],
                        "b": [0.0, 0.0, tip_len - radius - 0.005],
                        "radius": radius},
        }

    tools = [
        tool("screwdriver", "screwdriver", 0.52, 0.20, 0.035),
        tool("vacuum_gripper", "vacuum_gripper", 0.72, 0.25, 0.050),
        tool("connector_gripper", "connector_gripper", 0.92, 0.22, 0.040),
    ]

    hx, hy, hz = 0.75, 0.40, 0.50
    feature_points = [[sx * hx, sy * hy, z]
                      for sx in (-1, 1) for sy in (-1, 1) for z in (0.0, hz)]

    return {
        "evb_type_id": "phev_pack_demo",
        "frames": [
            {"name": "evb_base", "parent": "world",
             "pose": {"position": PACK_AT, "quaternion": [1, 0, 0, 0]}},
            {"name": "bin_drop", "parent": "world",
             "pose": {"position": [2.55, 0.40, 0.50], "quaternion": [0, 1, 0, 0]}},
        ],
        "evb_base_frame": "evb_base",
        "components": (cover_screws + [cover] + connectors + module_screws
                       + [pipe] + modules),
        "statics": statics,
        "tools": tools,
        "feature_points": feature_points,
        "phase_labels": {
            "cover_screws": "Cover screw removal",
            "cover": "Battery cover removal",
            "connectors": "Wiring connectors detach",
            "module_screws": "Battery module screws removal",
            "modules": "Battery module removal",
            "pipe": "Coolant piping removal",
        },
    }


def costs_fixture():
    return {
        "investment_items": [
            {"label": "Robot and linear track", "eur": 39500},
            {"label": "Steel frame", "eur": 2600},
            {"label": "Automatic tool changer", "eur": 2808},
            {"label": "Vacuum gripper", "eur": 1140},
            {"label": "Wiring connector detach gripper", "eur": 2300},
            {"label": "EVB reverse design", "eur": 1100},
            {"label": "Digital twin creation", "eur": 8300},
            {"label": "User interface programming", "eur": 5600},
        ],
        "investment_cost_eur": 108256,
        "net_savings_eur_per_year": 100000,
        "tool_change_budget_s": 13.75,
    }


def manual_times_fixture():
    return {
        "rows": [
            {"label": "Cover screw removal", "seconds": 645},
            {"label": "Battery cover removal", "seconds": 6},
            {"label": "Wiring connectors detach", "seconds": 71},
            {"label": "Battery module screws removal", "seconds": 76},
        ],
        "printed_total_s": 258,
    }


def sus_survey_fixture():
    return {
        "scale": ["strongly disagree", "disagree", "neutral", "agree",
                  "strongly agree"],
        "distributions_pct": [
            [3.1, 21.9, 31.3, 40.6, 3.1],
            [18.7, 50.0, 21.9, 6.3, 3.1],
            [0.0, 20.0, 16.7, 43.3, 20.0],
            [25.8, 58.1, 6.4, 9.7, 0.0],
            [0.0, 20.0, 13.3, 66.7, 0.0],
            [16.7, 50.0, 16.6, 10.0, 6.7],
            [0.0, 9.7, 9.7, 51.6, 29.0],
            [9.7, 41.9, 12.9, 25.8, 9.7],
            [3.4, 23.3, 33.3, 33.3, 6.7],
            [28.1, 43.8, 12.5, 15.6, 0.0],
        ],
        "reported_mean": 65.4,
    }


def main():
    os.makedirs(OUT, exist_ok=True)
    outputs = {
        "kr10_track.twin.json": robot_fixture(),
        "phev_pack.scene.json": scene_fixture(),
        "costs.json": costs_fixture(),
        "manual_times.json": manual_times_fixture(),
        "sus_survey.json": sus_survey_fixture(),
    }
    for name, doc in outputs.items():
        with open(os.path.join(OUT, name), "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    print("fixtures written to", os.path.abspath(OUT))


if __name__ == "__main__":
    main()
