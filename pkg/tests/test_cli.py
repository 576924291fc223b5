import json

import numpy as np
from click.testing import CliRunner

from evbtwin.cli import robotsim_main, twin
from evbtwin.geometry import quat_from_axis_angle, quat_mul


def test_demo_analyze_sus_replay_round_trip(tmp_path, scene):
    runner = CliRunner()
    seq = tmp_path / "run.json"
    events = tmp_path / "events.ndjson"

    result = runner.invoke(twin, ["demo", "--out", str(seq),
                                  "--events", str(events)])
    assert result.exit_code == 0, result.output
    assert "sequence written" in result.output
    doc = json.loads(seq.read_text())
    assert len(doc["records"]) == 14
    assert events.read_text().count("\n") > 1000

    result = runner.invoke(twin, ["analyze", "--log", str(seq)])
    assert result.exit_code == 0, result.output
    assert "Cover screw removal" in result.output
    assert "ROI = -7.63 %" in result.output
    assert "robot slower" in result.output

    result = runner.invoke(twin, ["sus"])
    assert result.exit_code == 0
    assert "64.5" in result.output

    csv_path = tmp_path / "answers.csv"
    csv_path.write_text("5,1,5,1,5,1,5,1,5,1\n3,3,3,3,3,3,3,3,3,3\n")
    result = runner.invoke(twin, ["sus", "--responses", str(csv_path)])
    assert result.exit_code == 0
    assert "mean SUS: 75.0" in result.output

    # replay the demo run on a yawed + shifted pack
    base = scene.frame_pose(scene.evb_base_frame)
    moved_q = quat_mul(quat_from_axis_angle([0, 0, 1], np.deg2rad(8)),
                       base.orientation)
    pose_path = tmp_path / "pose.json"
    pose_path.write_text(json.dumps({
        "transform": {"position": [float(base.position[0] + 0.05),
                                   float(base.position[1]),
                                   float(base.position[2])],
                      "quaternion": [float(v) for v in moved_q]},
        "residual_m": 0.0,
    }))
    out = tmp_path / "report.json"
    result = runner.invoke(twin, ["replay", "--sequence", str(seq),
                                  "--pose", str(pose_path),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["max_pos_dev_m"] < 1e-6
    assert len(report["records"]) == 14


def test_help_screens():
    runner = CliRunner()
    for args in (["--help"], ["serve", "--help"], ["replay", "--help"],
                 ["analyze", "--help"], ["sus", "--help"], ["demo", "--help"]):
        assert runner.invoke(twin, args).exit_code == 0
    assert runner.invoke(robotsim_main, ["--help"]).exit_code == 0
