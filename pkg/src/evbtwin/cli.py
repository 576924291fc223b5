"""Command-line entry points: twin (server/replay/analyze/sus/demo),
twin-server, and the standalone robotsim controller endpoint."""

from __future__ import annotations

import csv
import json
import logging
import os
import sys
from importlib import resources

import click
import numpy as np

from . import analysis, link
from .kinematics import load_robot
from .registration import PoseUpdate
from .scene import load_scene, topological_order
from .session import Session, canonical_json, load_sequence

log = logging.getLogger("evbtwin")


def _setup_logging():
    level = os.environ.get("TWIN_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _fixture(name: str) -> str:
    return str(resources.files("evbtwin") / "fixtures" / name)


def _load_cell(robot_path, scene_path):
    model = load_robot(robot_path or _fixture("kr10_track.twin.json"))
    scene = load_scene(scene_path or _fixture("phev_pack.scene.json"))
    with open(robot_path or _fixture("kr10_track.twin.json")) as fh:
        home = np.array(json.load(fh).get("home", [0.0] * 7), dtype=float)
    return model, scene, home


robot_opt = click.option("--robot", type=click.Path(exists=True), default=None,
                         help="robot fixture JSON (default: packaged KR10+track)")
scene_opt = click.option("--scene", "scene_path", type=click.Path(exists=True),
                         default=None,
                         help="scene fixture JSON (default: packaged PHEV pack)")


@click.group()
def twin():
    """Digital-twin teleoperation suite for battery-pack disassembly."""
    _setup_logging()


@twin.command()
@robot_opt
@scene_opt
@click.option("--http", "http_addr", default="127.0.0.1:8080",
              help="HTTP service bind address")
@click.option("--listen", default=None,
              help="UDP bind for an external robotsim (default: in-process sim)")
@click.option("--cycle-ms", default=link.DEFAULT_CYCLE_MS, show_default=True)
@click.option("--time-scale", default=1.0, show_default=True,
              help="1.0 real time, 0 as fast as possible")
@click.option("--seed", default=0, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="serve an operator-console build at /ui")
def serve(robot, scene_path, http_addr, listen, cycle_ms, time_scale, seed,
          ui_dir):
    """Run the twin server: session + HTTP API (+ optional UDP robot link)."""
    import uvicorn

    from .service import create_app

    model, scene, home = _load_cell(robot, scene_path)
    session = Session(scene, model, home, cycle_ms=cycle_ms,
                      time_scale=time_scale, seed=seed)
    if listen:
        from .transport import RemoteControllerProxy
        session.controller = RemoteControllerProxy(model, home, listen,
                                                   cycle_ms)
        log.info("waiting for robotsim frames on udp://%s", listen)
    app = create_app(session)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    host, _, port = http_addr.rpartition(":")
    log.info("twin server on http://%s", http_addr)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port),
                log_level="warning")


@twin.command()
@robot_opt
@scene_opt
@click.option("--sequence", required=True, type=click.Path(exists=True),
              help="sequence JSON saved by a recording session")
@click.option("--pose", required=True, type=click.Path(exists=True),
              help="pose update JSON ({'transform': ..., 'residual_m': ...})")
@click.option("--out", type=click.Path(), default=None,
              help="write the replay report JSON here")
def replay(robot, scene_path, sequence, pose, out):
    """Replay a recorded sequence on a rebased scene and report deviations."""
    model, scene, home = _load_cell(robot, scene_path)
    doc = load_sequence(sequence)
    with open(pose) as fh:
        update = PoseUpdate.from_dict(json.load(fh))
    session = Session(scene, model, home, fast_loop=True)
    report = session.replay_sequence(doc, update)
    text = canonical_json(report)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    click.echo(f"replayed {len(report['records'])} records: "
               f"max dev {report['max_pos_dev_m']:.2e} m / "
               f"{report['max_rot_dev_rad']:.2e} rad")
    if not out:
        click.echo(text)


@twin.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True),
              help="run log: sequence JSON from a session")
@click.option("--costs", "costs_path", type=click.Path(exists=True),
              default=None, help="cost model JSON (default: packaged fixture)")
@click.option("--manual", "manual_path", type=click.Path(exists=True),
              default=None, help="manual reference timings JSON")
@scene_opt
def analyze(log_path, costs_path, manual_path, scene_path):
    """Phase-time table, manual comparison and ROI from a run log."""
    costs = analysis.load_costs(costs_path or _fixture("costs.json"))
    manual, printed = analysis.load_manual_table(
        manual_path or _fixture("manual_times.json"))
    scene = load_scene(scene_path or _fixture("phev_pack.scene.json"))
    doc = load_sequence(log_path)
    report = analysis.analyze_run(doc["records"], scene.phase_labels, costs,
                                  manual, printed)
    click.echo(f"{'phase':38s} {'robot s':>9s}")
    for row in report["phase_table"]["rows"]:
        click.echo(f"{row['label']:38s} {row['seconds']:9.1f}")
    click.echo(f"{'total':38s} {report['phase_table']['total_s']:9.1f}")
    if "comparison" in report:
        click.echo("\nvs manual reference:")
        for row in report["comparison"]["rows"]:
            flag = "  (robot slower)" if row["robot_slower"] else ""
            click.echo(f"{row['label']:38s} manual {row['manual_s']:7.1f}  "
                       f"robot {row['robot_s']:7.1f}  x{row['ratio']:.2f}{flag}")
        if report.get("manual_total_discrepancy"):
            click.echo(f"note: manual rows sum to "
                       f"{report['manual_rows_total_s']:.0f} s but the "
                       f"published total is {report['manual_printed_total_s']:.0f} s")
    click.echo(f"\ninvestment items total: {report['investment_items_total_eur']:.0f} EUR "
               f"(published total {report['investment_cost_eur']:.0f} EUR)")
    click.echo(f"ROI = {report['roi'] * 100:.2f} %")
    click.echo("\n" + canonical_json(report))


@twin.command()
@click.option("--responses", type=click.Path(exists=True), default=None,
              help="CSV with one 10-answer Likert row per respondent")
@click.option("--survey", type=click.Path(exists=True), default=None,
              help="survey marginals JSON (default: packaged fixture)")
def sus(responses, survey):
    """SUS scores from raw responses or from published marginals."""
    if responses:
        scores = []
        with open(responses) as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip().lstrip("-").isdigit():
                    continue
                scores.append(analysis.sus_score([int(v) for v in row[:10]]))
        for i, score in enumerate(scores):
            click.echo(f"respondent {i + 1}: {score:.1f}")
        if scores:
            click.echo(f"mean SUS: {sum(scores) / len(scores):.1f}")
        return
    with open(survey or _fixture("sus_survey.json")) as fh:
        doc = json.load(fh)
    mean = analysis.sus_mean_from_distribution(doc["distributions_pct"])
    click.echo(f"mean SUS from marginals: {mean:.1f}")
    if "reported_mean" in doc:
        click.echo(f"reported mean: {doc['reported_mean']}")


@twin.command()
@robot_opt
@scene_opt
@click.option("--out", type=click.Path(), default="sequence.json",
              show_default=True, help="sequence file to write")
@click.option("--events", "events_path", type=click.Path(), default=None,
              help="also dump the event log (NDJSON)")
@click.option("--fast/--no-fast", default=True, show_default=True)
def demo(robot, scene_path, out, events_path, fast):
    """Disassemble the whole fixture in topological order and save the run."""
    model, scene, home = _load_cell(robot, scene_path)
    session = Session(scene, model, home, fast_loop=fast)
    for cid in topological_order(scene):
        record = session.handle_detach_command(cid)
        click.echo(f"{record.component_id:18s} {record.outcome}  "
                   f"{record.duration_s:7.2f} s")
    session.save_sequence(out)
    click.echo(f"sequence written to {out} "
               f"(sim total {session.controller.sim.clock_us / 1e6:.1f} s)")
    if events_path:
        with open(events_path, "w") as fh:
            for event in session.event_log:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
        click.echo(f"event log written to {events_path}")


def twin_server():
    """Console entry: twin-server == twin serve."""
    serve.main(args=sys.argv[1:], prog_name="twin-server")


@click.command()
@click.option("--connect", required=True, help="twin server UDP address")
@click.option("--robot", type=click.Path(exists=True), default=None)
@click.option("--cycle-ms", default=link.DEFAULT_CYCLE_MS, show_default=True)
@click.option("--time-scale", default=1.0, show_default=True)
@click.option("--max-cycles", default=None, type=int)
def robotsim_main(connect, robot, cycle_ms, time_scale, max_cycles):
    """Standalone simulated robot controller speaking the cyclic protocol."""
    _setup_logging()
    from .transport import run_robotsim_udp
    path = robot or _fixture("kr10_track.twin.json")
    model = load_robot(path)
    with open(path) as fh:
        home = np.array(json.load(fh).get("home", [0.0] * 7), dtype=float)
    log.info("robotsim streaming to udp://%s at %.0f ms cycle", connect, cycle_ms)
    controller = run_robotsim_udp(model, home, connect, cycle_ms, time_scale,
                                  max_cycles)
    log.info("robotsim stopped after %d cycles", controller.link_state.cycles)
