// Scripted end-to-end run against a real twin server: boot the console in a
// DOM, disassemble the whole fixture by clicking, observe removals through
// the event stream, then save and replay the sequence on a fresh session.

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleApp, createApp } from "../src/ui.js";
import { ComponentSnap } from "../src/types.js";

const PORT_A = 1800 + Math.floor(Math.random() * 900) * 10 + 1;
const PORT_B = PORT_A + 1;

const servers: ChildProcess[] = [];

function startServer(port: number): ChildProcess {
  const proc = spawn(
    "twin",
    ["serve", "--http", `127.0.0.1:${port}`, "--time-scale", "0", "--seed", "0"],
    { stdio: ["ignore", "pipe", "pipe"], env: { ...process.env } },
  );
  servers.push(proc);
  return proc;
}

async function waitForServer(base: string, timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const r = await fetch(base + "/health");
      if (r.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error(`server at ${base} did not start`);
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}

async function waitFor(
  predicate: () => boolean,
  what: string,
  timeoutMs = 240_000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
}

function topologicalOrder(components: ComponentSnap[]): string[] {
  const remaining = new Map(components.map((c) => [c.id, new Set(c.predecessors)]));
  const order: string[] = [];
  while (remaining.size) {
    const ready = [...remaining.entries()]
      .filter(([, deps]) => deps.size === 0)
      .map(([id]) => id);
    if (!ready.length) throw new Error("precedence cycle in snapshot");
    for (const id of ready) {
      order.push(id);
      remaining.delete(id);
      for (const deps of remaining.values()) deps.delete(id);
    }
  }
  return order;
}

const baseA = `http://127.0.0.1:${PORT_A}`;
const baseB = `http://127.0.0.1:${PORT_B}`;
let app: ConsoleApp;

beforeAll(async () => {
  startServer(PORT_A);
  await waitForServer(baseA);
  document.body.innerHTML = "";
  app = createApp(document.body, baseA);
  await app.connect();
  await waitFor(() => app.store.state.snapshot !== null, "first snapshot");
}, 120_000);

afterAll(() => {
  app?.dispose();
  for (const proc of servers) proc.kill("SIGTERM");
});

describe("operator console end-to-end", () => {
  it("shows the full pack and the robot after connecting", () => {
    const s = app.store.state;
    expect(s.components.size).toBe(14);
    expect(s.connection).toBe("live");
    expect(s.snapshot!.robot.joints).toHaveLength(7);
    const rows = document.querySelectorAll("button.component");
    expect(rows.length).toBe(14);
  });

  it("clicking the blocked cover lists its four blocker screws", async () => {
    await app.clickComponent("cover");
    const s = app.store.state;
    expect(s.guidance.kind).toBe("blocked");
    expect(s.guidance.blockers).toHaveLength(4);
    const shown = [...document.querySelectorAll(".guidance li.blocker")]
      .map((li) => li.textContent);
    expect(shown!.sort()).toEqual([
      "cover_screw_1", "cover_screw_2", "cover_screw_3", "cover_screw_4",
    ]);
    expect(s.components.get("cover")!.state).toBe("attached");
  });

  it("picks a screw through the canvas and starts its detach", async () => {
    // aim the camera straight down at cover_screw_1 and click its pixel
    const screw = app.store.state.components.get("cover_screw_1")!;
    const [sx, sy, sz] = screw.world_pose.position;
    app.camera = {
      target: [sx, sy, sz], azimuth: 0, elevation: 1.45, distance: 1.2, fov: 0.9,
    };
    app.renderFrame();
    const canvas = document.querySelector("canvas.cell-view") as HTMLCanvasElement;
    const down = new window.MouseEvent("pointerdown",
      { clientX: 480, clientY: 300, button: 0, bubbles: true });
    const up = new window.MouseEvent("pointerup",
      { clientX: 480, clientY: 300, button: 0, bubbles: true });
    canvas.dispatchEvent(down);
    canvas.dispatchEvent(up);
    expect(app.store.state.selected).toBe("cover_screw_1");
    await waitFor(
      () => app.store.state.components.get("cover_screw_1")!.state === "removed",
      "cover_screw_1 removed",
    );
    const screwRecord = app.store.state.records
      .find((r) => r.component_id === "cover_screw_1");
    expect(screwRecord?.outcome).toBe("completed");
  });

  it("shows a busy toast when clicking during execution", async () => {
    const detach = app.clickComponent("cover_screw_2");
    await waitFor(() => app.store.state.busy, "busy flag from phase event");
    await app.clickComponent("cover_screw_3");
    const toast = document.querySelector(".toast") as HTMLElement;
    expect(toast.className).not.toContain("hidden");
    expect(toast.textContent).toContain("Busy");
    await detach;
    await waitFor(
      () => app.store.state.components.get("cover_screw_2")!.state === "removed",
      "cover_screw_2 removed", 120_000,
    );
  });

  it("disassembles the rest of the fixture in topological order", async () => {
    const snapshotComponents = [...app.store.state.components.values()];
    for (const id of topologicalOrder(snapshotComponents)) {
      if (app.store.state.components.get(id)!.state === "removed") continue;
      await waitFor(() => !app.store.state.busy, "idle before next click");
      // click the component's list entry, like an operator would
      const row = [...document.querySelectorAll("button.component")]
        .find((b) => (b as HTMLElement).dataset.componentId === id) as
        HTMLElement | undefined;
      if (row) {
        row.click();
      } else {
        await app.clickComponent(id);
      }
      await waitFor(
        () => app.store.state.components.get(id)!.state === "removed",
        `${id} removed`,
      );
    }
    const states = [...app.store.state.components.values()].map((c) => c.state);
    expect(states.every((s) => s === "removed")).toBe(true);
    // removed parts disappear from the pickable list
    expect(document.querySelectorAll("button.component").length).toBe(0);
  }, 280_000);

  it("saves the sequence and replays it on a fresh session", async () => {
    const saveButton = document.querySelector("button.action.save") as HTMLElement;
    saveButton.click();
    await waitFor(() => app.lastSavedSequence !== null, "sequence saved");
    const doc = app.lastSavedSequence!;
    const allRecords = doc.records as { outcome: string; component_id: string }[];
    // 14 completed detaches plus the aborted precedence-violation attempt
    expect(allRecords.filter((r) => r.outcome === "completed")).toHaveLength(14);
    expect(allRecords.filter((r) => r.outcome === "aborted")).toHaveLength(1);
    expect(document.querySelector(".sequence-status")!.textContent)
      .toContain(`${allRecords.length} records`);

    // a fresh pack: second server, second console
    startServer(PORT_B);
    await waitForServer(baseB);
    const host = document.createElement("div");
    document.body.append(host);
    const app2 = createApp(host, baseB);
    await app2.connect();
    await waitFor(() => app2.store.state.snapshot !== null, "second snapshot");

    const report = await app2.replaySequence(
      doc, app2.store.state.snapshot!.scene.evb_base_pose);
    expect(report.records).toHaveLength(14);
    expect(report.max_pos_dev_m).toBeLessThan(1e-6);

    // identical component order as the recording run (completed ones)
    const recordedOrder = allRecords
      .filter((r) => r.outcome === "completed")
      .map((r) => r.component_id);
    await waitFor(() => {
      const have = new Set(app2.store.state.records.map((r) => r.index));
      return recordedOrder.every((_, i) => have.has(i));
    }, "replay records streamed", 60_000);
    const replayedOrder = app2.store.state.records.map((r) => r.component_id);
    expect(replayedOrder).toEqual(recordedOrder);
    const states = [...app2.store.state.components.values()].map((c) => c.state);
    expect(states.every((s) => s === "removed")).toBe(true);

    // replaying on the wrong scene is refused (session no longer fresh)
    await expect(app2.replaySequence(
      doc, app2.store.state.snapshot!.scene.evb_base_pose))
      .rejects.toThrowError(/SceneMismatch|fresh/);
    expect(document.querySelectorAll(".sequence-status")[1].textContent)
      .toContain("scene mismatch");
    app2.dispose();
  }, 280_000);
});
