import { describe, expect, it } from "vitest";

import { Store } from "../src/store.js";
import { Snapshot } from "../src/types.js";

function snapshotFixture(): Snapshot {
  const pose = { position: [0, 0, 0] as [number, number, number],
                 quaternion: [1, 0, 0, 0] as [number, number, number, number] };
  const comp = (id: string, predecessors: string[] = []) => ({
    id, state: "attached" as const, group: "g", strategy: "unscrew",
    tool_id: "screwdriver", predecessors,
    shape: { kind: "box" as const, extents: [0.1, 0.1, 0.1] },
    local_pose: pose, world_pose: pose,
  });
  return {
    type: "snapshot", t_us: 0,
    scene: {
      evb_type_id: "t", scene_hash: "h", evb_base_frame: "evb_base",
      evb_base_pose: pose,
      components: [comp("screw_1"), comp("screw_2"), comp("cover", ["screw_1", "screw_2"])],
      statics: [], tools: ["screwdriver"],
    },
    robot: { name: "r", joints: [], flange_offset: pose, limits: [], capsules: [] },
    tools: {},
    q: [0, 0, 0, 0, 0, 0, 0],
    current_tool: "screwdriver",
    records: [], busy: false,
  };
}

describe("store event fold", () => {
  it("applies snapshot then component_state events", () => {
    const store = new Store();
    store.applySnapshot(snapshotFixture());
    expect(store.state.components.size).toBe(3);
    expect(store.state.connection).toBe("live");

    store.applyEvent({ type: "component_state", seq: 1, t_us: 1, id: "screw_1", state: "detached" });
    expect(store.state.components.get("screw_1")!.state).toBe("detached");
    store.applyEvent({ type: "component_state", seq: 2, t_us: 2, id: "screw_1", state: "removed" });
    expect(store.state.components.get("screw_1")!.state).toBe("removed");
    expect(store.state.lastSeq).toBe(2);
  });

  it("tracks busy through phase and record events", () => {
    const store = new Store();
    store.applySnapshot(snapshotFixture());
    store.applyEvent({ type: "phase", seq: 1, t_us: 0, record_index: 0, component_id: "screw_1", phase: "approach", status: "start" });
    expect(store.state.busy).toBe(true);
    expect(store.state.guidance.kind).toBe("progress");
    store.applyEvent({ type: "record", seq: 2, t_us: 9, index: 0, component_id: "screw_1", outcome: "completed", duration_s: 9.5 });
    expect(store.state.busy).toBe(false);
    expect(store.state.records).toHaveLength(1);
  });

  it("orders ready components before blocked ones", () => {
    const store = new Store();
    store.applySnapshot(snapshotFixture());
    let order = store.attachedInOrder().map((c) => c.id);
    expect(order[order.length - 1]).toBe("cover");

    store.applyEvent({ type: "component_state", seq: 1, t_us: 0, id: "screw_1", state: "removed" });
    store.applyEvent({ type: "component_state", seq: 2, t_us: 0, id: "screw_2", state: "removed" });
    order = store.attachedInOrder().map((c) => c.id);
    expect(order).toEqual(["cover"]);
  });

  it("marks resync needed on gap and pose_update", () => {
    const store = new Store();
    store.applySnapshot(snapshotFixture());
    store.applyEvent({ type: "gap", seq: 99 });
    expect(store.state.needsResync).toBe(true);
    store.applySnapshot(snapshotFixture());
    expect(store.state.needsResync).toBe(false);
    store.applyEvent({ type: "pose_update", seq: 100, t_us: 0,
      transform: { position: [0, 0, 0], quaternion: [1, 0, 0, 0] }, residual_m: 0 });
    expect(store.state.needsResync).toBe(true);
  });

  it("stores precedence blockers for the guidance panel", () => {
    const store = new Store();
    store.applySnapshot(snapshotFixture());
    store.showBlocked("cover", ["screw_1", "screw_2"]);
    expect(store.state.guidance.kind).toBe("blocked");
    expect(store.state.guidance.blockers).toEqual(["screw_1", "screw_2"]);
  });
});
