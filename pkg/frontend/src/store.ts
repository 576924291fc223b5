// Single source of truth for the console: server snapshot + event fold.
// The UI never mutates scene state locally; every change arrives as an event.

import { ComponentSnap, RecordDict, Snapshot, TwinEvent } from "./types.js";

export type ConnectionState = "connecting" | "live" | "lost";

export interface GuidanceMessage {
  kind: "info" | "blocked" | "error" | "progress";
  text: string;
  blockers?: string[];
}

export interface AppState {
  snapshot: Snapshot | null;
  components: Map<string, ComponentSnap>;
  q: number[];
  toolRpm: number;
  gripper: string;
  vacuum: string;
  currentTool: string | null;
  busy: boolean;
  records: RecordDict[];
  selected: string | null;
  lastSeq: number;
  connection: ConnectionState;
  guidance: GuidanceMessage;
  needsResync: boolean;
}

export function initialState(): AppState {
  return {
    snapshot: null,
    components: new Map(),
    q: [0, 0, 0, 0, 0, 0, 0],
    toolRpm: 0,
    gripper: "open",
    vacuum: "off",
    currentTool: null,
    busy: false,
    records: [],
    selected: null,
    lastSeq: -1,
    connection: "connecting",
    guidance: { kind: "info", text: "Connecting to the twin server..." },
    needsResync: false,
  };
}

export type Listener = (state: AppState) => void;

export class Store {
  state = initialState();
  private listeners = new Set<Listener>();

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private notify() {
    for (const fn of this.listeners) fn(this.state);
  }

  update(mut: (s: AppState) => void) {
    mut(this.state);
    this.notify();
  }

  applySnapshot(snap: Snapshot) {
    this.update((s) => {
      s.snapshot = snap;
      s.components = new Map(snap.scene.components.map((c) => [c.id, c]));
      s.q = snap.q;
      s.currentTool = snap.current_tool;
      s.busy = snap.busy;
      // merge by index: events that raced the snapshot fetch must not vanish
      const byIndex = new Map((snap.records ?? []).map((r) => [r.index, r]));
      for (const r of s.records) {
        if (!byIndex.has(r.index)) byIndex.set(r.index, r);
      }
      s.records = [...byIndex.values()].sort((a, b) => a.index - b.index);
      s.connection = "live";
      s.needsResync = false;
      s.lastSeq = -1;   // snapshot restarts seq accounting
      if (s.guidance.kind === "info") {
        s.guidance = {
          kind: "info",
          text: "Click a highlighted part (or its list entry) to detach it.",
        };
      }
    });
  }

  applyEvent(event: TwinEvent) {
    switch (event.type) {
      case "snapshot":
        this.applySnapshot(event);
        return;
      case "heartbeat":
        return;
      case "gap":
        // events were dropped: scene state may be stale until a resync
        this.update((s) => {
          s.needsResync = true;
        });
        return;
    }
    if ("seq" in event
        && this.state.lastSeq >= 0 && event.seq > this.state.lastSeq + 1) {
      // missed events (server dropped under backpressure): resync
      this.state.needsResync = true;
    }
    if (event.type === "joint_state") {
      // high-rate channel: mutate without notifying listeners (the render
      // loop reads q every frame; rebuilding the sidebar per joint event
      // would starve the stream reader)
      this.state.lastSeq = event.seq;
      this.state.q = event.q;
      this.state.toolRpm = event.tool_rpm;
      this.state.gripper = event.gripper;
      this.state.vacuum = event.vacuum;
      return;
    }
    this.update((s) => {
      if ("seq" in event) s.lastSeq = event.seq;
      switch (event.type) {
        case "component_state": {
          const comp = s.components.get(event.id);
          if (comp) comp.state = event.state;
          if (event.state === "removed" && s.selected === event.id) {
            s.selected = null;
          }
          break;
        }
        case "phase":
          if (event.status === "start") {
            s.busy = true;
            s.guidance = {
              kind: "progress",
              text: `${event.component_id}: ${event.phase.split("_").join(" ")}...`,
            };
          }
          break;
        case "record": {
          s.busy = false;
          const byIndex = new Map(s.records.map((r) => [r.index, r]));
          byIndex.set(event.index, {
            index: event.index,
            component_id: event.component_id,
            strategy: "",
            outcome: event.outcome as RecordDict["outcome"],
            duration_s: event.duration_s ?? 0,
          });
          s.records = [...byIndex.values()].sort((a, b) => a.index - b.index);
        }
          s.guidance = event.outcome === "completed"
            ? { kind: "info", text: `${event.component_id} removed in ${(event.duration_s ?? 0).toFixed(1)} s.` }
            : { kind: "error", text: `${event.component_id} aborted: ${event.reason ?? "unknown"}` };
          break;
        case "tool":
          s.currentTool = event.action === "mount" ? event.tool_id : null;
          break;
        case "pose_update":
          s.needsResync = true;  // component world poses changed wholesale
          break;
      }
    });
  }

  setSelected(id: string | null) {
    this.update((s) => {
      s.selected = id;
    });
  }

  setConnection(state: ConnectionState) {
    this.update((s) => {
      s.connection = state;
      if (state === "lost") {
        s.guidance = { kind: "error", text: "Connection to the twin server lost." };
      }
    });
  }

  showBlocked(componentId: string, blockers: string[]) {
    this.update((s) => {
      s.guidance = {
        kind: "blocked",
        text: `${componentId} is blocked. Remove first:`,
        blockers,
      };
    });
  }

  showError(text: string) {
    this.update((s) => {
      s.guidance = { kind: "error", text };
    });
  }

  attachedInOrder(): ComponentSnap[] {
    // precedence-ready components first: everything whose predecessors are
    // already removed
    const comps = [...this.state.components.values()];
    const removed = new Set(
      comps.filter((c) => c.state === "removed").map((c) => c.id),
    );
    return comps
      .filter((c) => c.state !== "removed")
      .sort((a, b) => {
        const readyA = a.predecessors.every((p) => removed.has(p)) ? 0 : 1;
        const readyB = b.predecessors.every((p) => removed.has(p)) ? 0 : 1;
        return readyA - readyB || a.id.localeCompare(b.id);
      });
  }
}
