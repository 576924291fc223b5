// Operator console: live 3D cell view with point-and-click detach, guidance
// panel, camera presets, and sequence record/save/replay controls.

import { TwinApi, TwinApiError } from "./api.js";
import { axisAngleMat, poseFromDict, matMul, Vec3 } from "./math.js";
import { renderCell } from "./renderer.js";
import { robotSegments } from "./robot.js";
import { CAMERA_PRESETS, CameraState, cloneCamera, pickComponent, ViewTransform, viewTransform } from "./scene3d.js";
import { openEventStream, StreamHandle } from "./stream.js";
import { AppState, Store } from "./store.js";
import { PoseDict, ReplayReport } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function matToQuat(m: number[]): [number, number, number, number] {
  const t = m[0] + m[4] + m[8];
  if (t > 0) {
    const s = Math.sqrt(t + 1) * 2;
    return [s / 4, (m[7] - m[5]) / s, (m[2] - m[6]) / s, (m[3] - m[1]) / s];
  }
  // yaw-only displacements never reach the degenerate branches; fall back
  // to identity rather than carrying the full Shepperd ladder here
  return [1, 0, 0, 0];
}

export class ConsoleApp {
  store = new Store();
  api: TwinApi;
  camera: CameraState = cloneCamera(CAMERA_PRESETS[0].state);
  activePreset = CAMERA_PRESETS[0].id;
  lastView: ViewTransform;
  lastSavedSequence: Record<string, unknown> | null = null;
  lastReplayReport: ReplayReport | null = null;

  private canvas: HTMLCanvasElement;
  private guidancePanel: HTMLElement;
  private componentList: HTMLElement;
  private recordLog: HTMLElement;
  private statusBadge: HTMLElement;
  private toolBadge: HTMLElement;
  private sequenceStatus: HTMLElement;
  private toast: HTMLElement;
  private stream: StreamHandle | null = null;
  private resyncInFlight = false;
  private renderTimer: ReturnType<typeof setInterval> | null = null;
  private dragging: "orbit" | "pan" | null = null;
  private dragStart = { x: 0, y: 0, cam: this.camera };
  private dragMoved = false;

  constructor(root: HTMLElement, baseUrl: string) {
    this.api = new TwinApi(baseUrl);

    const header = el("header");
    header.append(el("h1", "", "EVB disassembly console"));
    this.statusBadge = el("span", "badge connecting", "connecting");
    this.toolBadge = el("span", "badge tool", "tool: -");
    header.append(this.statusBadge, this.toolBadge);

    const main = el("main");
    this.canvas = el("canvas", "cell-view");
    this.canvas.width = 960;
    this.canvas.height = 600;
    this.canvas.tabIndex = 0;

    const aside = el("aside");
    this.guidancePanel = el("section", "guidance");
    const presets = el("section", "presets");
    presets.append(el("h2", "", "Camera"));
    for (const preset of CAMERA_PRESETS) {
      const button = el("button", "preset", preset.label);
      button.dataset.preset = preset.id;
      button.addEventListener("click", () => this.applyPreset(preset.id));
      presets.append(button);
    }
    const zoomRow = el("div", "zoom-row");
    for (const [label, factor] of [["zoom -", 1.25], ["zoom +", 0.8]] as const) {
      const button = el("button", "preset", label);
      button.addEventListener("click", () => {
        this.camera.distance = Math.min(12, Math.max(0.5, this.camera.distance * factor));
      });
      zoomRow.append(button);
    }
    presets.append(zoomRow);

    const compSection = el("section", "components");
    compSection.append(el("h2", "", "Components"));
    this.componentList = el("div", "component-list");
    compSection.append(this.componentList);

    const seqSection = el("section", "sequence");
    seqSection.append(el("h2", "", "Sequence"));
    const saveButton = el("button", "action save", "Save sequence");
    saveButton.addEventListener("click", () => void this.saveSequence());
    const replayButton = el("button", "action replay", "Replay saved");
    replayButton.addEventListener("click", () => void this.replayLastSaved());
    this.sequenceStatus = el("div", "sequence-status", "no sequence saved yet");
    seqSection.append(saveButton, replayButton, this.sequenceStatus);

    const recSection = el("section", "records");
    recSection.append(el("h2", "", "Record log"));
    this.recordLog = el("div", "record-log");
    recSection.append(this.recordLog);

    aside.append(this.guidancePanel, presets, compSection, seqSection, recSection);
    main.append(this.canvas, aside);
    this.toast = el("div", "toast hidden");
    root.append(header, main, this.toast);

    this.lastView = viewTransform(this.camera, this.canvas.width, this.canvas.height);
    this.bindPointer();
    this.store.subscribe((s) => this.renderSidebar(s));
  }

  // -- lifecycle ---------------------------------------------------------------

  async connect(): Promise<void> {
    const snap = await this.api.getScene();
    this.store.applySnapshot(snap);
    this.stream = openEventStream(
      this.api.base,
      (event) => {
        this.store.applyEvent(event);
        if (this.store.state.needsResync && !this.resyncInFlight) {
          this.resyncInFlight = true;
          void this.resync().finally(() => {
            this.resyncInFlight = false;
          });
        }
      },
      () => this.store.setConnection("lost"),
    );
    const raf = typeof requestAnimationFrame === "function";
    const tick = () => this.renderFrame();
    if (raf) {
      const loop = () => {
        tick();
        if (this.renderTimer !== null) requestAnimationFrame(loop);
      };
      this.renderTimer = setInterval(() => undefined, 1 << 30);
      requestAnimationFrame(loop);
    } else {
      this.renderTimer = setInterval(tick, 33);
    }
  }

  dispose() {
    if (this.renderTimer !== null) clearInterval(this.renderTimer);
    this.renderTimer = null;
    this.stream?.stop();
  }

  private async resync(): Promise<void> {
    try {
      this.store.applySnapshot(await this.api.getScene());
    } catch {
      this.store.setConnection("lost");
    }
  }

  // -- rendering ----------------------------------------------------------------

  renderFrame() {
    const s = this.store.state;
    if (!s.snapshot) return;
    const tool = s.currentTool ? s.snapshot.tools[s.currentTool] ?? null : null;
    this.lastView = renderCell(this.canvas, {
      camera: this.camera,
      statics: s.snapshot.scene.statics,
      components: [...s.components.values()],
      robot: robotSegments(s.snapshot.robot, s.q, tool),
      selected: s.selected,
    });
  }

  private renderSidebar(s: AppState) {
    this.statusBadge.textContent = s.connection;
    this.statusBadge.className = `badge ${s.connection}${s.busy ? " busy" : ""}`;
    this.toolBadge.textContent = `tool: ${s.currentTool ?? "-"}${s.busy ? "  [executing]" : ""}`;

    this.guidancePanel.replaceChildren(
      el("h2", "", "Guidance"),
      el("p", `guidance ${s.guidance.kind}`, s.guidance.text),
    );
    if (s.guidance.blockers) {
      const list = el("ul", "blockers");
      for (const blocker of s.guidance.blockers) {
        list.append(el("li", "blocker", blocker));
      }
      this.guidancePanel.append(list);
    }

    this.componentList.replaceChildren();
    for (const comp of this.store.attachedInOrder()) {
      const row = el("button", `component ${comp.state}`);
      row.dataset.componentId = comp.id;
      row.append(
        el("span", "comp-id", comp.id),
        el("span", "comp-state", comp.state),
      );
      row.addEventListener("click", () => void this.clickComponent(comp.id));
      this.componentList.append(row);
    }

    this.recordLog.replaceChildren();
    for (const record of [...s.records].reverse().slice(0, 20)) {
      this.recordLog.append(el(
        "div",
        `record ${record.outcome}`,
        `#${record.index} ${record.component_id} ${record.outcome}` +
        (record.outcome === "completed" ? ` (${record.duration_s.toFixed(1)} s)` : ""),
      ));
    }
  }

  private showToast(text: string) {
    this.toast.textContent = text;
    this.toast.className = "toast";
    setTimeout(() => {
      this.toast.className = "toast hidden";
    }, 2500);
  }

  // -- interaction ----------------------------------------------------------------

  private bindPointer() {
    this.canvas.addEventListener("pointerdown", (ev) => {
      this.dragging = ev.button === 2 ? "pan" : "orbit";
      this.dragMoved = false;
      this.dragStart = { x: ev.clientX, y: ev.clientY, cam: cloneCamera(this.camera) };
    });
    this.canvas.addEventListener("pointermove", (ev) => {
      if (!this.dragging) return;
      const dx = ev.clientX - this.dragStart.x;
      const dy = ev.clientY - this.dragStart.y;
      if (Math.abs(dx) + Math.abs(dy) > 3) this.dragMoved = true;
      if (this.dragging === "orbit") {
        this.camera.azimuth = this.dragStart.cam.azimuth - dx * 0.008;
        this.camera.elevation = Math.min(1.5, Math.max(-0.2,
          this.dragStart.cam.elevation + dy * 0.008));
      } else {
        const view = this.lastView;
        const k = this.camera.distance / view.scale;
        const t = this.dragStart.cam.target;
        this.camera.target = [
          t[0] - (dx * view.right[0] - dy * view.up[0]) * k,
          t[1] - (dx * view.right[1] - dy * view.up[1]) * k,
          t[2] - (dx * view.right[2] - dy * view.up[2]) * k,
        ];
      }
      this.activePreset = "";
    });
    const finish = (ev: PointerEvent) => {
      const wasClick = this.dragging === "orbit" && !this.dragMoved && ev.button !== 2;
      this.dragging = null;
      if (!wasClick) return;
      const rect = this.canvas.getBoundingClientRect();
      const scaleX = rect.width > 0 ? this.canvas.width / rect.width : 1;
      const scaleY = rect.height > 0 ? this.canvas.height / rect.height : 1;
      this.handleCanvasClick(
        (ev.clientX - rect.left) * scaleX,
        (ev.clientY - rect.top) * scaleY,
      );
    };
    this.canvas.addEventListener("pointerup", finish);
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY > 0 ? 1.1 : 0.9;
      this.camera.distance = Math.min(12, Math.max(0.5, this.camera.distance * factor));
      this.activePreset = "";
    });
    this.canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
  }

  handleCanvasClick(px: number, py: number) {
    const s = this.store.state;
    if (!s.snapshot) return;
    this.renderFrame();
    const hit = pickComponent(this.lastView, px, py, [...s.components.values()]);
    if (hit) {
      this.store.setSelected(hit.id);
      void this.clickComponent(hit.id);
    } else {
      this.store.setSelected(null);
    }
  }

  applyPreset(id: string) {
    const preset = CAMERA_PRESETS.find((p) => p.id === id);
    if (!preset) return;
    this.camera = cloneCamera(preset.state);
    this.activePreset = id;
  }

  async clickComponent(id: string): Promise<void> {
    const s = this.store.state;
    if (s.busy) {
      this.showToast("Busy: a skill is already executing");
      return;
    }
    this.store.setSelected(id);
    this.store.update((st) => {
      st.guidance = { kind: "progress", text: `${id}: planning...` };
    });
    try {
      await this.api.detach(id);
    } catch (err) {
      if (err instanceof TwinApiError) {
        if (err.payload.error === "PrecedenceViolation") {
          this.store.showBlocked(id, err.payload.blockers ?? []);
        } else if (err.payload.error === "Busy") {
          this.showToast("Busy: a skill is already executing");
        } else {
          this.store.showError(`${err.payload.error}: ${err.payload.detail}`);
        }
        return;
      }
      this.store.showError(String(err));
    }
  }

  async saveSequence(): Promise<Record<string, unknown>> {
    const doc = await this.api.saveSequence();
    this.lastSavedSequence = doc;
    const count = (doc.records as unknown[]).length;
    this.sequenceStatus.textContent = `saved sequence with ${count} records`;
    this.downloadJson(doc, "sequence.json");
    return doc;
  }

  async replaySequence(
    sequence: Record<string, unknown>,
    transform: PoseDict,
  ): Promise<ReplayReport> {
    this.sequenceStatus.textContent = "replaying...";
    try {
      const report = await this.api.replaySequence(sequence, transform);
      this.lastReplayReport = report;
      this.sequenceStatus.textContent =
        `replayed ${report.records.length} records, max deviation ` +
        `${report.max_pos_dev_m.toExponential(1)} m`;
      return report;
    } catch (err) {
      if (err instanceof TwinApiError && err.payload.error === "SceneMismatch") {
        this.sequenceStatus.textContent = "scene mismatch: " + err.payload.detail;
      } else {
        this.sequenceStatus.textContent = `replay failed: ${String(err)}`;
      }
      throw err;
    }
  }

  async replayLastSaved(): Promise<void> {
    if (!this.lastSavedSequence) {
      this.showToast("Save a sequence first");
      return;
    }
    const base = this.store.state.snapshot?.scene.evb_base_pose;
    if (!base) return;
    try {
      await this.replaySequence(this.lastSavedSequence, base);
    } catch {
      // status line already updated
    }
  }

  // displacement helper for operators: shift/yaw the pack pose client-side
  displacedBasePose(dx: number, dy: number, yawDeg: number): PoseDict {
    const snap = this.store.state.snapshot;
    if (!snap) throw new Error("no snapshot yet");
    const base = poseFromDict(snap.scene.evb_base_pose);
    const yaw = (yawDeg * Math.PI) / 180;
    const rot = matMul(axisAngleMat([0, 0, 1] as Vec3, yaw), base.r);
    return {
      position: [base.p[0] + dx, base.p[1] + dy, base.p[2]],
      quaternion: matToQuat(rot),
    };
  }

  private downloadJson(doc: unknown, filename: string) {
    if (typeof URL === "undefined" || typeof URL.createObjectURL !== "function") {
      return; // headless test environment
    }
    try {
      const blob = new Blob([JSON.stringify(doc, null, 1)], { type: "application/json" });
      const url = URL.createObjectURL(blob);
      const a = el("a");
      a.href = url;
      a.download = filename;
      a.click();
      URL.revokeObjectURL(url);
    } catch {
      // download is a convenience; the sequence is kept in memory regardless
    }
  }
}

export function createApp(root: HTMLElement, baseUrl: string): ConsoleApp {
  return new ConsoleApp(root, baseUrl);
}
