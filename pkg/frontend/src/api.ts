// REST client for the twin server. Errors carry the server's structured
// payload so the UI can show precedence blockers verbatim.

import { ApiError, PoseDict, RecordDict, ReplayReport, Snapshot } from "./types.js";

export class TwinApiError extends Error {
  constructor(
    public status: number,
    public payload: ApiError,
  ) {
    super(`${payload.error}: ${payload.detail}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    throw new TwinApiError(response.status, body as ApiError);
  }
  return body as T;
}

export class TwinApi {
  constructor(public base: string) {}

  getScene(): Promise<Snapshot> {
    return request<Snapshot>(this.base, "/scene");
  }

  async detach(componentId: string): Promise<RecordDict> {
    const body = await request<{ record: RecordDict }>(this.base, "/detach", {
      method: "POST",
      body: JSON.stringify({ component_id: componentId }),
    });
    return body.record;
  }

  async saveSequence(): Promise<Record<string, unknown>> {
    const body = await request<{ sequence: Record<string, unknown> }>(
      this.base, "/sequence/save", { method: "POST", body: "{}" });
    return body.sequence;
  }

  async replaySequence(
    sequence: Record<string, unknown>,
    transform: PoseDict,
    residualM = 0,
  ): Promise<ReplayReport> {
    const body = await request<{ report: ReplayReport }>(
      this.base, "/sequence/replay", {
        method: "POST",
        body: JSON.stringify({
          sequence,
          pose_update: { transform, residual_m: residualM },
        }),
      });
    return body.report;
  }
}
