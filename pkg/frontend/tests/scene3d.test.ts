import { describe, expect, it } from "vitest";

import { poseFromDict } from "../src/math.js";
import {
  CAMERA_PRESETS, cameraEye, cloneCamera, pickComponent, project, rayBox,
  viewTransform,
} from "../src/scene3d.js";
import { ComponentSnap } from "../src/types.js";

const identityPose = {
  position: [0, 0, 0] as [number, number, number],
  quaternion: [1, 0, 0, 0] as [number, number, number, number],
};

function boxComponent(id: string, center: [number, number, number],
                      extents: [number, number, number],
                      state: ComponentSnap["state"] = "attached"): ComponentSnap {
  return {
    id, state, group: "g", strategy: "unscrew", tool_id: "t", predecessors: [],
    shape: { kind: "box", extents },
    local_pose: identityPose,
    world_pose: { position: center, quaternion: [1, 0, 0, 0] },
  };
}

describe("camera", () => {
  it("ships at least three presets that restore exact parameters", () => {
    expect(CAMERA_PRESETS.length).toBeGreaterThanOrEqual(3);
    for (const preset of CAMERA_PRESETS) {
      const cam = cloneCamera(preset.state);
      cam.azimuth += 1.0;            // user orbits away...
      cam.distance *= 2;
      const restored = cloneCamera(preset.state);  // ...preset restores
      expect(restored).toEqual(preset.state);
      expect(restored.azimuth).not.toBe(cam.azimuth);
    }
  });

  it("eye sits `distance` away from the target", () => {
    const cam = cloneCamera(CAMERA_PRESETS[0].state);
    const eye = cameraEye(cam);
    const d = Math.hypot(eye[0] - cam.target[0], eye[1] - cam.target[1],
                         eye[2] - cam.target[2]);
    expect(d).toBeCloseTo(cam.distance, 9);
  });

  it("projects the look-at target to the viewport center", () => {
    const cam = cloneCamera(CAMERA_PRESETS[0].state);
    const view = viewTransform(cam, 800, 600);
    const [px, py, z] = project(view, cam.target);
    expect(px).toBeCloseTo(400, 6);
    expect(py).toBeCloseTo(300, 6);
    expect(z).toBeGreaterThan(0);
  });
});

describe("picking", () => {
  it("ray-box intersection hits and misses as expected", () => {
    const pose = poseFromDict(identityPose);
    expect(rayBox([0, 0, 5], [0, 0, -1], pose, [1, 1, 1])).toBeCloseTo(4, 9);
    expect(rayBox([3, 0, 5], [0, 0, -1], pose, [1, 1, 1])).toBeNull();
    // origin inside the box
    expect(rayBox([0, 0, 0], [0, 0, -1], pose, [1, 1, 1])).toBe(0);
  });

  it("picks the component under the pixel, nearest first, removed hidden", () => {
    const near = boxComponent("near", [0, 0, 1], [0.4, 0.4, 0.4]);
    const far = boxComponent("far", [0, 0, -1], [0.4, 0.4, 0.4]);
    const cam = { target: [0, 0, 0] as [number, number, number],
                  azimuth: 0, elevation: 0, distance: 5, fov: 0.9 };
    // camera on +x looking at origin; x-aligned: pick through the center pixel
    const view = viewTransform(cam, 800, 600);
    const [cx, cy] = project(view, [0, 0, 0]);
    const hitBoth = pickComponent(view, cx, cy, [
      boxComponent("a", [2, 0, 0], [0.5, 0.5, 0.5]),
      boxComponent("b", [-2, 0, 0], [0.5, 0.5, 0.5]),
    ]);
    expect(hitBoth?.id).toBe("a");   // nearer to the +x camera

    const removedFront = pickComponent(view, cx, cy, [
      boxComponent("a", [2, 0, 0], [0.5, 0.5, 0.5], "removed"),
      boxComponent("b", [-2, 0, 0], [0.5, 0.5, 0.5]),
    ]);
    expect(removedFront?.id).toBe("b");

    const miss = pickComponent(view, 1, 1, [near, far]);
    expect(miss).toBeNull();
  });
});
