// Camera model (orbit + presets) and ray picking against scene bodies.
// Pure math: no DOM or WebGL, so everything here is unit-testable headless.

import { matMulVec, matT, Pose, poseFromDict, vadd, vcross, vdot, vsub, vunit, vscale, Vec3 } from "./math.js";
import { ComponentSnap, ShapeDict } from "./types.js";

export interface CameraState {
  target: Vec3;
  azimuth: number;   // rad around world z
  elevation: number; // rad above horizon
  distance: number;
  fov: number;       // vertical, rad
}

export interface CameraPreset {
  id: string;
  label: string;
  state: CameraState;
}

export const CAMERA_PRESETS: CameraPreset[] = [
  {
    id: "overview",
    label: "Overview",
    state: { target: [1.8, 1.0, 0.5], azimuth: -2.3, elevation: 0.55, distance: 4.6, fov: 0.9 },
  },
  {
    id: "pack_top",
    label: "Pack top",
    state: { target: [2.0, 1.0, 0.4], azimuth: -1.571, elevation: 1.25, distance: 2.4, fov: 0.9 },
  },
  {
    id: "tool_rack",
    label: "Tool rack",
    state: { target: [0.85, 0.72, 0.7], azimuth: -0.7, elevation: 0.35, distance: 2.2, fov: 0.9 },
  },
];

export const cloneCamera = (c: CameraState): CameraState => ({
  target: [...c.target] as Vec3,
  azimuth: c.azimuth,
  elevation: c.elevation,
  distance: c.distance,
  fov: c.fov,
});

export function cameraEye(cam: CameraState): Vec3 {
  const ce = Math.cos(cam.elevation);
  return vadd(cam.target, [
    cam.distance * ce * Math.cos(cam.azimuth),
    cam.distance * ce * Math.sin(cam.azimuth),
    cam.distance * Math.sin(cam.elevation),
  ]);
}

export interface ViewTransform {
  eye: Vec3;
  right: Vec3;
  up: Vec3;
  forward: Vec3;
  scale: number; // pixels per unit tan at unit depth
  w: number;
  h: number;
}

export function viewTransform(cam: CameraState, w: number, h: number): ViewTransform {
  const eye = cameraEye(cam);
  const forward = vunit(vsub(cam.target, eye));
  const right = vunit(vcross(forward, [0, 0, 1]));
  const up = vcross(right, forward);
  const scale = h / (2 * Math.tan(cam.fov / 2));
  return { eye, right, up, forward, scale, w, h };
}

// returns [px, py, depth]; depth <= 0 means behind the camera
export function project(v: ViewTransform, p: Vec3): [number, number, number] {
  const d = vsub(p, v.eye);
  const z = vdot(d, v.forward);
  if (z <= 1e-6) return [0, 0, -1];
  const x = vdot(d, v.right) / z;
  const y = vdot(d, v.up) / z;
  return [v.w / 2 + x * v.scale, v.h / 2 - y * v.scale, z];
}

export function pickRay(v: ViewTransform, px: number, py: number): { origin: Vec3; dir: Vec3 } {
  const x = (px - v.w / 2) / v.scale;
  const y = (v.h / 2 - py) / v.scale;
  const dir = vunit(vadd(vadd(v.forward, vscale(v.right, x)), vscale(v.up, y)));
  return { origin: v.eye, dir };
}

// ray vs oriented box (slab test); returns hit distance or null
export function rayBox(
  origin: Vec3,
  dir: Vec3,
  pose: Pose,
  half: Vec3,
): number | null {
  const rt = matT(pose.r);
  const o = matMulVec(rt, vsub(origin, pose.p));
  const d = matMulVec(rt, dir);
  let tmin = -Infinity;
  let tmax = Infinity;
  for (let i = 0; i < 3; i++) {
    if (Math.abs(d[i]) < 1e-12) {
      if (Math.abs(o[i]) > half[i]) return null;
      continue;
    }
    let t1 = (-half[i] - o[i]) / d[i];
    let t2 = (half[i] - o[i]) / d[i];
    if (t1 > t2) [t1, t2] = [t2, t1];
    tmin = Math.max(tmin, t1);
    tmax = Math.min(tmax, t2);
    if (tmin > tmax) return null;
  }
  return tmax < 0 ? null : Math.max(tmin, 0);
}

export function shapeHalfExtents(shape: ShapeDict): Vec3 {
  if (shape.kind === "box") {
    const e = shape.extents ?? [0.1, 0.1, 0.1];
    return [e[0] / 2, e[1] / 2, e[2] / 2];
  }
  const r = shape.radius ?? 0.05;
  const l = shape.length ?? 0.1;
  return [r, r, l / 2]; // bounding box of the cylinder, axis = local z
}

export interface PickResult {
  id: string;
  distance: number;
}

// nearest pickable component under the pixel (removed parts are not drawn,
// hence not pickable)
export function pickComponent(
  view: ViewTransform,
  px: number,
  py: number,
  components: ComponentSnap[],
): PickResult | null {
  const { origin, dir } = pickRay(view, px, py);
  let best: PickResult | null = null;
  for (const comp of components) {
    if (comp.state === "removed") continue;
    const pose = poseFromDict(comp.world_pose);
    const t = rayBox(origin, dir, pose, shapeHalfExtents(comp.shape));
    if (t !== null && (best === null || t < best.distance)) {
      best = { id: comp.id, distance: t };
    }
  }
  return best;
}
