// Canvas-2D painter renderer: boxes and cylinders as depth-sorted filled
// faces, robot links as thick strokes. No WebGL, so it runs anywhere; in
// headless test environments without a 2D context it simply skips drawing
// (all interaction math lives in scene3d.ts).

import { matMulVec, Pose, poseFromDict, vadd, vdot, vsub, vunit, Vec3 } from "./math.js";
import { CameraState, project, shapeHalfExtents, viewTransform, ViewTransform } from "./scene3d.js";
import { LinkSegment } from "./robot.js";
import { ComponentSnap, StaticSnap } from "./types.js";

const LIGHT: Vec3 = vunit([0.4, 0.25, 0.88]);

interface Face {
  pts: [number, number][];
  depth: number;
  fill: string;
  stroke?: string;
}

const STATE_COLORS: Record<string, [number, number, number]> = {
  attached: [84, 160, 255],
  detached: [255, 188, 66],
  removed: [0, 0, 0],
};

function shade(rgb: [number, number, number], normal: Vec3, alpha = 1): string {
  const k = 0.45 + 0.55 * Math.max(0, vdot(normal, LIGHT));
  return `rgba(${rgb.map((c) => Math.round(c * k)).join(",")},${alpha})`;
}

const BOX_FACES: { corners: number[][]; normal: Vec3 }[] = [
  { corners: [[1, -1, -1], [1, 1, -1], [1, 1, 1], [1, -1, 1]], normal: [1, 0, 0] },
  { corners: [[-1, -1, -1], [-1, -1, 1], [-1, 1, 1], [-1, 1, -1]], normal: [-1, 0, 0] },
  { corners: [[-1, 1, -1], [-1, 1, 1], [1, 1, 1], [1, 1, -1]], normal: [0, 1, 0] },
  { corners: [[-1, -1, -1], [1, -1, -1], [1, -1, 1], [-1, -1, 1]], normal: [0, -1, 0] },
  { corners: [[-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]], normal: [0, 0, 1] },
  { corners: [[-1, -1, -1], [-1, 1, -1], [1, 1, -1], [1, -1, -1]], normal: [0, 0, -1] },
];

function boxFaces(
  view: ViewTransform,
  pose: Pose,
  half: Vec3,
  rgb: [number, number, number],
  alpha: number,
  out: Face[],
  highlight: boolean,
) {
  for (const face of BOX_FACES) {
    const worldNormal = matMulVec(pose.r, face.normal);
    if (vdot(worldNormal, vsub(view.eye, pose.p)) <= 0) continue; // back face
    const pts: [number, number][] = [];
    let depth = 0;
    let behind = false;
    for (const c of face.corners) {
      const world = vadd(pose.p, matMulVec(pose.r, [c[0] * half[0], c[1] * half[1], c[2] * half[2]]));
      const [px, py, z] = project(view, world);
      if (z <= 0) behind = true;
      pts.push([px, py]);
      depth += z;
    }
    if (behind) continue;
    out.push({
      pts,
      depth: depth / face.corners.length,
      fill: shade(rgb, worldNormal, alpha),
      stroke: highlight ? "#ffffff" : undefined,
    });
  }
}

function cylinderFaces(
  view: ViewTransform,
  pose: Pose,
  radius: number,
  halfLen: number,
  rgb: [number, number, number],
  alpha: number,
  out: Face[],
  highlight: boolean,
  sides = 10,
) {
  for (let k = 0; k < sides; k++) {
    const a0 = (2 * Math.PI * k) / sides;
    const a1 = (2 * Math.PI * (k + 1)) / sides;
    const mid = (a0 + a1) / 2;
    const normal = matMulVec(pose.r, [Math.cos(mid), Math.sin(mid), 0]);
    if (vdot(normal, vsub(view.eye, pose.p)) <= 0) continue;
    const quad: Vec3[] = [
      [radius * Math.cos(a0), radius * Math.sin(a0), -halfLen],
      [radius * Math.cos(a1), radius * Math.sin(a1), -halfLen],
      [radius * Math.cos(a1), radius * Math.sin(a1), halfLen],
      [radius * Math.cos(a0), radius * Math.sin(a0), halfLen],
    ];
    const pts: [number, number][] = [];
    let depth = 0;
    let behind = false;
    for (const c of quad) {
      const [px, py, z] = project(view, vadd(pose.p, matMulVec(pose.r, c)));
      if (z <= 0) behind = true;
      pts.push([px, py]);
      depth += z;
    }
    if (behind) continue;
    out.push({
      pts,
      depth: depth / 4,
      fill: shade(rgb, normal, alpha),
      stroke: highlight ? "#ffffff" : undefined,
    });
  }
}

export interface RenderInput {
  camera: CameraState;
  statics: StaticSnap[];
  components: ComponentSnap[];
  robot: LinkSegment[];
  selected: string | null;
}

const ctxCache = new WeakMap<HTMLCanvasElement, CanvasRenderingContext2D | null>();

function context2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  if (!ctxCache.has(canvas)) {
    let ctx: CanvasRenderingContext2D | null = null;
    try {
      ctx = canvas.getContext("2d");
    } catch {
      ctx = null; // headless environment: interaction math still works
    }
    ctxCache.set(canvas, ctx);
  }
  return ctxCache.get(canvas) ?? null;
}

export function renderCell(canvas: HTMLCanvasElement, input: RenderInput): ViewTransform {
  const w = canvas.width;
  const h = canvas.height;
  const view = viewTransform(input.camera, w, h);
  const ctx = context2d(canvas);
  if (!ctx) return view;

  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, w, h);

  const faces: Face[] = [];
  for (const obstacle of input.statics) {
    const pose = poseFromDict(obstacle.world_pose);
    const grey: [number, number, number] = obstacle.id === "floor"
      ? [42, 52, 64] : [98, 108, 122];
    if (obstacle.shape.kind === "box") {
      boxFaces(view, pose, shapeHalfExtents(obstacle.shape), grey, 1, faces, false);
    } else {
      cylinderFaces(view, pose, obstacle.shape.radius ?? 0.05,
        (obstacle.shape.length ?? 0.1) / 2, grey, 1, faces, false);
    }
  }
  for (const comp of input.components) {
    if (comp.state === "removed") continue;   // removed parts disappear
    const pose = poseFromDict(comp.world_pose);
    const rgb = STATE_COLORS[comp.state] ?? STATE_COLORS.attached;
    const highlight = comp.id === input.selected;
    if (comp.shape.kind === "box") {
      boxFaces(view, pose, shapeHalfExtents(comp.shape), rgb, 1, faces, highlight);
    } else {
      cylinderFaces(view, pose, comp.shape.radius ?? 0.05,
        (comp.shape.length ?? 0.1) / 2, rgb, 1, faces, highlight);
    }
  }
  faces.sort((a, b) => b.depth - a.depth);
  for (const face of faces) {
    ctx.beginPath();
    ctx.moveTo(face.pts[0][0], face.pts[0][1]);
    for (const [px, py] of face.pts.slice(1)) ctx.lineTo(px, py);
    ctx.closePath();
    ctx.fillStyle = face.fill;
    ctx.fill();
    if (face.stroke) {
      ctx.strokeStyle = face.stroke;
      ctx.lineWidth = 1.5;
      ctx.stroke();
    }
  }

  // robot links as thick depth-independent strokes (always visible)
  for (const segment of input.robot) {
    const [ax, ay, az] = project(view, segment.a);
    const [bx, by, bz] = project(view, segment.b);
    if (az <= 0 || bz <= 0) continue;
    const pixelRadius = Math.max(2, (segment.radius * view.scale) / ((az + bz) / 2));
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.lineCap = "round";
    ctx.lineWidth = pixelRadius * 2;
    ctx.strokeStyle = segment.name === "tool" ? "#e8eef6" : "#c4cdd9";
    ctx.stroke();
  }
  return view;
}
