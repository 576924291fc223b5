// Minimal 3D math for rendering and picking. Quaternions are (w, x, y, z).

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];
export type Mat3 = number[]; // row-major, 9 entries

export const vadd = (a: Vec3, b: Vec3): Vec3 => [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
export const vsub = (a: Vec3, b: Vec3): Vec3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
export const vscale = (a: Vec3, s: number): Vec3 => [a[0] * s, a[1] * s, a[2] * s];
export const vdot = (a: Vec3, b: Vec3): number => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
export const vcross = (a: Vec3, b: Vec3): Vec3 => [
  a[1] * b[2] - a[2] * b[1],
  a[2] * b[0] - a[0] * b[2],
  a[0] * b[1] - a[1] * b[0],
];
export const vnorm = (a: Vec3): number => Math.sqrt(vdot(a, a));
export const vunit = (a: Vec3): Vec3 => {
  const n = vnorm(a);
  return n > 0 ? vscale(a, 1 / n) : [0, 0, 1];
};

export function quatToMat(q: Quat): Mat3 {
  const [w, x, y, z] = q;
  return [
    1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
    2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
    2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
  ];
}

export const matMulVec = (m: Mat3, v: Vec3): Vec3 => [
  m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
  m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
  m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
];

export function matMul(a: Mat3, b: Mat3): Mat3 {
  const out = new Array<number>(9);
  for (let r = 0; r < 3; r++) {
    for (let c = 0; c < 3; c++) {
      out[r * 3 + c] = a[r * 3] * b[c] + a[r * 3 + 1] * b[3 + c] + a[r * 3 + 2] * b[6 + c];
    }
  }
  return out;
}

export const matT = (m: Mat3): Mat3 => [m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]];

export function axisAngleMat(axis: Vec3, angle: number): Mat3 {
  const [x, y, z] = vunit(axis);
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const t = 1 - c;
  return [
    c + x * x * t, x * y * t - z * s, x * z * t + y * s,
    y * x * t + z * s, c + y * y * t, y * z * t - x * s,
    z * x * t - y * s, z * y * t + x * s, c + z * z * t,
  ];
}

export interface Pose {
  p: Vec3;
  r: Mat3;
}

export const poseFromDict = (d: { position: number[]; quaternion: number[] }): Pose => ({
  p: d.position as Vec3,
  r: quatToMat(d.quaternion as Quat),
});

export const poseApply = (pose: Pose, v: Vec3): Vec3 => vadd(pose.p, matMulVec(pose.r, v));

export const poseCompose = (a: Pose, b: Pose): Pose => ({
  p: poseApply(a, b.p),
  r: matMul(a.r, b.r),
});
