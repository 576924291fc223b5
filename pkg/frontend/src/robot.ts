// Client-side forward kinematics of the cell robot, driven by the chain
// description in the snapshot. Produces world capsule segments for drawing.

import { axisAngleMat, matMul, matMulVec, Pose, poseFromDict, vadd, vscale, Vec3 } from "./math.js";
import { RobotDesc, ToolDesc } from "./types.js";

export interface LinkSegment {
  name: string;
  a: Vec3;
  b: Vec3;
  radius: number;
}

export function chainFrames(robot: RobotDesc, q: number[]): Pose[] {
  const frames: Pose[] = [];
  let p: Vec3 = [0, 0, 0];
  let r = [1, 0, 0, 0, 1, 0, 0, 0, 1];
  robot.joints.forEach((joint, i) => {
    const fixed = poseFromDict({ position: joint.position, quaternion: joint.quaternion });
    p = vadd(p, matMulVec(r, fixed.p));
    r = matMul(r, fixed.r);
    const axisWorld = matMulVec(r, joint.axis as Vec3);
    if (joint.type === "prismatic") {
      p = vadd(p, vscale(axisWorld, q[i]));
    } else {
      r = matMul(r, axisAngleMat(joint.axis as Vec3, q[i]));
    }
    frames.push({ p, r });
  });
  const flange = poseFromDict(robot.flange_offset);
  frames.push({
    p: vadd(p, matMulVec(r, flange.p)),
    r: matMul(r, flange.r),
  });
  return frames;
}

export function robotSegments(
  robot: RobotDesc,
  q: number[],
  tool: ToolDesc | null,
): LinkSegment[] {
  const frames = chainFrames(robot, q);
  const out: LinkSegment[] = robot.capsules.map((c) => {
    const f = frames[c.frame];
    return {
      name: c.name,
      a: vadd(f.p, matMulVec(f.r, c.a as Vec3)),
      b: vadd(f.p, matMulVec(f.r, c.b as Vec3)),
      radius: c.radius,
    };
  });
  if (tool) {
    const f = frames[frames.length - 1];
    out.push({
      name: "tool",
      a: vadd(f.p, matMulVec(f.r, tool.capsule.a as Vec3)),
      b: vadd(f.p, matMulVec(f.r, tool.capsule.b as Vec3)),
      radius: tool.capsule.radius,
    });
  }
  return out;
}
