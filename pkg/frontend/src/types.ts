// Wire shapes of the twin server's HTTP API and event stream.

export interface PoseDict {
  position: [number, number, number];
  quaternion: [number, number, number, number]; // w, x, y, z
}

export interface ShapeDict {
  kind: "box" | "cylinder";
  extents?: number[];
  radius?: number;
  length?: number;
}

export interface ComponentSnap {
  id: string;
  state: "attached" | "detached" | "removed";
  group: string;
  strategy: string;
  tool_id: string;
  predecessors: string[];
  shape: ShapeDict;
  local_pose: PoseDict;
  world_pose: PoseDict;
}

export interface StaticSnap {
  id: string;
  shape: ShapeDict;
  world_pose: PoseDict;
}

export interface JointDesc {
  position: number[];
  quaternion: number[];
  axis: number[];
  type: "prismatic" | "revolute";
}

export interface RobotDesc {
  name: string;
  joints: JointDesc[];
  flange_offset: PoseDict;
  limits: [number, number][];
  capsules: { name: string; frame: number; a: number[]; b: number[]; radius: number }[];
}

export interface ToolDesc {
  tcp_offset: PoseDict;
  capsule: { a: number[]; b: number[]; radius: number };
}

export interface Snapshot {
  type: "snapshot";
  t_us: number;
  scene: {
    evb_type_id: string;
    scene_hash: string;
    evb_base_frame: string;
    evb_base_pose: PoseDict;
    components: ComponentSnap[];
    statics: StaticSnap[];
    tools: string[];
  };
  robot: RobotDesc;
  tools: Record<string, ToolDesc>;
  q: number[];
  current_tool: string | null;
  records: RecordDict[];
  busy: boolean;
}

export interface RecordDict {
  index: number;
  component_id: string;
  strategy: string;
  outcome: "completed" | "aborted";
  duration_s: number;
  abort_reason?: string;
  terminal_tcp?: PoseDict | null;
}

export type TwinEvent =
  | Snapshot
  | { type: "joint_state"; seq: number; t_us: number; q: number[]; tool_rpm: number; gripper: string; vacuum: string }
  | { type: "component_state"; seq: number; t_us: number; id: string; state: ComponentSnap["state"] }
  | { type: "phase"; seq: number; t_us: number; record_index: number; component_id: string; phase: string; status: "start" | "end" }
  | { type: "record"; seq: number; t_us: number; index: number; component_id: string; outcome: string; duration_s?: number; reason?: string }
  | { type: "tool"; seq: number; t_us: number; action: "mount" | "unmount"; tool_id: string }
  | { type: "pose_update"; seq: number; t_us: number; transform: PoseDict; residual_m: number }
  | { type: "heartbeat" }
  | { type: "gap"; seq: number };

export interface ReplayReport {
  records: { index: number; component_id: string; pos_dev_m?: number; rot_dev_rad?: number }[];
  max_pos_dev_m: number;
  max_rot_dev_rad: number;
}

export interface ApiError {
  error: string;
  detail: string;
  blockers?: string[];
  component_id?: string;
}
