/** Plays a server-computed camera path: constant travel speed between
 * keyframes, dwelling at each keyframe for its dwell_s. User input pauses
 * playback. No geometry is invented here; the path is the server's. */

import type { CameraPath, Keyframe, Vec3 } from "./types.js";

export interface CameraPose {
  position: Vec3;
  yaw: number;
}

const TRAVEL_SPEED_M_PER_S = 2.0;

function distance(a: Vec3, b: Vec3): number {
  return Math.hypot(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
}

function lerp(a: Vec3, b: Vec3, t: number): Vec3 {
  // exact endpoints: a + (b-a)*1 need not equal b in floating point
  if (t <= 0) return a;
  if (t >= 1) return b;
  return [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t];
}

interface Segment {
  start: number;
  duration: number;
  kind: "dwell" | "travel";
  from: Keyframe;
  to: Keyframe;
}

export class CameraPlayer {
  private segments: Segment[] = [];
  readonly duration: number;
  private t = 0;
  paused = false;
  looping = false;

  constructor(readonly path: CameraPath, speed: number = TRAVEL_SPEED_M_PER_S) {
    let clock = 0;
    const frames = path.keyframes;
    for (let i = 0; i < frames.length; i++) {
      const frame = frames[i]!;
      if (frame.dwell_s > 0) {
        this.segments.push({ start: clock, duration: frame.dwell_s, kind: "dwell", from: frame, to: frame });
        clock += frame.dwell_s;
      }
      const next = frames[i + 1];
      if (next) {
        const travel = distance(frame.position, next.position) / speed;
        if (travel > 0) {
          this.segments.push({ start: clock, duration: travel, kind: "travel", from: frame, to: next });
          clock += travel;
        }
      }
    }
    this.duration = clock;
  }

  /** Pose at an absolute path time (clamped to the ends). */
  poseAt(time: number): CameraPose {
    const frames = this.path.keyframes;
    const first = frames[0];
    if (!first) return { position: [0, 0, 0], yaw: 0 };
    if (time <= 0 || this.segments.length === 0) {
      return { position: first.position, yaw: first.yaw };
    }
    for (const seg of this.segments) {
      if (time <= seg.start + seg.duration) {
        if (seg.kind === "dwell") return { position: seg.from.position, yaw: seg.from.yaw };
        const t = (time - seg.start) / seg.duration;
        const yaw = t >= 1 ? seg.to.yaw : seg.from.yaw + (seg.to.yaw - seg.from.yaw) * t;
        return { position: lerp(seg.from.position, seg.to.position, t), yaw };
      }
    }
    const last = frames[frames.length - 1]!;
    return { position: last.position, yaw: last.yaw };
  }

  /** Path time at which keyframe i is (first) held or reached. */
  keyframeTime(index: number): number {
    const frames = this.path.keyframes;
    let clock = 0;
    for (let i = 0; i < frames.length; i++) {
      if (i === index) return clock;
      const frame = frames[i]!;
      clock += frame.dwell_s;
      const next = frames[i + 1];
      if (next) clock += this.segmentTravel(frame, next);
    }
    return clock;
  }

  private segmentTravel(a: Keyframe, b: Keyframe): number {
    for (const seg of this.segments) {
      if (seg.kind === "travel" && seg.from === a && seg.to === b) return seg.duration;
    }
    return 0;
  }

  advance(dt: number): CameraPose {
    if (!this.paused) {
      this.t += dt;
      if (this.looping && this.duration > 0 && this.t > this.duration) {
        this.t %= this.duration;
      }
    }
    return this.poseAt(this.t);
  }

  get time(): number {
    return this.t;
  }

  get finished(): boolean {
    return !this.looping && this.t >= this.duration;
  }

  pause(): void {
    this.paused = true;
  }

  resume(): void {
    this.paused = false;
  }

  reset(): void {
    this.t = 0;
    this.paused = false;
  }
}
