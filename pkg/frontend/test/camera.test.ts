import { describe, expect, it } from "vitest";

import { CameraPlayer } from "../src/camera.js";
import type { CameraPath } from "../src/types.js";

const path: CameraPath = {
  keyframes: [
    { position: [0, 1.6, 0], yaw: 0, dwell_s: 0 },
    { position: [4, 1.6, 0], yaw: Math.PI / 2, dwell_s: 2 },
    { position: [10, 1.6, 0], yaw: Math.PI / 2, dwell_s: 2 },
    { position: [0, 1.6, 0], yaw: 0, dwell_s: 0 },
  ],
};

describe("CameraPlayer", () => {
  it("holds each keyframe pose at its keyframe time", () => {
    const player = new CameraPlayer(path);
    for (let i = 0; i < path.keyframes.length; i++) {
      const pose = player.poseAt(player.keyframeTime(i));
      expect(pose.position).toEqual(path.keyframes[i]!.position);
      expect(pose.yaw).toBeCloseTo(path.keyframes[i]!.yaw, 12);
    }
  });

  it("travels at constant speed between keyframes", () => {
    const player = new CameraPlayer(path, 2.0);
    // first segment: 4 m at 2 m/s -> 2 s; halfway after 1 s
    const pose = player.poseAt(1.0);
    expect(pose.position[0]).toBeCloseTo(2.0, 12);
  });

  it("dwells for dwell_s before moving on", () => {
    const player = new CameraPlayer(path, 2.0);
    const arrive = player.keyframeTime(1);
    const during = player.poseAt(arrive + 1.0); // inside the 2 s dwell
    expect(during.position).toEqual([4, 1.6, 0]);
    const after = player.poseAt(arrive + 2.5); // moving again
    expect(after.position[0]).toBeGreaterThan(4);
  });

  it("total duration is dwells plus travel time", () => {
    const player = new CameraPlayer(path, 2.0);
    // travel 4 + 6 + 10 m at 2 m/s = 10 s, dwells 2 + 2 s
    expect(player.duration).toBeCloseTo(14, 12);
  });

  it("pause freezes advance; resume continues", () => {
    const player = new CameraPlayer(path, 2.0);
    player.advance(1.0);
    player.pause();
    const frozen = player.advance(5.0);
    expect(frozen.position[0]).toBeCloseTo(2.0, 12);
    player.resume();
    const moved = player.advance(1.0);
    expect(moved.position[0]).toBeCloseTo(4.0, 12);
  });

  it("clamps past the end unless looping", () => {
    const player = new CameraPlayer(path, 2.0);
    const end = player.poseAt(999);
    expect(end.position).toEqual([0, 1.6, 0]);
    expect(player.poseAt(-1).position).toEqual([0, 1.6, 0]);
  });

  it("single-keyframe path (empty mall) stays put", () => {
    const player = new CameraPlayer({ keyframes: [{ position: [0, 1.6, 0], yaw: 0, dwell_s: 0 }] });
    expect(player.duration).toBe(0);
    expect(player.advance(10).position).toEqual([0, 1.6, 0]);
  });
});
