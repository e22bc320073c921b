// Drag-to-translate and orbit math.

import { describe, expect, it } from "vitest";

import { dragTranslation, orbitPose, translateOps } from "../src/gizmo.js";
import { CameraDoc } from "../src/types.js";

const cam: CameraDoc = {
  fx: 70,
  fy: 70,
  cx: 31.5,
  cy: 31.5,
  width: 64,
  height: 64,
  pose: {
    rotation: [
      [1, 0, 0],
      [0, 1, 0],
      [0, 0, 1],
    ],
    translation: [0, 0, 0],
  },
};

describe("dragTranslation", () => {
  it("returns null for a zero-length drag", () => {
    expect(dragTranslation("x", cam, [0, 0, 4], 0, 0)).toBeNull();
  });

  it("produces exactly one non-zero world component", () => {
    for (const axis of ["x", "y", "z"] as const) {
      const delta = dragTranslation(axis, cam, [0.2, -0.1, 4], 12, 5);
      expect(delta).not.toBeNull();
      const nonzero = delta!.filter((c) => c !== 0);
      expect(nonzero.length).toBe(1);
    }
  });

  it("moves by the on-screen amount at the anchor depth", () => {
    // at z=4 with fx=70, one meter of x spans 17.5 px: an 17.5 px drag = 1 m
    const delta = dragTranslation("x", cam, [0, 0, 4], 17.5, 0);
    expect(delta![0]).toBeCloseTo(1.0, 9);
  });

  it("emits one translate op per selected primitive", () => {
    const ops = translateOps(["a", "b"], [0.5, 0, 0]);
    expect(ops).toEqual([
      { op: "translate", id: "a", delta: [0.5, 0, 0] },
      { op: "translate", id: "b", delta: [0.5, 0, 0] },
    ]);
  });
});

describe("orbitPose", () => {
  const pivot: [number, number, number] = [0, 0, 4];

  it("is the identity for zero angles and dolly", () => {
    const out = orbitPose(cam.pose, pivot, 0, 0, 0);
    expect(out.rotation).toEqual(cam.pose.rotation);
    expect(out.translation).toEqual(cam.pose.translation);
  });

  it("changes the pivot distance by exactly the dolly", () => {
    const out = orbitPose(cam.pose, pivot, 0.7, -0.3, 0.5);
    const d = Math.hypot(
      out.translation[0] - pivot[0],
      out.translation[1] - pivot[1],
      out.translation[2] - pivot[2],
    );
    expect(d).toBeCloseTo(4 - 0.5, 9);
  });

  it("keeps the rotation orthonormal", () => {
    const out = orbitPose(cam.pose, pivot, 1.1, 0.4, 0);
    const r = out.rotation;
    for (let i = 0; i < 3; i++)
      for (let j = 0; j < 3; j++) {
        const dot = r[0][i] * r[0][j] + r[1][i] * r[1][j] + r[2][i] * r[2][j];
        expect(dot).toBeCloseTo(i === j ? 1 : 0, 9);
      }
  });

  it("a half-turn yaw negates the view direction", () => {
    const out = orbitPose(cam.pose, pivot, Math.PI, 0, 0);
    expect(out.rotation[0][2]).toBeCloseTo(-cam.pose.rotation[0][2], 9);
    expect(out.rotation[2][2]).toBeCloseTo(-cam.pose.rotation[2][2], 9);
  });
});
