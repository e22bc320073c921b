// Picking math against the backend id-buffer oracle (generated fixture).

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { intersectConvex, pickPrimitive, pixelRay } from "../src/pick.js";
import { SceneDoc } from "../src/types.js";

interface PickFixture {
  scene: SceneDoc;
  cases: Array<{ u: number; v: number; expected: string | null }>;
}

const fixture: PickFixture = JSON.parse(
  readFileSync(new URL("./fixtures/pick_cases.json", import.meta.url), "utf-8"),
);

describe("pickPrimitive", () => {
  it("agrees with the backend id buffer on every fixture pixel", () => {
    for (const c of fixture.cases) {
      // +0.5: integer pixel indices address pixel centers
      const got = pickPrimitive(fixture.scene, c.u + 0.5, c.v + 0.5);
      expect(got, `pixel (${c.u}, ${c.v})`).toBe(c.expected);
    }
    expect(fixture.cases.some((c) => c.expected !== null)).toBe(true);
    expect(fixture.cases.some((c) => c.expected === null)).toBe(true);
  });

  it("slab intersection handles head-on and miss cases", () => {
    const cube = {
      id: "q",
      halfspaces: [
        { normal: [1, 0, 0], offset: 1 },
        { normal: [-1, 0, 0], offset: 1 },
        { normal: [0, 1, 0], offset: 1 },
        { normal: [0, -1, 0], offset: 1 },
        { normal: [0, 0, 1], offset: 1 },
        { normal: [0, 0, -1], offset: 1 },
      ],
    };
    const hit = intersectConvex({ origin: [0, 0, -5], dir: [0, 0, 1] }, cube);
    expect(hit).not.toBeNull();
    expect(hit![0]).toBeCloseTo(4, 12);
    expect(hit![1]).toBeCloseTo(6, 12);
    expect(intersectConvex({ origin: [5, 0, -5], dir: [0, 0, 1] }, cube)).toBeNull();
    expect(intersectConvex({ origin: [0, 0, 5], dir: [0, 0, 1] }, cube)).toBeNull();
  });

  it("builds unit rays through the principal point", () => {
    const cam = fixture.scene.camera;
    const ray = pixelRay(cam, cam.cx, cam.cy);
    const len = Math.hypot(ray.dir[0], ray.dir[1], ray.dir[2]);
    expect(len).toBeCloseTo(1, 12);
  });
});
