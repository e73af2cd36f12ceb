import { describe, expect, it } from "vitest";
import {
  DragSession,
  WHEEL_STEP,
  axisParameter,
  frameAxis,
  planeHit,
  signedAngleDeg,
  type Vec3,
} from "../src/gizmo";
import type { Frame } from "../src/protocol";

const IDENTITY: Frame = {
  rotation: [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
  origin: [0, 0, 0],
};

// gizmo rotated 90 degrees about z: local x points along world +y
const ROT_Z90: Frame = {
  rotation: [[0, -1, 0], [1, 0, 0], [0, 0, 1]],
  origin: [10, 0, 0],
};

function ray(origin: Vec3, dir: Vec3) {
  return { origin, dir };
}

describe("axisParameter", () => {
  it("finds the closest parameter on a perpendicular ray", () => {
    // x axis through origin, ray shooting down onto x=3
    const t = axisParameter([0, 0, 0], [1, 0, 0], [3, 0, 10], [0, 0, -1]);
    expect(t).toBeCloseTo(3, 10);
  });

  it("handles skew rays", () => {
    const t = axisParameter([0, 0, 0], [0, 0, 1], [5, -4, 7], [-1, 0.8, 0.1]);
    expect(t).not.toBeNull();
    // closest point on the z axis to that ray stays near z = 7.xx
    expect(Math.abs((t as number) - 7)).toBeLessThan(2);
  });

  it("returns null for a ray parallel to the axis", () => {
    expect(axisParameter([0, 0, 0], [1, 0, 0], [0, 5, 0], [1, 0, 0])).toBeNull();
  });
});

describe("planeHit and signedAngleDeg", () => {
  it("intersects a ray with a plane", () => {
    const hit = planeHit([0, 0, 5], [0, 0, 1], [1, 2, 10], [0, 0, -2]);
    expect(hit).toEqual([1, 2, 5]);
  });

  it("returns null for a ray in the plane", () => {
    expect(planeHit([0, 0, 0], [0, 0, 1], [1, 1, 3], [1, 0, 0])).toBeNull();
  });

  it("measures right-handed signed angles", () => {
    expect(signedAngleDeg([1, 0, 0], [0, 1, 0], [0, 0, 1])).toBeCloseTo(90, 10);
    expect(signedAngleDeg([1, 0, 0], [0, 1, 0], [0, 0, -1])).toBeCloseTo(-90, 10);
    expect(signedAngleDeg([1, 0, 0], [-1, 0, 0], [0, 0, 1])).toBeCloseTo(180, 10);
  });
});

describe("frameAxis", () => {
  it("reads world axis directions from the rotation columns", () => {
    expect(frameAxis(ROT_Z90, "x")).toEqual([0, 1, 0]);
    expect(frameAxis(ROT_Z90, "y")).toEqual([-1, 0, 0]);
    expect(frameAxis(ROT_Z90, "z")).toEqual([0, 0, 1]);
  });
});

describe("DragSession", () => {
  it("accumulates a translate delta along the local axis", () => {
    // local x is world +y: dragging 4 world-units along +y reads as x+4
    const session = new DragSession("translate", "x", ROT_Z90,
      ray([10, 0, 10], [0, 0, -1]), [0, 0, -1]);
    expect(session.update(ray([10, 4, 10], [0, 0, -1]))).toBe(true);
    expect(session.params()).toEqual({ delta: [4, 0, 0] });
    expect(session.isNoop()).toBe(false);
  });

  it("reports the TOTAL delta on every tick, not increments", () => {
    const session = new DragSession("translate", "z", IDENTITY,
      ray([0, -10, 0], [0, 1, 0]), [0, 1, 0]);
    session.update(ray([0, -10, 2], [0, 1, 0]));
    expect(session.params()).toEqual({ delta: [0, 0, 2] });
    session.update(ray([0, -10, 7], [0, 1, 0]));
    expect(session.params()).toEqual({ delta: [0, 0, 7] });
  });

  it("turns ring-plane motion into signed degrees", () => {
    const session = new DragSession("rotate", "z", IDENTITY,
      ray([5, 0, 10], [0, 0, -1]), [0, 0, -1]);
    expect(session.update(ray([0, 5, 10], [0, 0, -1]))).toBe(true);
    const params = session.params() as { axis: string; angle: number };
    expect(params.axis).toBe("z");
    expect(params.angle).toBeCloseTo(90, 6);
  });

  it("nudges by exactly 0.1 per wheel tick", () => {
    const session = new DragSession("translate", "y", IDENTITY,
      ray([0, 0, 10], [0, 0, -1]), [0, 0, -1]);
    session.wheel(1);
    session.wheel(1);
    session.wheel(-1);
    expect(WHEEL_STEP).toBe(0.1);
    const { delta } = session.params() as { delta: number[] };
    expect(delta[1]).toBeCloseTo(0.1, 12);
  });

  it("scales along one axis and uniformly from the center handle", () => {
    const axial = new DragSession("scale", "x", IDENTITY,
      ray([1, 0, 10], [0, 0, -1]), [0, 0, -1]);
    axial.update(ray([1.5, 0, 10], [0, 0, -1])); // +0.5 handle-lengths
    expect(axial.params()).toEqual({ factors: [1.5, 1, 1] });

    const uniform = new DragSession("scale", "uniform", IDENTITY,
      ray([2, 0, 10], [0, 0, -1]), [0, 0, -1]);
    uniform.update(ray([4, 0, 10], [0, 0, -1])); // radius doubled
    const { factors } = uniform.params() as { factors: number[] };
    expect(factors[0]).toBeCloseTo(2, 6);
    expect(factors[1]).toBeCloseTo(2, 6);
    expect(factors[2]).toBeCloseTo(2, 6);
  });

  it("clamps scale factors away from zero", () => {
    const session = new DragSession("scale", "x", IDENTITY,
      ray([1, 0, 10], [0, 0, -1]), [0, 0, -1]);
    session.update(ray([-5, 0, 10], [0, 0, -1]));
    const { factors } = session.params() as { factors: number[] };
    expect(factors[0]).toBe(0.05);
  });
});
